"""Independent numerical integrator for the time-dependent Schrodinger equation.

Propagates i d|psi>/dt = H(t)|psi> for any H(t) given as coefficient
functions of (Jx, Jy, Jz), using an adaptive embedded Dormand-Prince 5(4)
pair with per-step error control.  This is the ground truth the analytic
propagators are validated against, so it deliberately shares no structure
with them: the Hamiltonian is re-evaluated from the coefficient functions
at every stage and nothing is cached or interpolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .su2 import Spin, build_operators

TOL_MIN = 1e-13
TOL_MAX = 1e-6
DEFAULT_TOL = 1e-10

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0

# Dormand-Prince 5(4) tableau; row i of _A feeds stage i, _B5 is the
# fifth-order solution weight vector (equal to the last _A row: FSAL),
# _E = b5 - b4 gives the embedded error estimate.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
])


class IntegrationError(RuntimeError):
    """Step-size underflow or other failure; t_fail records where."""

    def __init__(self, message: str, t_fail: float):
        super().__init__(message)
        self.t_fail = t_fail


@dataclass(frozen=True)
class DriveFunction:
    """Field coefficients of H(t) = cx(t)Jx + cy(t)Jy + cz(t)Jz.

    A coefficient set to None is identically zero (and skipped).  The open
    interval (t_min, t_max) is the domain on which coefficients are finite.
    """

    coeff_x: Optional[Callable[[float], float]] = None
    coeff_y: Optional[Callable[[float], float]] = None
    coeff_z: Optional[Callable[[float], float]] = None
    t_min: float = -math.inf
    t_max: float = math.inf

    @classmethod
    def constant(cls, cx: float, cy: float, cz: float) -> "DriveFunction":
        return cls(coeff_x=(lambda t: cx), coeff_y=(lambda t: cy), coeff_z=(lambda t: cz))

    @classmethod
    def from_tangent(cls, drive) -> "DriveFunction":
        """Coefficients (eta1, 0, eta2*tan(gamma*t)) of a tangent-pulse drive."""
        eta1, eta2, gamma = drive.eta1, drive.eta2, drive.gamma
        edge = (math.pi / 2) / gamma
        return cls(
            coeff_x=(lambda t: eta1),
            coeff_z=(lambda t: eta2 * math.tan(gamma * t)),
            t_min=-edge,
            t_max=edge,
        )

    @classmethod
    def from_counterdiabatic(cls, cd) -> "DriveFunction":
        """Tangent coefficients plus the auxiliary y field of the CD protocol.

        The auxiliary amplitude is -cd_rate(t): the mixing angle delta_cd
        grows at the rate the field's polar angle shrinks, and it is the
        polar-angle rate that enters the transitionless Hamiltonian.
        """
        from .counterdiabatic import cd_rate

        base = cls.from_tangent(cd.base)
        return cls(
            coeff_x=base.coeff_x,
            coeff_y=(lambda t: -cd_rate(cd, t)),
            coeff_z=base.coeff_z,
            t_min=base.t_min,
            t_max=base.t_max,
        )

    def require_domain(self, t0: float, t1: float) -> None:
        lo, hi = min(t0, t1), max(t0, t1)
        if not (self.t_min < lo and hi < self.t_max):
            raise ValueError(
                f"integration span [{t0}, {t1}] outside the open domain "
                f"({self.t_min}, {self.t_max})"
            )


@dataclass(frozen=True)
class IntegrationResult:
    """Outcome of one adaptive integration.

    max_norm_drift is the largest deviation of any column norm from 1 seen
    at accepted steps; it is monitored, never silently corrected.
    """

    final_state: Optional[np.ndarray]
    final_propagator: Optional[np.ndarray]
    steps_taken: int
    max_norm_drift: float


def _make_rhs(drive: DriveFunction, spin: Spin):
    jx, jy, jz = build_operators(spin)
    terms = []
    for coeff, mat in ((drive.coeff_x, jx), (drive.coeff_y, jy), (drive.coeff_z, jz)):
        if coeff is not None:
            terms.append((coeff, -1j * mat))
    if not terms:
        zero = np.zeros((spin.dim, spin.dim), dtype=complex)
        terms.append(((lambda t: 0.0), zero))

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        coeff, mat = terms[0]
        out = coeff(t) * (mat @ y)
        for coeff, mat in terms[1:]:
            out += coeff(t) * (mat @ y)
        return out

    return rhs


def _rk_step(rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray):
    """One Dormand-Prince step from (t, y); returns (y5, err_vec, k_last)."""
    k = [k1]
    for i in range(1, 7):
        acc = _A[i][0] * k[0]
        for j in range(1, i):
            aij = _A[i][j]
            if aij != 0.0:
                acc += aij * k[j]
        k.append(rhs(t + _C[i] * h, y + h * acc))
    y5 = y + h * (
        _B5[0] * k[0] + _B5[2] * k[2] + _B5[3] * k[3] + _B5[4] * k[4] + _B5[5] * k[5]
    )
    err = h * (
        _E[0] * k[0] + _E[2] * k[2] + _E[3] * k[3] + _E[4] * k[4]
        + _E[5] * k[5] + _E[6] * k[6]
    )
    return y5, err, k[6]


def _integrate(rhs, t0: float, t1: float, y0: np.ndarray, tol: float):
    """Adaptive propagation of the (possibly matrix-valued) state y0.

    Returns (y, accepted_steps, max_norm_drift).  The error norm spans all
    columns, so every column individually meets the per-step tolerance.
    """
    if t1 == t0:
        return y0.copy(), 0, 0.0
    span = t1 - t0
    direction = math.copysign(1.0, span)

    t = t0
    y = y0.copy()
    k1 = rhs(t, y)

    # Hairer-style cheap initial step guess, clamped to the span.
    scale = tol * (1.0 + np.abs(y))
    d0 = math.sqrt(np.mean(np.abs(y / scale) ** 2))
    d1 = math.sqrt(np.mean(np.abs(k1 / scale) ** 2))
    h = 0.01 * d0 / d1 if d1 > 1e-30 else abs(span) / 100.0
    h = direction * min(h, abs(span))

    steps = 0
    max_drift = 0.0
    while (t1 - t) * direction > 0.0:
        if abs(h) > abs(t1 - t):
            h = t1 - t
        min_step = 16.0 * np.finfo(float).eps * max(abs(t), abs(span))
        y_new, err_vec, k_last = _rk_step(rhs, t, y, h, k1)
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(np.mean(np.abs(err_vec / scale) ** 2))
        if err <= 1.0:
            t = t1 if abs(h) >= abs(t1 - t) else t + h
            y = y_new
            k1 = k_last  # first-same-as-last
            steps += 1
            drift = np.abs(np.sqrt(np.sum(np.abs(y) ** 2, axis=0)) - 1.0).max()
            max_drift = max(max_drift, float(drift))
            factor = _MAX_FACTOR if err == 0.0 else min(
                _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            )
        else:
            if abs(h) <= min_step:
                raise IntegrationError(
                    f"step size underflow at t={t} (h={h}, local error {err:.3e}x tol)",
                    t_fail=t,
                )
            factor = max(_MIN_FACTOR, min(1.0, _SAFETY * err ** -0.2))
        h = h * factor
        if abs(h) < min_step:
            h = direction * min_step
    return y, steps, max_drift


def _validate_tol(tol: float) -> None:
    if not TOL_MIN <= tol <= TOL_MAX:
        raise ValueError(f"tol={tol} outside [{TOL_MIN}, {TOL_MAX}]")


def integrate_state(drive: DriveFunction, spin: Spin, psi0: np.ndarray,
                    t0: float, t1: float, tol: float = DEFAULT_TOL) -> IntegrationResult:
    """Propagate a normalized state from t0 to t1 with local error per step <= tol."""
    _validate_tol(tol)
    drive.require_domain(t0, t1)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (spin.dim,):
        raise ValueError(f"psi0 must have shape ({spin.dim},), got {psi0.shape}")
    norm = np.linalg.norm(psi0)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"psi0 must be normalized, got norm {norm}")
    rhs = _make_rhs(drive, spin)
    y, steps, drift = _integrate(rhs, t0, t1, psi0.reshape(-1, 1), tol)
    return IntegrationResult(
        final_state=y[:, 0],
        final_propagator=None,
        steps_taken=steps,
        max_norm_drift=drift,
    )


def integrate_propagator(drive: DriveFunction, spin: Spin, t0: float, t1: float,
                         tol: float = DEFAULT_TOL) -> IntegrationResult:
    """Integrate every Jz basis state to assemble the full propagator U(t1, t0).

    The basis columns advance through one shared adaptive step sequence (the
    error norm covers all of them jointly), which is equivalent to, and a few
    times faster than, integrating the columns one at a time.
    """
    _validate_tol(tol)
    drive.require_domain(t0, t1)
    rhs = _make_rhs(drive, spin)
    y0 = np.eye(spin.dim, dtype=complex)
    y, steps, drift = _integrate(rhs, t0, t1, y0, tol)
    return IntegrationResult(
        final_state=None,
        final_propagator=y,
        steps_taken=steps,
        max_norm_drift=drift,
    )
