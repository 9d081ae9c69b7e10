"""Tangent-pulse sweep protocol with exact analytic propagators.

The driving field is (eta1, 0, eta2*tan(gamma*t)) on t in (-pi/2g, +pi/2g).
When the amplitudes satisfy eta1^2 = eta2^2 + gamma^2 (the matching
condition) the evolution factorizes exactly into a frame rotation, a
diagonal phase and the inverse frame rotation, which this module builds
from the su2 primitives.  It also provides the diabatic bases and energies,
the full-sweep population-inversion limit, and the transition analysis for
pulses truncated at |t| = tau_c.

Throughout, eta1 is the natural energy unit and 1/eta1 the time unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .su2 import Spin, build_operators, compose, dagger, wigner_d, z_phase

# Guard band on |gamma*t| < pi/2: evaluating tan/sec closer to the pole than
# this is rejected instead of silently overflowing.
DOMAIN_GUARD = 1e-9
# Relative defect allowed on eta1^2 = eta2^2 + gamma^2 for factory-built drives.
MATCHING_RTOL = 1e-12
# Agreement required between closed-form window geometry routes.
GEOMETRY_ATOL = 1e-12
# |amplitude|^2 bookkeeping tolerance (double stochasticity, unit norms).
PROBABILITY_ATOL = 1e-12


@dataclass(frozen=True)
class TangentDrive:
    """Tangent-pulse field parameters (angular frequencies, hbar = 1).

    Use make_matched_drive or drive_from_ratio to build instances; both
    guarantee the matching condition eta1^2 = eta2^2 + gamma^2 on which the
    analytic propagator relies.  matching_defect reports how far an instance
    is from that condition (nonzero only for deliberately detuned drives).
    """

    eta1: float
    eta2: float
    gamma: float

    def __post_init__(self):
        if not (self.eta1 > 0 and self.eta2 > 0 and self.gamma > 0):
            raise ValueError(
                f"drive frequencies must be positive, got "
                f"(eta1, eta2, gamma) = ({self.eta1}, {self.eta2}, {self.gamma})"
            )
        if self.gamma >= self.eta1:
            raise ValueError(
                f"sweep frequency gamma={self.gamma} must stay below eta1={self.eta1}"
            )

    @property
    def phi(self) -> float:
        """Frame tilt angle -arcsin(gamma/eta1) of the rotating-frame transform."""
        return -math.asin(self.gamma / self.eta1)

    @property
    def matching_defect(self) -> float:
        """Relative defect of eta1^2 = eta2^2 + gamma^2 (0 for matched drives)."""
        return abs(self.eta1**2 - self.eta2**2 - self.gamma**2) / self.eta1**2

    @property
    def t_max(self) -> float:
        """Upper end of the open domain (-pi/2g, +pi/2g), minus the guard band."""
        return (math.pi / 2 - DOMAIN_GUARD) / self.gamma

    def require_in_domain(self, t: float) -> None:
        if not np.isfinite(t) or abs(t) * self.gamma >= math.pi / 2 - DOMAIN_GUARD:
            raise ValueError(
                f"field singularity: t={t} outside |gamma*t| < pi/2 "
                f"(domain |t| < {self.t_max})"
            )


def make_matched_drive(eta1_raw: float, eta2_raw: float, gamma: float,
                       route: str = "tune_x") -> TangentDrive:
    """Build a drive satisfying the matching condition from raw amplitudes.

    route "tune_x" keeps eta2 and resets the transverse amplitude to
    eta1 = sqrt(eta2^2 + gamma^2).  route "rescale_all" keeps the ratio
    eta1:eta2 and rescales both by gamma / sqrt(eta1_raw^2 - eta2_raw^2),
    which requires eta1_raw > eta2_raw.
    """
    if not (eta1_raw > 0 and eta2_raw > 0 and gamma > 0):
        raise ValueError(
            f"drive frequencies must be positive, got "
            f"({eta1_raw}, {eta2_raw}, {gamma})"
        )
    if route == "tune_x":
        drive = TangentDrive(math.hypot(eta2_raw, gamma), eta2_raw, gamma)
    elif route == "rescale_all":
        if eta1_raw <= eta2_raw:
            raise ValueError(
                "unmatched: field cannot be normalized "
                f"(needs eta1_raw > eta2_raw, got {eta1_raw} <= {eta2_raw})"
            )
        scale = gamma / math.sqrt(eta1_raw**2 - eta2_raw**2)
        drive = TangentDrive(scale * eta1_raw, scale * eta2_raw, gamma)
    else:
        raise ValueError(f"unknown route {route!r}; use 'tune_x' or 'rescale_all'")
    if drive.matching_defect > MATCHING_RTOL:
        raise ValueError(f"matching defect {drive.matching_defect} after {route}")
    return drive


def drive_from_ratio(eta1: float, gamma_over_eta1: float) -> TangentDrive:
    """Matched drive with given eta1 and sweep ratio gamma/eta1 in (0, 1)."""
    if not 0.0 < gamma_over_eta1 < 1.0:
        raise ValueError(f"gamma/eta1 must lie strictly in (0, 1), got {gamma_over_eta1}")
    if not eta1 > 0:
        raise ValueError(f"eta1 must be positive, got {eta1}")
    gamma = gamma_over_eta1 * eta1
    return TangentDrive(eta1, math.sqrt(eta1**2 - gamma**2), gamma)


def field_at(drive: TangentDrive, t: float) -> tuple[float, float, float]:
    """Field components (Omega_x, Omega_y, Omega_z) = (eta1, 0, eta2*tan(gamma*t))."""
    drive.require_in_domain(t)
    return drive.eta1, 0.0, drive.eta2 * math.tan(drive.gamma * t)


def theta(drive: TangentDrive, t0: float, t: float) -> float:
    """Accumulated frame phase: eta2 * integral of sec(gamma*t') from t0 to t.

    Closed form of the secant integral,
        (eta2/gamma) * [ln tan(g*t/2 + pi/4) - ln tan(g*t0/2 + pi/4)],
    antisymmetric under swapping the endpoints.
    """
    drive.require_in_domain(t0)
    drive.require_in_domain(t)
    g = drive.gamma

    def antiderivative(tp: float) -> float:
        return math.log(math.tan(g * tp / 2.0 + math.pi / 4.0))

    return (drive.eta2 / g) * (antiderivative(t) - antiderivative(t0))


def hamiltonian(drive: TangentDrive, spin: Spin, t: float) -> np.ndarray:
    """Dense H(t) = Omega_x*Jx + Omega_z*Jz at time t."""
    omega_x, _, omega_z = field_at(drive, t)
    jx, _, jz = build_operators(spin)
    return omega_x * jx + omega_z * jz


def _frame(drive: TangentDrive, spin: Spin, t: float) -> np.ndarray:
    # G(t) = exp(i*phi*Jz) exp(i*(gamma*t + pi/2)*Jy); the frame in which the
    # matched Hamiltonian becomes diagonal.
    return z_phase(spin, drive.phi) @ wigner_d(spin, drive.gamma * t + math.pi / 2)


def propagator(drive: TangentDrive, spin: Spin, t0: float, t: float) -> np.ndarray:
    """Exact evolution operator U(t, t0) = G(t) exp(i*Theta*Jz) G(t0)^dag."""
    drive.require_in_domain(t0)
    drive.require_in_domain(t)
    return compose([
        _frame(drive, spin, t),
        z_phase(spin, theta(drive, t0, t)),
        dagger(_frame(drive, spin, t0)),
    ])


@dataclass(frozen=True)
class DiabaticState:
    """One member of the exact solution family, labelled by magnetic number.

    amplitudes holds the state in the Jz basis (m descending); the overall
    phase is referenced to time t0 used at construction.
    """

    two_m: int
    amplitudes: np.ndarray
    time: float

    def __post_init__(self):
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > PROBABILITY_ATOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond tolerance")

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def diabatic_state(drive: TangentDrive, spin: Spin, two_m: int,
                   t0: float, t: float) -> DiabaticState:
    """Exact solution labelled by m: phase factor times the rotated Jz eigenstate.

    Equals the propagator from t0 applied to the family's own t0 snapshot;
    amplitudes are e^{i m Theta(t,t0)} e^{i m' phi} <m'|exp(i(gamma t + pi/2)Jy)|m>.
    """
    drive.require_in_domain(t0)
    drive.require_in_domain(t)
    col = spin.index_of(two_m)
    rotation = wigner_d(spin, drive.gamma * t + math.pi / 2)
    amplitudes = np.exp(1j * drive.phi * spin.m_values()) * rotation[:, col]
    amplitudes = amplitudes * np.exp(1j * (two_m / 2.0) * theta(drive, t0, t))
    return DiabaticState(two_m=two_m, amplitudes=amplitudes, time=t)


def diabatic_energy(drive: TangentDrive, spin: Spin, two_m: int, t: float) -> float:
    """Energy <psi_m(t)|H(t)|psi_m(t)> of the diabatic state (equals -m*eta2*sec(gamma*t))."""
    state = diabatic_state(drive, spin, two_m, t, t).amplitudes
    return float(np.real(state.conj() @ hamiltonian(drive, spin, t) @ state))


def adiabatic_reference_energy(drive: TangentDrive, spin: Spin, two_m: int,
                               t: float) -> float:
    """Reference curve -m*eta1*sec(gamma*t), the adiabatic-limit level family.

    This is the gamma/eta1 -> 0 matched limit (eta2 -> eta1) of the diabatic
    levels, not the instantaneous spectrum at finite gamma; the latter is
    available from instantaneous_eigenvalues.
    """
    drive.require_in_domain(t)
    spin.index_of(two_m)
    return -(two_m / 2.0) * drive.eta1 / math.cos(drive.gamma * t)


def instantaneous_eigenvalues(drive: TangentDrive, spin: Spin, t: float) -> np.ndarray:
    """Eigenvalues of H(t), sorted descending (m*|Omega(t)| for m = +j..-j)."""
    evals = np.linalg.eigvalsh(hamiltonian(drive, spin, t))
    return evals[::-1]


@dataclass(frozen=True)
class TruncationWindow:
    """Symmetric cutoff |t| <= tau_c of the sweep, with its two deficit angles.

    delta = pi/2 - gamma*tau_c is the phase-angle deficit; delta0 is the
    angle arctan(Omega_x / Omega_z(tau_c)) between the field vector and the
    z axis at the cutoff instants.  Build via window_from_tau_c /
    window_from_delta / window_from_delta0, which verify the geometric
    relation tan(delta) = sqrt(1 - (gamma/eta1)^2) * tan(delta0).
    """

    tau_c: float
    delta: float
    delta0: float

    def __post_init__(self):
        if not (0.0 < self.delta < math.pi / 2 and self.tau_c > 0.0):
            raise ValueError(
                f"invalid window: need 0 < delta < pi/2 and tau_c > 0, "
                f"got delta={self.delta}, tau_c={self.tau_c}"
            )
        if not 0.0 < self.delta0 < math.pi / 2:
            raise ValueError(f"delta0={self.delta0} outside (0, pi/2)")


def window_from_tau_c(drive: TangentDrive, tau_c: float) -> TruncationWindow:
    """Window from the cutoff time; requires 0 < gamma*tau_c < pi/2."""
    drive.require_in_domain(tau_c)
    if tau_c <= 0:
        raise ValueError(f"tau_c must be positive, got {tau_c}")
    delta = math.pi / 2 - drive.gamma * tau_c
    omega_x, _, omega_z = field_at(drive, tau_c)
    delta0 = math.atan(omega_x / omega_z)
    window = TruncationWindow(tau_c=tau_c, delta=delta, delta0=delta0)
    _check_window_geometry(drive, window)
    return window


def window_from_delta(drive: TangentDrive, delta: float) -> TruncationWindow:
    """Window from the phase-angle deficit delta = pi/2 - gamma*tau_c."""
    if not 0.0 < delta < math.pi / 2:
        raise ValueError(f"delta={delta} outside (0, pi/2)")
    return window_from_tau_c(drive, (math.pi / 2 - delta) / drive.gamma)


def window_from_delta0(drive: TangentDrive, delta0: float) -> TruncationWindow:
    """Window from the field-vector deviation angle at the cutoff instants."""
    delta = cutoff_error_relation(drive, delta0)
    window = window_from_delta(drive, delta)
    if abs(window.delta0 - delta0) > GEOMETRY_ATOL * (1.0 + abs(delta0)):
        raise ValueError(
            f"window geometry inconsistent: requested delta0={delta0}, "
            f"reconstructed {window.delta0}"
        )
    return window


def _check_window_geometry(drive: TangentDrive, window: TruncationWindow) -> None:
    # tan(delta) = sqrt(1 - (gamma/eta1)^2) * tan(delta0), two independent routes
    lhs = math.tan(window.delta)
    rhs = math.sqrt(1.0 - (drive.gamma / drive.eta1) ** 2) * math.tan(window.delta0)
    if abs(lhs - rhs) > GEOMETRY_ATOL * (1.0 + abs(lhs)):
        raise ValueError(
            f"window geometry violates the deficit relation: "
            f"tan(delta)={lhs} vs {rhs}"
        )


def cutoff_error_relation(drive: TangentDrive, delta0: float) -> float:
    """Phase deficit delta implied by a field deviation delta0 at the cutoff.

    delta = arctan(sqrt(1 - (gamma/eta1)^2) * tan(delta0)); increasing in
    delta0 and decreasing in gamma/eta1, which is the error-suppression
    mechanism of fast sweeps.
    """
    if not 0.0 < delta0 < math.pi / 2:
        raise ValueError(f"delta0={delta0} outside (0, pi/2)")
    ratio = drive.gamma / drive.eta1
    return math.atan(math.sqrt(1.0 - ratio**2) * math.tan(delta0))


@dataclass(frozen=True)
class TransitionMatrix:
    """|<m'|U|m>|^2 between Jz eigenstates; rows m' and columns m, descending.

    Validated doubly stochastic on construction (rows and columns sum to 1),
    which any unitary source guarantees up to rounding.
    """

    probabilities: np.ndarray

    def __post_init__(self):
        p = self.probabilities
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"probabilities must be square, got shape {p.shape}")
        if np.min(p) < -PROBABILITY_ATOL or np.max(p) > 1.0 + PROBABILITY_ATOL:
            raise ValueError("probabilities outside [0, 1]")
        row = np.abs(p.sum(axis=1) - 1.0).max()
        col = np.abs(p.sum(axis=0) - 1.0).max()
        if max(row, col) > PROBABILITY_ATOL:
            raise ValueError(
                f"matrix not doubly stochastic: row defect {row}, column defect {col}"
            )

    @classmethod
    def from_unitary(cls, unitary: np.ndarray) -> "TransitionMatrix":
        return cls(probabilities=np.abs(np.asarray(unitary)) ** 2)

    def probability(self, spin: Spin, two_m_final: int, two_m_initial: int) -> float:
        return float(
            self.probabilities[spin.index_of(two_m_final), spin.index_of(two_m_initial)]
        )


def full_sweep_transfer(drive: TangentDrive, spin: Spin) -> TransitionMatrix:
    """Ideal-sweep transition matrix: every |m> maps onto |-m> with certainty.

    Returned analytically as the anti-identity permutation; it is the
    delta -> 0 limit of truncated_transition_matrix, where the diverging
    overall phase drops out of the probabilities.
    """
    del drive  # all matched drives share the limit
    return TransitionMatrix(probabilities=np.fliplr(np.eye(spin.dim)))


def truncated_transition_matrix(drive: TangentDrive, spin: Spin,
                                window: TruncationWindow) -> TransitionMatrix:
    """Transition probabilities of the symmetric truncated sweep.

    Built from the exact three-factor product
    exp(i(pi-delta)Jy) exp(i*Theta*Jz) exp(-i*delta*Jy); outer diagonal
    phases of the propagator drop out of the moduli, so this agrees with
    |propagator(-tau_c, tau_c)|^2 entrywise.
    """
    total_phase = theta(drive, -window.tau_c, window.tau_c)
    core = compose([
        wigner_d(spin, math.pi - window.delta),
        z_phase(spin, total_phase),
        wigner_d(spin, -window.delta),
    ])
    return TransitionMatrix.from_unitary(core)


def two_level_transition_probability(total_phase: float, delta: float) -> float:
    """Closed-form P(+1/2 -> -1/2) = 1 - cos^2(Theta/2) sin^2(delta) for j = 1/2."""
    return 1.0 - math.cos(total_phase / 2.0) ** 2 * math.sin(delta) ** 2
