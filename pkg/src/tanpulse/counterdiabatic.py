"""Counter-diabatic reference protocol for the same tangent field.

Transitionless driving adds an auxiliary y-axis field d(delta_cd)/dt * Jy so
the state follows the instantaneous eigenstates of the bare Hamiltonian.
Its propagator factorizes like the tangent protocol's, but with the mixing
angle delta_cd(t) = pi - arccos(Omega_z/|Omega|) and the dynamical phase
Theta_cd = integral of |Omega|.  The point of the comparison: the cutoff
error of this protocol is governed by the geometric angle delta0 alone and
does not shrink with faster sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad
import numpy as np

from .protocol import TangentDrive, TransitionMatrix, TruncationWindow, field_at, hamiltonian
from .su2 import Spin, build_operators, compose, wigner_d, z_phase

# Relative accuracy of the dynamical-phase quadrature; the phase only ever
# enters through cosines, so ~1e-10 absolute phase error is ample for
# probability checks at the 1e-12 level.
PHASE_QUAD_RTOL = 1e-11
PHASE_QUAD_ATOL = 1e-13


@dataclass(frozen=True)
class CDDrive:
    """Counter-diabatic drive derived from a matched tangent-pulse base."""

    base: TangentDrive

    def field_magnitude(self, t: float) -> float:
        omega_x, _, omega_z = field_at(self.base, t)
        return math.hypot(omega_x, omega_z)

    def delta_cd(self, t: float) -> float:
        """Mixing angle pi - arccos(Omega_z/|Omega|), increasing through pi/2 at t=0.

        Principal arccos branch, so delta_cd(-tau_c) = delta0 and
        delta_cd(+tau_c) = pi - delta0 for any symmetric window.
        """
        omega_x, _, omega_z = field_at(self.base, t)
        return math.pi - math.acos(omega_z / math.hypot(omega_x, omega_z))

    def theta_cd(self, t0: float, t: float) -> float:
        """Dynamical phase: integral of |Omega(tau)| from t0 to t, by quadrature."""
        self.base.require_in_domain(t0)
        self.base.require_in_domain(t)
        value, _ = quad(self.field_magnitude, t0, t,
                        epsabs=PHASE_QUAD_ATOL, epsrel=PHASE_QUAD_RTOL, limit=200)
        return value


def cd_rate(drive: CDDrive, t: float) -> float:
    """Auxiliary-field amplitude d(delta_cd)/dt in closed form.

    eta1*eta2*gamma*sec^2(gamma*t) / (eta1^2 + eta2^2*tan^2(gamma*t)).
    """
    base = drive.base
    base.require_in_domain(t)
    tan = math.tan(base.gamma * t)
    sec2 = 1.0 + tan * tan
    return base.eta1 * base.eta2 * base.gamma * sec2 / (
        base.eta1**2 + base.eta2**2 * tan * tan
    )


def cd_hamiltonian(drive: CDDrive, spin: Spin, t: float) -> np.ndarray:
    """Total Hamiltonian H(t) - cd_rate(t)*Jy driving the transitionless evolution.

    The auxiliary y field cancels the nonadiabatic mixing, so its amplitude
    is the rotation rate of the field's polar angle arccos(Omega_z/|Omega|),
    which is -cd_rate(t); the evolution it generates is exactly cd_propagator.
    """
    _, jy, _ = build_operators(spin)
    return hamiltonian(drive.base, spin, t) - cd_rate(drive, t) * jy


def cd_propagator(drive: CDDrive, spin: Spin, t0: float, t: float) -> np.ndarray:
    """Exact evolution exp(i*delta_cd(t)*Jy) exp(i*Theta_cd*Jz) exp(-i*delta_cd(t0)*Jy)."""
    return compose([
        wigner_d(spin, drive.delta_cd(t)),
        z_phase(spin, drive.theta_cd(t0, t)),
        wigner_d(spin, -drive.delta_cd(t0)),
    ])


def cd_truncated_transition(drive: CDDrive, spin: Spin,
                            window: TruncationWindow) -> TransitionMatrix:
    """Transition probabilities of the truncated counter-diabatic sweep.

    Uses the endpoint values delta_cd(-+tau_c) = delta0 / pi - delta0, so the
    probabilities depend on the window only through delta0 and the dynamical
    phase -- the cutoff error does not improve with the sweep rate.
    """
    total_phase = drive.theta_cd(-window.tau_c, window.tau_c)
    core = compose([
        wigner_d(spin, math.pi - window.delta0),
        z_phase(spin, total_phase),
        wigner_d(spin, -window.delta0),
    ])
    return TransitionMatrix.from_unitary(core)


def cd_two_level_transition_probability(total_phase: float, delta0: float) -> float:
    """Closed-form P(+1/2 -> -1/2) = 1 - cos^2(Theta_cd/2) sin^2(delta0) for j = 1/2."""
    return 1.0 - math.cos(total_phase / 2.0) ** 2 * math.sin(delta0) ** 2
