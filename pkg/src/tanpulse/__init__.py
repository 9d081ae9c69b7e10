"""Tangent-pulse driven spin dynamics: exact propagators and validation tools."""

from .su2 import Spin, build_operators, compose, fidelity, wigner_d, z_phase
from .protocol import (
    DiabaticState,
    TangentDrive,
    TransitionMatrix,
    TruncationWindow,
    cutoff_error_relation,
    diabatic_energy,
    diabatic_state,
    drive_from_ratio,
    field_at,
    full_sweep_transfer,
    hamiltonian,
    instantaneous_eigenvalues,
    make_matched_drive,
    propagator,
    theta,
    truncated_transition_matrix,
    two_level_transition_probability,
    window_from_delta,
    window_from_delta0,
    window_from_tau_c,
)
from .counterdiabatic import (
    CDDrive,
    cd_hamiltonian,
    cd_propagator,
    cd_rate,
    cd_truncated_transition,
    cd_two_level_transition_probability,
)
from .oracle import (
    DriveFunction,
    IntegrationError,
    IntegrationResult,
    integrate_propagator,
    integrate_state,
)

__version__ = "0.1.0"

__all__ = [
    "CDDrive",
    "DiabaticState",
    "DriveFunction",
    "IntegrationError",
    "IntegrationResult",
    "Spin",
    "TangentDrive",
    "TransitionMatrix",
    "TruncationWindow",
    "build_operators",
    "cd_hamiltonian",
    "cd_propagator",
    "cd_rate",
    "cd_truncated_transition",
    "cd_two_level_transition_probability",
    "compose",
    "cutoff_error_relation",
    "diabatic_energy",
    "diabatic_state",
    "drive_from_ratio",
    "fidelity",
    "field_at",
    "full_sweep_transfer",
    "hamiltonian",
    "instantaneous_eigenvalues",
    "integrate_propagator",
    "integrate_state",
    "make_matched_drive",
    "propagator",
    "theta",
    "truncated_transition_matrix",
    "two_level_transition_probability",
    "wigner_d",
    "window_from_delta",
    "window_from_delta0",
    "window_from_tau_c",
    "z_phase",
]
