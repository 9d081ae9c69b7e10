"""Angular-momentum matrix algebra for arbitrary half-integer spin.

Spin matrices, y-axis rotation matrices and z-axis phase unitaries in the
fixed basis ordered by descending magnetic number (index 0 is m = +j).
All functions are pure and return freshly allocated dense arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

# Shared numerical tolerances for the algebraic identities this module
# guarantees (referenced by the test suite; do not scatter literals).
UNITARITY_ATOL = 1e-12
ROTATION_ATOL = 1e-11
COMMUTATOR_ATOL = 1e-13


@dataclass(frozen=True)
class Spin:
    """Angular momentum j stored as the integer 2j, so half-integers stay exact.

    Basis convention used everywhere in this package: index k holds the Jz
    eigenstate with m = j - k, i.e. m runs from +j down to -j. For j = 1/2
    the first component is the spin-up state.
    """

    two_j: int

    def __post_init__(self):
        if not isinstance(self.two_j, (int, np.integer)) or isinstance(self.two_j, bool):
            raise ValueError(f"two_j must be an integer, got {self.two_j!r}")
        if self.two_j < 0:
            raise ValueError(f"two_j must be nonnegative, got {self.two_j}")

    @property
    def j(self) -> float:
        return self.two_j / 2.0

    @property
    def dim(self) -> int:
        return self.two_j + 1

    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers in basis order, +j down to -j."""
        return (self.two_j - 2.0 * np.arange(self.dim)) / 2.0

    def index_of(self, two_m: int) -> int:
        """Basis index of the Jz eigenstate with magnetic number two_m / 2."""
        if (self.two_j - two_m) % 2 != 0:
            raise ValueError(
                f"two_m={two_m} has wrong parity for two_j={self.two_j}"
            )
        if abs(two_m) > self.two_j:
            raise ValueError(f"|two_m|={abs(two_m)} exceeds two_j={self.two_j}")
        return (self.two_j - two_m) // 2

    def basis_state(self, two_m: int) -> np.ndarray:
        """Unit vector of the Jz eigenstate with magnetic number two_m / 2."""
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.index_of(two_m)] = 1.0
        return vec


def build_operators(spin: Spin) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense (Jx, Jy, Jz) matrices for the given spin, hbar = 1.

    Jz is diagonal with entries j, j-1, ..., -j.  Jx and Jy follow from the
    ladder operators with <m+1|J+|m> = sqrt(j(j+1) - m(m+1)).
    """
    j = spin.j
    m = spin.m_values()
    dim = spin.dim
    jplus = np.zeros((dim, dim))
    if dim > 1:
        # column k holds |m_k>, the raised state lands one row above
        jplus[np.arange(dim - 1), np.arange(1, dim)] = np.sqrt(
            j * (j + 1.0) - m[1:] * (m[1:] + 1.0)
        )
    jx = ((jplus + jplus.T) / 2.0).astype(complex)
    jy = (jplus - jplus.T) / 2j
    jz = np.diag(m).astype(complex)
    return jx, jy, jz


@lru_cache(maxsize=64)
def _jy_eigensystem(two_j: int) -> tuple[np.ndarray, np.ndarray]:
    # Jy is Hermitian with known spectrum {-j, ..., +j}; snapping the
    # eigenvalues to exact half-integers removes the O(eps) solver noise.
    _, jy, _ = build_operators(Spin(two_j))
    evals, evecs = np.linalg.eigh(jy)
    evals = np.round(2.0 * evals) / 2.0
    return evals, evecs


def wigner_d(spin: Spin, phi: float) -> np.ndarray:
    """Rotation matrix with entries <m'|exp(i*phi*Jy)|m>.

    Sign convention: the exponent is +i*phi*Jy, so for j = 1/2 the matrix is
    [[cos(phi/2), sin(phi/2)], [-sin(phi/2), cos(phi/2)]].  Computed from the
    eigendecomposition of the Hermitian Jy; a single code path serves every j.
    """
    if not np.isfinite(phi):
        raise ValueError(f"rotation angle must be finite, got {phi!r}")
    evals, evecs = _jy_eigensystem(spin.two_j)
    phases = np.exp(1j * phi * evals)
    return (evecs * phases) @ evecs.conj().T


def z_phase(spin: Spin, theta: float) -> np.ndarray:
    """Diagonal unitary exp(i*theta*Jz), entries e^{i m theta} with m descending."""
    if not np.isfinite(theta):
        raise ValueError(f"phase angle must be finite, got {theta!r}")
    return np.diag(np.exp(1j * theta * spin.m_values()))


def compose(factors) -> np.ndarray:
    """Ordered product of square matrices; the rightmost factor acts first.

    Raises ValueError on an empty list or mismatched dimensions.
    """
    mats = [np.asarray(f) for f in factors]
    if not mats:
        raise ValueError("compose needs at least one factor")
    dim = mats[0].shape[0]
    for k, mat in enumerate(mats):
        if mat.ndim != 2 or mat.shape != (dim, dim):
            raise ValueError(
                f"dimension mismatch: factor 0 is {mats[0].shape}, "
                f"factor {k} is {mat.shape}"
            )
    return reduce(np.matmul, mats)


def dagger(mat: np.ndarray) -> np.ndarray:
    """Hermitian conjugate."""
    return np.asarray(mat).conj().T


def fidelity(u1: np.ndarray, u2: np.ndarray) -> float:
    """Global-phase-insensitive similarity |tr(U1^dag U2)| / dim of two unitaries."""
    u1 = np.asarray(u1)
    u2 = np.asarray(u2)
    if u1.shape != u2.shape:
        raise ValueError(f"shape mismatch: {u1.shape} vs {u2.shape}")
    return float(np.abs(np.trace(u1.conj().T @ u2)) / u1.shape[0])
