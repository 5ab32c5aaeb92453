"""Floquet-space value types.

The product basis |p n> is flattened mode-major, spin-minor with modes
ascending from -K to K, so row index = (n + K) * 2 + p. Spin index p = 0
is the +1/2 state.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

SPIN_DIM = 2

HERMITIAN_RTOL = 1e-12
UNITARY_ATOL = 1e-9


@dataclass(frozen=True)
class ModeTruncation:
    """Retained Fourier modes n = -K..K."""

    K: int

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("mode truncation K must be non-negative")

    @property
    def n_modes(self) -> int:
        return 2 * self.K + 1

    @property
    def dim(self) -> int:
        return SPIN_DIM * self.n_modes

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def contains(self, n: int) -> bool:
        return -self.K <= n <= self.K


@dataclass(frozen=True)
class FloquetIndex:
    """Label |p n> of a Floquet level."""

    p: int
    n: int

    def __post_init__(self):
        if self.p not in (0, 1):
            raise ValueError("spin index p must be 0 or 1")

    @property
    def epsilon(self) -> int:
        # p - delta_{p,0}
        return -1 if self.p == 0 else 1

    def flatten(self, truncation: ModeTruncation) -> int:
        if not truncation.contains(self.n):
            raise ValueError(f"mode {self.n} outside [-{truncation.K}, {truncation.K}]")
        return (self.n + truncation.K) * SPIN_DIM + self.p

    @classmethod
    def unflatten(cls, index: int, truncation: ModeTruncation) -> "FloquetIndex":
        if not 0 <= index < truncation.dim:
            raise ValueError(f"row {index} outside Floquet dimension {truncation.dim}")
        block, p = divmod(index, SPIN_DIM)
        return cls(p=p, n=block - truncation.K)

    def as_tuple(self) -> Tuple[int, int]:
        return (self.p, self.n)


def epsilon(p: int) -> int:
    return -1 if p == 0 else 1


@dataclass(frozen=True, eq=False)
class FloquetOperator:
    """Dense operator on the truncated Floquet space.

    Attributes:
        matrix: Complex square matrix of dimension 2(2K+1).
        truncation: Mode window the matrix is expressed in.
        spinning_speed: Rotor frequency in rad/s.
    """

    matrix: np.ndarray
    truncation: ModeTruncation
    spinning_speed: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.truncation.dim, self.truncation.dim):
            raise ValueError(
                f"matrix shape {m.shape} does not match Floquet dimension {self.truncation.dim}"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.truncation.dim

    def hermiticity_error(self) -> float:
        scale = max(float(np.max(np.abs(self.matrix))), 1.0)
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) / scale

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        return self.hermiticity_error() <= rtol

    def unitarity_error(self) -> float:
        eye = np.eye(self.dim)
        return float(np.max(np.abs(self.matrix @ self.matrix.conj().T - eye)))

    def is_unitary(self, atol: float = UNITARY_ATOL) -> bool:
        return self.unitarity_error() <= atol

    def block(self, m: int, n: int) -> np.ndarray:
        """Return the 2x2 spin block <m|A|n>."""
        K = self.truncation.K
        i, j = (m + K) * SPIN_DIM, (n + K) * SPIN_DIM
        return self.matrix[i:i + SPIN_DIM, j:j + SPIN_DIM]

    def element(self, row: FloquetIndex, col: FloquetIndex) -> complex:
        return complex(self.matrix[row.flatten(self.truncation), col.flatten(self.truncation)])

    def compose(self, other: "FloquetOperator") -> "FloquetOperator":
        """Return self @ other."""
        if other.dim != self.dim:
            raise ValueError("cannot compose operators of different dimension")
        return FloquetOperator(self.matrix @ other.matrix, self.truncation, self.spinning_speed)

    def dagger(self) -> "FloquetOperator":
        return FloquetOperator(self.matrix.conj().T, self.truncation, self.spinning_speed)

    @classmethod
    def identity(cls, truncation: ModeTruncation, spinning_speed: float) -> "FloquetOperator":
        return cls(np.eye(truncation.dim, dtype=complex), truncation, spinning_speed)


@dataclass(frozen=True, eq=False)
class FloquetEigensystem:
    """Eigen-decomposition of a Floquet Hamiltonian.

    Attributes:
        eigenvalues: Sorted eigenvalues lambda in rad/s.
        eigenvectors: Columns are Floquet eigenstates.
        reduced: Eigenvalues folded into (-w_r/2, w_r/2].
        mode_offsets: Integer n with eigenvalue = reduced + n * w_r.
        quasienergies: Folded eigenvalues of the two states centred on mode 0,
            ordered by spin; the diagonal of Q.
        degenerate: True when a deterministic tie-break was applied.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    reduced: np.ndarray
    mode_offsets: np.ndarray
    quasienergies: np.ndarray
    truncation: ModeTruncation
    spinning_speed: float
    degenerate: bool = False

    @property
    def Q(self) -> np.ndarray:
        return np.diag(self.quasienergies)

    def is_traceless(self, rtol: float = 1e-9) -> bool:
        return abs(float(np.sum(self.quasienergies))) <= rtol * max(self.spinning_speed, 1.0)


@dataclass(frozen=True, eq=False)
class FloquetDensity:
    """Density matrix over the truncated Floquet space.

    Attributes:
        matrix: Hermitian, unit-trace matrix.
        truncation: Mode window.
        purity: Pseudo-pure polarization alpha in [-1, 1].
        label: (p, m) tag when the state is pseudo-pure.
    """

    matrix: np.ndarray
    truncation: ModeTruncation
    purity: float = 1.0
    label: Optional[Tuple[int, int]] = field(default=None)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.truncation.dim, self.truncation.dim):
            raise ValueError(
                f"density shape {m.shape} does not match Floquet dimension {self.truncation.dim}"
            )
        if not -1.0 <= self.purity <= 1.0:
            raise ValueError("purity must lie in [-1, 1]")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.truncation.dim

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_valid(self, atol: float = 1e-12) -> bool:
        herm = np.max(np.abs(self.matrix - self.matrix.conj().T)) <= atol
        return bool(herm and abs(self.trace - 1.0) <= atol)

    def population(self, index: FloquetIndex) -> float:
        i = index.flatten(self.truncation)
        return float(self.matrix[i, i].real)

    def with_matrix(self, matrix: np.ndarray) -> "FloquetDensity":
        return FloquetDensity(matrix, self.truncation, self.purity, self.label)
