"""Truncated Floquet space: Hamiltonian assembly, diagonalization, propagators
and formalized observables.

For a periodic H(t) = sum_k h^k exp(i k w t) the Floquet Hamiltonian is

    <m|H_F|n> = h^{m-n} + n w delta_{mn}

and the lab-frame propagator is recovered by contracting the mode-0 column,
U(t) = sum_n <n|exp(-i H_F t)|0> exp(i n w t).

The same sign holds throughout: a Floquet density is read back as
sigma(t) = sum_{n,m} <n|sigma^F|m> exp(+i (n - m) w t), and detection operators
carry the conjugate phase so that Tr[D~(t) sigma^F] = Tr[D sigma(t)].
"""

from typing import Callable, Dict, Mapping, Tuple

import numpy as np
from scipy import linalg

from app.core.exceptions import DimensionMismatchError, ValidationError
from app.core.logging import get_logger
from app.models.floquet import (
    SPIN_DIM,
    FloquetDensity,
    FloquetEigensystem,
    FloquetOperator,
    ModeTruncation,
)

logger = get_logger("floquetsim.floquet")

SPIN_HALF_X = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
SPIN_HALF_Y = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex)
SPIN_HALF_Z = 0.5 * np.array([[1, 0], [0, -1]], dtype=complex)
SPIN_PLUS = SPIN_HALF_X + 1j * SPIN_HALF_Y
SPIN_MINUS = SPIN_HALF_X - 1j * SPIN_HALF_Y

BLOCK_HERMITIAN_ATOL = 1e-12
MAX_ROTOR_PERIODS = 1e6
DEGENERACY_RTOL = 1e-10


def _check_block(block: np.ndarray) -> np.ndarray:
    b = np.asarray(block, dtype=complex)
    if b.shape != (SPIN_DIM, SPIN_DIM):
        raise ValidationError(f"Fourier block must be 2x2, got shape {b.shape}")
    return b


def assemble_floquet_hamiltonian(
    fourier_blocks: Mapping[int, np.ndarray],
    spinning_speed: float,
    truncation: ModeTruncation,
) -> FloquetOperator:
    """Assemble the banded-block Floquet Hamiltonian.

    Args:
        fourier_blocks: Mode offset k -> 2x2 Fourier component h^k.
        spinning_speed: Rotor frequency w_r (rad/s).
        truncation: Retained modes.

    Returns:
        Hermitian FloquetOperator.

    Raises:
        ValidationError: If h^{-k} != (h^k)^dagger for some offset.
    """
    blocks = {int(k): _check_block(v) for k, v in fourier_blocks.items()}
    scale = max([1.0] + [float(np.max(np.abs(b))) for b in blocks.values()])
    for k, h in blocks.items():
        partner = blocks.get(-k, np.zeros((SPIN_DIM, SPIN_DIM), dtype=complex))
        if np.max(np.abs(partner - h.conj().T)) > BLOCK_HERMITIAN_ATOL * scale:
            raise ValidationError(
                f"Fourier blocks are not Hermitian-paired at offset {k}: h^{-k} != (h^{k})^dagger"
            )

    K = truncation.K
    dim = truncation.dim
    H = np.zeros((dim, dim), dtype=complex)
    for m in range(-K, K + 1):
        i = (m + K) * SPIN_DIM
        for n in range(-K, K + 1):
            h = blocks.get(m - n)
            if h is None:
                continue
            j = (n + K) * SPIN_DIM
            H[i:i + SPIN_DIM, j:j + SPIN_DIM] += h
        H[i:i + SPIN_DIM, i:i + SPIN_DIM] += m * spinning_speed * np.eye(SPIN_DIM)
    return FloquetOperator(H, truncation, spinning_speed)


def _fold(values: np.ndarray, spinning_speed: float) -> Tuple[np.ndarray, np.ndarray]:
    """Fold into (-w/2, w/2]; returns (reduced, offsets)."""
    offsets = np.ceil(values / spinning_speed - 0.5).astype(int)
    return values - offsets * spinning_speed, offsets


def _tie_break(values: np.ndarray, vectors: np.ndarray, tol: float) -> Tuple[np.ndarray, bool]:
    """Deterministic column order inside clusters of near-equal eigenvalues."""
    order = np.arange(values.size)
    degenerate = False
    start = 0
    while start < values.size:
        stop = start + 1
        while stop < values.size and values[stop] - values[start] <= tol:
            stop += 1
        if stop - start > 1:
            degenerate = True
            cluster = list(range(start, stop))
            keys = [tuple(np.round(np.abs(vectors[:, c]), 12)) for c in cluster]
            ranked = sorted(zip(keys, cluster), reverse=True)
            order[start:stop] = [c for _, c in ranked]
        start = stop
    return order, degenerate


def diagonalize(H: FloquetOperator) -> FloquetEigensystem:
    """Diagonalize a Hermitian Floquet Hamiltonian.

    Eigenpairs are sorted by eigenvalue. Each eigenvalue is folded into the
    first Brillouin zone (-w_r/2, w_r/2], recording its mode offset. The
    quasienergies (the diagonal of Q) are taken from the two eigenstates with
    the largest weight on mode 0, one per spin component.

    Raises:
        ValidationError: If H is not Hermitian.
    """
    if not H.is_hermitian():
        raise ValidationError(
            f"Floquet Hamiltonian is not Hermitian (relative error {H.hermiticity_error():.3e})"
        )
    w = H.spinning_speed
    values, vectors = linalg.eigh(H.matrix)
    order, degenerate = _tie_break(values, vectors, DEGENERACY_RTOL * w)
    values, vectors = values[order], vectors[:, order]
    if degenerate:
        logger.debug("Degenerate Floquet eigenvalues tie-broken", extra={"event": "degenerate"})

    reduced, offsets = _fold(values, w)

    K = H.truncation.K
    centre = slice(K * SPIN_DIM, (K + 1) * SPIN_DIM)
    weights = np.abs(vectors[centre, :]) ** 2
    quasi = np.empty(SPIN_DIM)
    taken = set()
    for p in range(SPIN_DIM):
        ranked = np.argsort(-weights[p])
        r = next(int(c) for c in ranked if int(c) not in taken)
        taken.add(r)
        quasi[p] = reduced[r]

    return FloquetEigensystem(
        eigenvalues=values,
        eigenvectors=vectors,
        reduced=reduced,
        mode_offsets=offsets,
        quasienergies=quasi,
        truncation=H.truncation,
        spinning_speed=w,
        degenerate=degenerate,
    )


def _check_time(t: float, spinning_speed: float) -> None:
    if t < 0.0:
        raise ValidationError("propagation time must be non-negative")
    if t * spinning_speed / (2.0 * np.pi) > MAX_ROTOR_PERIODS:
        raise ValidationError("propagation time exceeds 1e6 rotor periods")


def floquet_propagator(eig: FloquetEigensystem, t: float) -> FloquetOperator:
    """Return exp(-i H_F t) built from the eigensystem."""
    _check_time(t, eig.spinning_speed)
    P = eig.eigenvectors
    U = (P * np.exp(-1j * eig.eigenvalues * t)) @ P.conj().T
    return FloquetOperator(U, eig.truncation, eig.spinning_speed)


def contract_propagator(U: FloquetOperator, t: float, source_mode: int = 0) -> np.ndarray:
    """Lab-frame 2x2 propagator sum_n <n|U^F|source> exp(i n w t)."""
    K = U.truncation.K
    out = np.zeros((SPIN_DIM, SPIN_DIM), dtype=complex)
    for n in range(-K, K + 1):
        out += U.block(n, source_mode) * np.exp(1j * (n - source_mode) * U.spinning_speed * t)
    return out


def lab_propagator(eig: FloquetEigensystem, t: float) -> np.ndarray:
    """Contracted propagator U(t) using only the mode-0 column of exp(-i H_F t)."""
    _check_time(t, eig.spinning_speed)
    K = eig.truncation.K
    P = eig.eigenvectors
    col = slice(K * SPIN_DIM, (K + 1) * SPIN_DIM)
    column = (P * np.exp(-1j * eig.eigenvalues * t)) @ P[col, :].conj().T
    phases = np.exp(1j * eig.truncation.modes * eig.spinning_speed * t)
    blocks = column.reshape(eig.truncation.n_modes, SPIN_DIM, SPIN_DIM)
    return np.tensordot(phases, blocks, axes=(0, 0))


def interval_propagator(eig: FloquetEigensystem, t_start: float, t_end: float) -> np.ndarray:
    """U(t_end, t_start) = U(t_end) U(t_start)^{-1}."""
    U_end = lab_propagator(eig, t_end)
    U_start = lab_propagator(eig, t_start)
    return U_end @ np.linalg.inv(U_start)


def stepped_propagator_oracle(
    H_of_t: Callable[[float], np.ndarray],
    t: float,
    N: int,
) -> np.ndarray:
    """Time-ordered product of piecewise-constant exponentials.

    Each of the N steps uses H sampled at the step midpoint, which is exact
    for constant H and second-order accurate otherwise.
    """
    if N < 1:
        raise ValidationError("step count must be at least 1")
    dt = t / N
    mids = (np.arange(N) + 0.5) * dt
    stack = np.array([np.asarray(H_of_t(tm), dtype=complex) for tm in mids])
    steps = linalg.expm(-1j * dt * stack)
    U = np.eye(stack.shape[-1], dtype=complex)
    for step in steps:
        U = step @ U
    return U


def formalize_observable(
    fourier_components: Mapping[int, np.ndarray],
    truncation: ModeTruncation,
    spinning_speed: float = 1.0,
) -> FloquetOperator:
    """Block-Toeplitz operator A^F = sum_{n,m} A_{n-m} |n><m|.

    Components with |n| > 2K cannot appear in the window and are dropped with
    a warning.
    """
    K = truncation.K
    comps: Dict[int, np.ndarray] = {}
    for k, v in fourier_components.items():
        if abs(int(k)) > 2 * K:
            logger.warning(
                "Dropping Fourier component outside the mode window",
                extra={"event": "truncate_component", "K": K},
            )
            continue
        comps[int(k)] = _check_block(v)

    dim = truncation.dim
    A = np.zeros((dim, dim), dtype=complex)
    for a in range(-K, K + 1):
        i = (a + K) * SPIN_DIM
        for b in range(-K, K + 1):
            block = comps.get(a - b)
            if block is None:
                continue
            j = (b + K) * SPIN_DIM
            A[i:i + SPIN_DIM, j:j + SPIN_DIM] = block
    return FloquetOperator(A, truncation, spinning_speed)


def detection_operator(
    D: np.ndarray,
    t: float,
    truncation: ModeTruncation,
    spinning_speed: float,
) -> FloquetOperator:
    """Detection operator with blocks <a|D~|b> = D exp(i (b - a) w_r t).

    Satisfies Tr[D~ sigma^F] = Tr[D sigma(t)] for the reconstruction used by
    reconstruct_density.
    """
    D = _check_block(D)
    modes = truncation.modes
    phases = np.exp(1j * (modes[None, :] - modes[:, None]) * spinning_speed * t)
    return FloquetOperator(np.kron(phases, D), truncation, spinning_speed)


def reconstruct_density(sigma: FloquetDensity, t: float, spinning_speed: float) -> np.ndarray:
    """Lab-frame sigma(t) = sum_{n,m} <n|sigma^F|m> exp(i (n - m) w t)."""
    n_modes = sigma.truncation.n_modes
    blocks = sigma.matrix.reshape(n_modes, SPIN_DIM, n_modes, SPIN_DIM)
    modes = sigma.truncation.modes
    phases = np.exp(1j * (modes[:, None] - modes[None, :]) * spinning_speed * t)
    return np.einsum("nm,nbmc->bc", phases, blocks)


def evolve(sigma: FloquetDensity, U: FloquetOperator) -> FloquetDensity:
    """Unitary conjugation U sigma U^dagger; purity and label carry over."""
    if sigma.dim != U.dim:
        raise DimensionMismatchError(
            f"density dimension {sigma.dim} does not match operator dimension {U.dim}"
        )
    return sigma.with_matrix(U.matrix @ sigma.matrix @ U.matrix.conj().T)


def expectation(observable: FloquetOperator, sigma: FloquetDensity) -> complex:
    if sigma.dim != observable.dim:
        raise DimensionMismatchError("observable and density dimensions differ")
    return complex(np.trace(observable.matrix @ sigma.matrix))


def truncation_converged(at_K: np.ndarray, at_K_minus_2: np.ndarray, tol: float) -> bool:
    """Convergence flag comparing results at K and K-2."""
    return bool(np.max(np.abs(np.asarray(at_K) - np.asarray(at_K_minus_2))) <= tol)


def spin_ladder(truncation: ModeTruncation, spin_operator: np.ndarray, spinning_speed: float) -> np.ndarray:
    """Matrix sum_n |n><n| (x) n w spin_operator."""
    return np.kron(np.diag(truncation.modes * spinning_speed), _check_block(spin_operator))


def embed_operator(matrix: np.ndarray, source: ModeTruncation, target: ModeTruncation) -> np.ndarray:
    """Place a matrix over a smaller window centrally inside a larger one.

    The new levels receive the identity, so unitaries stay unitary.
    """
    if target.K < source.K:
        raise DimensionMismatchError("target window must contain the source window")
    out = np.eye(target.dim, dtype=complex)
    off = (target.K - source.K) * SPIN_DIM
    out[off:off + source.dim, off:off + source.dim] = matrix
    return out


def embed_density(sigma: FloquetDensity, target: ModeTruncation) -> FloquetDensity:
    """Zero-pad a density matrix into a larger mode window."""
    if target.K < sigma.truncation.K:
        raise DimensionMismatchError("target window must contain the source window")
    out = np.zeros((target.dim, target.dim), dtype=complex)
    off = (target.K - sigma.truncation.K) * SPIN_DIM
    out[off:off + sigma.dim, off:off + sigma.dim] = sigma.matrix
    return FloquetDensity(out, target, sigma.purity, sigma.label)
