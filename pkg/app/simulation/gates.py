"""Gates on Floquet working levels and the four-item Grover search.

Gate operators act on the six-level window K = 1. Four levels form the
two-qubit working space; a fifth, the reference level, is used by the state
transfers that realize phase flips.

Compiled blocks are sequences of hard pulses, [ASL] mode phases and free
evolution under the chemical-shift Floquet Hamiltonian of the window. Mode
transfers only exist because the window edge breaks the translation symmetry
of the untruncated ladder, so the sequences are specific to the window and
to the spin parameters they were synthesized for.
"""

import math
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import least_squares

from app.core.config import settings
from app.core.exceptions import (
    AmbiguousReadoutError,
    SearchFailedError,
    SingularSystemError,
    SolverError,
    ValidationError,
)
from app.core.logging import get_logger
from app.models.floquet import SPIN_DIM, FloquetEigensystem, FloquetIndex, FloquetOperator, ModeTruncation
from app.models.gates import (
    GATE_WINDOW_K,
    REFERENCE_STATE,
    WORKING_STATES,
    ASLEvent,
    ASLInverseEvent,
    DelayEvent,
    GateBlock,
    GateEvent,
    GroverInstance,
    GroverResult,
    PulseEvent,
)
from app.models.labeling import PseudoPureSpec
from app.models.spin import PulsePhase, RfPulse, RotorConfig, SpinParams
from app.simulation.floquet import diagonalize, evolve, floquet_propagator
from app.simulation.readout import analytic_library, identify_state, simulate_fid, spectrum_of
from app.simulation.shift import adaptive_truncation, cs_floquet_hamiltonian, rf_floquet_propagator
from app.simulation.state_prep import make_pseudo_pure

logger = get_logger("floquetsim.gates")

RF_FIELD = 2.0 * math.pi * 100e3
SINGULAR_CONDITION = 1e12
GATE_SYNTHESIS_TOL = 1e-8

Matrix = Union[np.ndarray, FloquetOperator]


def _window(K: int = GATE_WINDOW_K) -> ModeTruncation:
    return ModeTruncation(K)


def _rows(states: Sequence[FloquetIndex], truncation: ModeTruncation) -> List[int]:
    return [s.flatten(truncation) for s in states]


def embed_subspace(matrix: np.ndarray, states: Sequence[FloquetIndex], truncation: ModeTruncation) -> np.ndarray:
    """Full-window matrix acting as `matrix` on `states` and as identity elsewhere."""
    rows = _rows(states, truncation)
    out = np.eye(truncation.dim, dtype=complex)
    out[np.ix_(rows, rows)] = matrix
    return out


def restrict(op: Matrix, states: Sequence[FloquetIndex], truncation: ModeTruncation) -> np.ndarray:
    m = op.matrix if isinstance(op, FloquetOperator) else np.asarray(op)
    rows = _rows(states, truncation)
    return m[np.ix_(rows, rows)]


def level_transposition(a: FloquetIndex, b: FloquetIndex, truncation: ModeTruncation) -> np.ndarray:
    """Permutation exchanging levels a and b."""
    out = np.eye(truncation.dim, dtype=complex)
    i, j = a.flatten(truncation), b.flatten(truncation)
    out[[i, j]] = out[[j, i]]
    return out


def preparation_operators(
    truncation: Optional[ModeTruncation] = None,
    reference: FloquetIndex = REFERENCE_STATE,
) -> Dict[FloquetIndex, np.ndarray]:
    """P_s taking the reference level to s, for every level of the window."""
    trunc = truncation or _window()
    ops = {}
    for row in range(trunc.dim):
        s = FloquetIndex.unflatten(row, trunc)
        ops[s] = level_transposition(reference, s, trunc)
    return ops


def state_transfer_unitary(
    source: FloquetIndex,
    target: FloquetIndex,
    prep_ops: Optional[Dict[FloquetIndex, np.ndarray]] = None,
    truncation: Optional[ModeTruncation] = None,
    spinning_speed: float = 1.0,
) -> FloquetOperator:
    """U = P_target P_source^{-1}, mapping |source><source| to |target><target|.

    Raises:
        SingularSystemError: If P_source is not invertible.
    """
    trunc = truncation or _window()
    ops = prep_ops if prep_ops is not None else preparation_operators(trunc)
    try:
        P_from, P_to = ops[source], ops[target]
    except KeyError as exc:
        raise ValidationError(f"no preparation operator for level {exc.args[0]}") from exc
    cond = np.linalg.cond(P_from)
    if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
        raise SingularSystemError(f"preparation operator of {source.as_tuple()} is singular")
    return FloquetOperator(P_to @ np.linalg.inv(P_from), trunc, spinning_speed)


def _weyl_heisenberg(M: int) -> List[np.ndarray]:
    shift = np.roll(np.eye(M), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(M) / M))
    ops = []
    for a in range(M):
        for b in range(M):
            ops.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return ops


def peak_manipulation_basis(
    working_states: Sequence[FloquetIndex],
    M: Optional[int] = None,
    truncation: Optional[ModeTruncation] = None,
    spinning_speed: float = 1.0,
) -> List[FloquetOperator]:
    """Operator basis of the M x M computational space spanned by the first M states.

    Elements are products of cyclic state transfers and phase operators. An
    M x M unitary needs M + 1 levels; the extra level is the one the transfers
    pass through. With a single level only its phase operator exists.

    Raises:
        ValidationError: If fewer than M + 1 levels are given.
    """
    trunc = truncation or _window()
    L = len(working_states)
    if L == 0:
        raise ValidationError("at least one working state is required")
    if M is not None and L < M + 1:
        raise ValidationError(
            f"an {M}x{M} unitary needs {M + 1} Floquet states, got {L}"
        )
    if L == 1:
        phase = np.array([[np.exp(0.5j * np.pi)]])
        return [FloquetOperator(embed_subspace(phase, working_states, trunc), trunc, spinning_speed)]
    M = L - 1 if M is None else M
    comp = list(working_states)[:M]
    return [
        FloquetOperator(embed_subspace(op, comp, trunc), trunc, spinning_speed)
        for op in _weyl_heisenberg(M)
    ]


def basis_expansion(
    unitary: np.ndarray,
    basis: Sequence[FloquetOperator],
    states: Sequence[FloquetIndex],
) -> Tuple[np.ndarray, float]:
    """Least-squares coefficients a_i with sum_i a_i P_i = U on `states`.

    Returns:
        (coefficients, relative Frobenius residual).
    """
    U = np.asarray(unitary, dtype=complex)
    if U.shape != (len(states), len(states)):
        raise ValidationError("unitary shape does not match the number of states")
    columns = np.column_stack([restrict(b, states, b.truncation).ravel() for b in basis])
    coeffs, *_ = np.linalg.lstsq(columns, U.ravel(), rcond=None)
    residual = float(np.linalg.norm(columns @ coeffs - U.ravel()) / np.linalg.norm(U))
    return coeffs, residual


def hadamard_walsh_matrix(n: int = 4) -> np.ndarray:
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    out = np.array([[1.0]])
    for _ in range(int(round(math.log2(n)))):
        out = np.kron(h, out)
    return out


def hadamard_walsh(
    working_states: Sequence[FloquetIndex] = WORKING_STATES,
    K: int = GATE_WINDOW_K,
    spinning_speed: float = 1.0,
) -> FloquetOperator:
    """Hadamard-Walsh transform on the working levels, identity elsewhere."""
    trunc = _window(K)
    H = hadamard_walsh_matrix(len(working_states))
    return FloquetOperator(embed_subspace(H, working_states, trunc), trunc, spinning_speed)


def conditional_flip(
    marked: FloquetIndex,
    working_states: Sequence[FloquetIndex] = WORKING_STATES,
    K: int = GATE_WINDOW_K,
    spinning_speed: float = 1.0,
) -> FloquetOperator:
    """-1 on the marked level, +1 on the other working levels."""
    if marked not in working_states:
        raise ValidationError(f"{marked.as_tuple()} is not a working state")
    trunc = _window(K)
    diag = np.array([-1.0 if s == marked else 1.0 for s in working_states])
    return FloquetOperator(embed_subspace(np.diag(diag), working_states, trunc), trunc, spinning_speed)


def inversion_about_mean(
    working_states: Sequence[FloquetIndex] = WORKING_STATES,
    K: int = GATE_WINDOW_K,
    spinning_speed: float = 1.0,
) -> FloquetOperator:
    """(2/N) J - I on the working levels; 1/2 J - I for N = 4."""
    trunc = _window(K)
    n = len(working_states)
    D = 2.0 / n * np.ones((n, n)) - np.eye(n)
    return FloquetOperator(embed_subspace(D, working_states, trunc), trunc, spinning_speed)


# Pulse-sequence realizations

def _mode_phases(angles: np.ndarray) -> np.ndarray:
    return np.kron(np.diag(np.exp(-1j * angles)), np.eye(SPIN_DIM))


@lru_cache(maxsize=32)
def window_eigensystem(params: SpinParams, rotor: RotorConfig, K: int = GATE_WINDOW_K) -> FloquetEigensystem:
    """Chemical-shift Floquet eigensystem of the gate window, shared by all delays."""
    return diagonalize(cs_floquet_hamiltonian(params, rotor, _window(K)))


def compile_event(event: GateEvent, eig: FloquetEigensystem, rotor: RotorConfig) -> np.ndarray:
    """Floquet unitary of a single event in the window of `eig`."""
    truncation = eig.truncation
    modes = truncation.modes
    if isinstance(event, PulseEvent):
        pulse = RfPulse(RF_FIELD, event.flip / RF_FIELD, PulsePhase(event.phase))
        if pulse.width > rotor.period:
            raise ValidationError("pulse longer than one rotor period")
        return rf_floquet_propagator(pulse, rotor, truncation, exact=True).matrix
    if isinstance(event, ASLEvent):
        return _mode_phases(modes * event.pitch)
    if isinstance(event, ASLInverseEvent):
        return _mode_phases(-modes * event.pitch)
    if isinstance(event, DelayEvent):
        return floquet_propagator(eig, event.periods * rotor.period).matrix
    raise ValidationError(f"unknown gate event {event!r}")


def compile_block(block: GateBlock, params: SpinParams, rotor: RotorConfig, K: int = GATE_WINDOW_K) -> FloquetOperator:
    """Net unitary of a gate block; the first event acts first."""
    eig = window_eigensystem(params, rotor, K)
    U = np.eye(eig.truncation.dim, dtype=complex)
    for event in block.events:
        U = compile_event(event, eig, rotor) @ U
    op = FloquetOperator(U, eig.truncation, rotor.spinning_speed)
    if not op.is_unitary():
        raise ValidationError(f"gate block {block.name} is not unitary ({op.unitarity_error():.3e})")
    return op


def layered_events(x: np.ndarray) -> Tuple[GateEvent, ...]:
    """Events of the layers (flip, delay, pitch); signs pick the -x pulse and [ASL]^-1."""
    events: List[GateEvent] = []
    for flip, periods, pitch in np.asarray(x, dtype=float).reshape(-1, 3):
        if flip != 0.0:
            events.append(PulseEvent(abs(flip), PulsePhase.PLUS_X if flip > 0.0 else PulsePhase.MINUS_X))
        events.append(DelayEvent(periods))
        events.append(ASLEvent(pitch) if pitch >= 0.0 else ASLInverseEvent(-pitch))
    return tuple(events)


def _synthesis_residuals(x: np.ndarray, target: np.ndarray, rows: List[int],
                         eig: FloquetEigensystem, rotor: RotorConfig) -> np.ndarray:
    U = np.eye(eig.truncation.dim, dtype=complex)
    for event in layered_events(x[:-1]):
        U = compile_event(event, eig, rotor) @ U
    diff = U[np.ix_(rows, rows)] - np.exp(1j * x[-1]) * target
    return np.concatenate([diff.real.ravel(), diff.imag.ravel()])


def synthesize_block(
    name: str,
    target: np.ndarray,
    params: SpinParams,
    rotor: RotorConfig,
    states: Sequence[FloquetIndex] = WORKING_STATES,
    K: int = GATE_WINDOW_K,
    layers: Optional[int] = None,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
) -> GateBlock:
    """Pulse - delay - [ASL] layers whose unitary equals `target` on `states` up to phase.

    The delays evolve under the chemical-shift Floquet Hamiltonian of the
    window; its sideband couplings are what move population between modes, so
    a shift-free spin admits no mode transfers. Each start is refined by
    bounded least squares on the working block.

    Raises:
        SolverError: If no start reaches GATE_SYNTHESIS_TOL.
    """
    layers = settings.GATE_LAYERS if layers is None else layers
    restarts = settings.GATE_RESTARTS if restarts is None else restarts
    seed = settings.GATE_SEED if seed is None else seed
    eig = window_eigensystem(params, rotor, K)
    rows = _rows(states, eig.truncation)
    target = np.asarray(target, dtype=complex)
    lower = np.array([-math.pi, 0.0, -math.pi] * layers + [-2.0 * math.pi])
    upper = np.array([math.pi, 1.0, math.pi] * layers + [2.0 * math.pi])

    best = math.inf
    for attempt in range(restarts):
        rng = np.random.default_rng(seed + attempt)
        x0 = np.concatenate([
            np.column_stack([
                rng.uniform(-math.pi, math.pi, layers),
                rng.uniform(0.0, 1.0, layers),
                rng.uniform(-math.pi, math.pi, layers),
            ]).ravel(),
            [0.0],
        ])
        sol = least_squares(
            _synthesis_residuals, x0, bounds=(lower, upper), method="trf",
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200 * x0.size,
            args=(target, rows, eig, rotor),
        )
        error = float(np.max(np.abs(sol.fun)))
        best = min(best, error)
        if error <= GATE_SYNTHESIS_TOL:
            block = GateBlock(name, layered_events(sol.x[:-1]))
            logger.info(
                "Gate block synthesized",
                extra={"event": "synthesize", "command": name, "residual": error},
            )
            return block
        logger.debug(
            "Synthesis start rejected",
            extra={"event": "synthesize", "command": name, "residual": error},
        )
    raise SolverError(f"gate block {name} not reached in {restarts} starts (best {best:.3e})", best_residual=best)


@lru_cache(maxsize=64)
def _cached_block(kind: str, marked: Optional[FloquetIndex], params: SpinParams, rotor: RotorConfig) -> GateBlock:
    if kind == "HW":
        return synthesize_block("HW", hadamard_walsh_matrix(len(WORKING_STATES)), params, rotor)
    diag = np.array([-1.0 if s == marked else 1.0 for s in WORKING_STATES])
    return synthesize_block(f"flip{marked.as_tuple()}", np.diag(diag), params, rotor)


def hadamard_walsh_block(params: SpinParams, rotor: RotorConfig) -> GateBlock:
    return _cached_block("HW", None, params, rotor)


def flip_block(marked: FloquetIndex, params: SpinParams, rotor: RotorConfig) -> GateBlock:
    """Sign change of the marked working level; the reference level absorbs the transfers."""
    if marked not in WORKING_STATES:
        raise ValidationError(f"{marked.as_tuple()} is not a working state")
    return _cached_block("flip", marked, params, rotor)


def inversion_block(params: SpinParams, rotor: RotorConfig,
                    working_states: Sequence[FloquetIndex] = WORKING_STATES) -> GateBlock:
    """HW - flip(first working level) - HW, equal to 1/2 J - I up to sign."""
    hw = hadamard_walsh_block(params, rotor)
    return hw.then(flip_block(working_states[0], params, rotor)).then(hw, "inversion")


def equal_up_to_phase(U: Matrix, V: Matrix, states: Sequence[FloquetIndex], truncation: ModeTruncation) -> float:
    """max |V - e^{i phi} U| on the subspace, with phi chosen optimally."""
    a, b = restrict(U, states, truncation), restrict(V, states, truncation)
    overlap = np.vdot(a, b)
    phase = overlap / abs(overlap) if abs(overlap) > 0.0 else 1.0
    return float(np.max(np.abs(b - phase * a)))


# Grover search

def grover_operators(instance: GroverInstance, params: SpinParams, rotor: RotorConfig, compiled: bool):
    """(HW, flip, inversion) as Floquet operators, ideal or compiled."""
    w = rotor.spinning_speed
    states = instance.working_states
    if not compiled:
        return (
            hadamard_walsh(states, spinning_speed=w),
            conditional_flip(instance.marked, states, spinning_speed=w),
            inversion_about_mean(states, spinning_speed=w),
        )
    if tuple(states) != WORKING_STATES:
        raise ValidationError("compiled gates are defined for the default working levels only")
    return (
        compile_block(hadamard_walsh_block(params, rotor), params, rotor),
        compile_block(flip_block(instance.marked, params, rotor), params, rotor),
        compile_block(inversion_block(params, rotor, states), params, rotor),
    )


def run_grover(
    instance: GroverInstance,
    params: SpinParams,
    rotor: RotorConfig,
    K: Optional[int] = None,
    compiled: bool = False,
    t_grid: Optional[np.ndarray] = None,
) -> GroverResult:
    """Prepare the first working level, apply HW and the Grover iterations, read out.

    Raises:
        SearchFailedError: If the readout does not single out the marked level.
    """
    states = instance.working_states
    rho = make_pseudo_pure(PseudoPureSpec(states[0], 1.0), GATE_WINDOW_K)
    hw, flip, inversion = grover_operators(instance, params, rotor, compiled)
    rho = evolve(rho, hw)
    for _ in range(instance.n_iterations):
        rho = evolve(evolve(rho, flip), inversion)
    fidelity = rho.population(instance.marked)

    K_read = max(adaptive_truncation(params, rotor), max(abs(s.n) for s in states)) if K is None else K
    spectrum = spectrum_of(simulate_fid(rho, params, rotor, K_read, t_grid))
    library = analytic_library([s.as_tuple() for s in states], params, rotor, K_read, t_grid)
    try:
        ident = identify_state(spectrum, library)
    except AmbiguousReadoutError as exc:
        raise SearchFailedError(f"readout of marked {instance.marked.as_tuple()} ambiguous: {exc}") from exc
    if ident.index != instance.marked.as_tuple():
        raise SearchFailedError(
            f"search identified {ident.index} instead of {instance.marked.as_tuple()}"
        )
    logger.info(
        "Grover search completed",
        extra={"event": "grover", "residual": 1.0 - fidelity},
    )
    return GroverResult(
        marked=instance.marked,
        identified=ident.index,
        fidelity=fidelity,
        margin=ident.margin,
        compiled=compiled,
        density=rho,
        spectrum=spectrum,
    )
