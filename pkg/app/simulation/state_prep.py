"""Preparation of Floquet pseudo-pure states.

Two labeling routes are provided. Temporal labeling runs the five pi-pulse
PASS block at a set of pitches Theta and combines the experiments with
weights; spatial labeling sandwiches a 90 degree pulse between field
gradients and averages over the sample.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import least_squares

from app.core.config import settings
from app.core.exceptions import SingularSystemError, SolverError, ValidationError
from app.core.logging import get_logger
from app.models.floquet import (
    SPIN_DIM,
    FloquetDensity,
    FloquetIndex,
    ModeTruncation,
    epsilon,
)
from app.models.labeling import (
    PASS_PULSES,
    PASS_RESIDUAL_TOL,
    GradientDesign,
    GradientEvent,
    GradientPreparation,
    PassFid,
    PassSchedule,
    ProfileWeights,
    PseudoPureSpec,
)
from app.models.spin import PulsePhase, RfPulse, RotorConfig, SidebandProfile, SpinParams
from app.simulation.floquet import (
    SPIN_HALF_Z,
    diagonalize,
    evolve,
    floquet_propagator,
    interval_propagator,
    lab_propagator,
)
from app.simulation.shift import (
    cs_floquet_hamiltonian,
    effective_isotropic,
    propagator_truncation,
    rf_floquet_propagator,
    rf_spin_propagator,
    sideband_intensities,
    adaptive_truncation,
)

logger = get_logger("floquetsim.state_prep")

BLOCK_PHASE = 2.0 * math.pi
PASS_HARMONICS = (1, 2)
PASS_SEEDS = 16
PASS_DEVIATION_TOL = 1e-4
SINGULAR_CONDITION = 1e12
LABELING_FLOOR = 1e-6
MIN_Z_SAMPLES = 64
DEFAULT_Z_SAMPLES = 1024
Z_CHUNK = 64
WINDING_TOL = 1e-9
PATHWAY_FLOOR = 1e-10

_SIGNS = np.array([(-1.0) ** q for q in range(1, PASS_PULSES + 1)])

Element = Tuple[FloquetIndex, FloquetIndex]


# Pseudo-pure and thermal states

def make_pseudo_pure(spec: PseudoPureSpec, K: int) -> FloquetDensity:
    """(1 - alpha) I / N + alpha |pm><pm| over the 2(2K+1) dimensional window.

    Raises:
        ValidationError: If the target mode lies outside the window.
    """
    trunc = ModeTruncation(K)
    if not trunc.contains(spec.target.n):
        raise ValidationError(f"target mode {spec.target.n} outside [-{K}, {K}]")
    alpha = spec.purity
    rho = (1.0 - alpha) * np.eye(trunc.dim, dtype=complex) / trunc.dim
    i = spec.target.flatten(trunc)
    rho[i, i] += alpha
    return FloquetDensity(rho, trunc, alpha, spec.target.as_tuple())


def thermal_floquet_density(
    K: int,
    polarization: float = 1.0,
    convention: str = "origin",
    mode: int = 0,
) -> FloquetDensity:
    """Thermal state sigma(0) = 1/2 + polarization * I_z lifted to Floquet space.

    convention="origin" places sigma(0) in the single block <mode|.|mode>;
    convention="diagonal" repeats it on every mode with weight 1/(2K+1).
    """
    trunc = ModeTruncation(K)
    if not -1.0 <= polarization <= 1.0:
        raise ValidationError("polarization must lie in [-1, 1]")
    spin = 0.5 * np.eye(SPIN_DIM, dtype=complex) + polarization * SPIN_HALF_Z
    if convention == "origin":
        if not trunc.contains(mode):
            raise ValidationError(f"mode {mode} outside [-{K}, {K}]")
        rho = np.zeros((trunc.dim, trunc.dim), dtype=complex)
        i = (mode + K) * SPIN_DIM
        rho[i:i + SPIN_DIM, i:i + SPIN_DIM] = spin
    elif convention == "diagonal":
        rho = np.kron(np.eye(trunc.n_modes), spin) / trunc.n_modes
    else:
        raise ValidationError(f"unknown thermal convention '{convention}'")
    return FloquetDensity(rho, trunc, polarization)


def pseudo_pure_fidelity(rho: FloquetDensity, target: FloquetIndex) -> float:
    """Normalized overlap of the deviation of rho with that of |target>.

    Both deviations are restricted to the two levels of the target mode, with
    their traceless part taken there.
    """
    trunc = rho.truncation
    i = (target.n + trunc.K) * SPIN_DIM
    block = rho.matrix[i:i + SPIN_DIM, i:i + SPIN_DIM]
    dev = block - np.trace(block) * np.eye(SPIN_DIM) / SPIN_DIM
    ref = np.zeros((SPIN_DIM, SPIN_DIM), dtype=complex)
    ref[target.p, target.p] = 1.0
    ref -= np.eye(SPIN_DIM) / SPIN_DIM
    norm = np.linalg.norm(dev) * np.linalg.norm(ref)
    if norm == 0.0:
        return 0.0
    return float(np.real(np.vdot(ref, dev)) / norm)


# PASS timing

def _pass_residuals(positions: np.ndarray, pitch: float) -> np.ndarray:
    out = []
    for m in PASS_HARMONICS:
        c = 2.0 * np.sum(_SIGNS * np.exp(1j * m * positions)) + 1.0 + np.exp(1j * m * (pitch + BLOCK_PHASE))
        out.extend((c.real, c.imag))
    out.append(2.0 * np.sum(_SIGNS * positions) + BLOCK_PHASE)
    return np.array(out)


def pass_residual(positions: Sequence[float], pitch: float) -> float:
    """Largest absolute violation of the PASS timing constraints."""
    return float(np.max(np.abs(_pass_residuals(np.asarray(positions, dtype=float), pitch))))


def _seeds(count: int, seed: int) -> List[np.ndarray]:
    rng = np.random.default_rng(seed)
    seeds = [BLOCK_PHASE * np.arange(1, PASS_PULSES + 1) / (PASS_PULSES + 1)]
    while len(seeds) < count:
        seeds.append(np.sort(rng.uniform(0.0, BLOCK_PHASE, PASS_PULSES)))
    return seeds


def _refine(x0: np.ndarray, pitch: float):
    sol = least_squares(
        _pass_residuals, x0, args=(pitch,), method="lm",
        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000,
    )
    return sol.x, pass_residual(sol.x, pitch)


def _acceptable(positions: np.ndarray, residual: float) -> bool:
    ordered = np.all(np.diff(positions) > 0.0) and positions[0] > 0.0 and positions[-1] < BLOCK_PHASE
    return bool(ordered and residual <= PASS_RESIDUAL_TOL)


def solve_pass_timings(
    n_sidebands: int,
    pitch: float,
    seeds: int = PASS_SEEDS,
    initial: Optional[Sequence[float]] = None,
    seed: int = 0,
) -> PassSchedule:
    """Pulse positions of the five pi-pulse PASS block for one pitch.

    Solves, for the rotor harmonics m = 1, 2 carried by the shift interaction,
    2 sum_q (-1)^q exp(i m theta_q) + 1 + exp(i m (Theta + theta_T)) = 0 together
    with 2 sum_q (-1)^q theta_q + theta_T = 0, theta_T = 2 pi, by
    Levenberg-Marquardt from several starting points. theta_T = 0 has no
    ordered solution: the alternating sum of ordered positions is positive.

    The shift interaction only carries the harmonics 1 and 2, so the timings
    do not depend on n_sidebands; it is checked and passed along with the
    schedule.

    Raises:
        ValidationError: On n_sidebands < 1 or Theta outside [0, 2 pi).
        SolverError: If no start converges to an ordered solution.
    """
    if n_sidebands < 1:
        raise ValidationError("n_sidebands must be at least 1")
    if not 0.0 <= pitch < BLOCK_PHASE:
        raise ValidationError("pitch must lie in [0, 2*pi)")

    starts = _seeds(seeds, seed)
    if initial is not None:
        starts.insert(0, np.asarray(initial, dtype=float))
    best = math.inf
    for attempt, x0 in enumerate(starts):
        positions, residual = _refine(x0, pitch)
        best = min(best, residual)
        if _acceptable(positions, residual):
            if attempt > 0:
                logger.debug(
                    "PASS solve needed restarts",
                    extra={"event": "pass_restart", "residual": residual},
                )
            return PassSchedule(pitch, tuple(positions), BLOCK_PHASE, n_sidebands, residual)
    logger.warning("PASS root finding failed", extra={"event": "pass_failed", "residual": best})
    raise SolverError(
        f"no PASS solution for pitch {pitch:.6f} from {len(starts)} starts (best residual {best:.3e})",
        best_residual=best,
    )


def pass_theta_sweep(
    n_sidebands: int,
    pitches: Sequence[float],
    seeds: int = PASS_SEEDS,
    seed: int = 0,
) -> List[PassSchedule]:
    """Schedules along a pitch sweep, each seeded from its predecessor."""
    schedules: List[PassSchedule] = []
    previous = None
    for pitch in pitches:
        schedule = solve_pass_timings(n_sidebands, float(pitch), seeds, previous, seed)
        schedules.append(schedule)
        previous = schedule.positions
    return schedules


def pitch_set(K: int) -> np.ndarray:
    """Theta_j = 2 pi j / (2K+1), j = 0..2K."""
    n = 2 * K + 1
    return 2.0 * np.pi * np.arange(n) / n


# PASS signals

def pass_closed_form(pitch: float, params: SpinParams, rotor: RotorConfig, t2: np.ndarray,
                     K: Optional[int] = None) -> np.ndarray:
    """S(t2) = sum_k A_k exp(i k Theta) exp(-i (d_eff + k w_r) t2)."""
    K = adaptive_truncation(params, rotor) if K is None else K
    A = sideband_intensities(params, rotor, K)
    k = np.arange(-K, K + 1)
    t2 = np.asarray(t2, dtype=float)
    waves = np.exp(-1j * np.outer(t2, k * rotor.spinning_speed))
    return np.exp(-1j * effective_isotropic(params, rotor) * t2) * (waves @ (A * np.exp(1j * k * pitch)))


def _ideal(flip: float, phase: PulsePhase = PulsePhase.PLUS_X) -> np.ndarray:
    return rf_spin_propagator(RfPulse.hard(flip, phase))


def _pass_block(schedule: PassSchedule, rotor: RotorConfig, free) -> np.ndarray:
    """Lab-frame propagator of the pulse block; free(t_a, t_b) gives U(t_b, t_a)."""
    pi_x = _ideal(math.pi)
    edges = np.concatenate(([0.0], schedule.pulse_times(rotor.spinning_speed)))
    U = np.eye(SPIN_DIM, dtype=complex)
    for a, b in zip(edges[:-1], edges[1:]):
        U = pi_x @ free(a, b) @ U
    return free(edges[-1], rotor.period) @ U


def simulate_pass_fid(
    schedule: PassSchedule,
    params: SpinParams,
    rotor: RotorConfig,
    t2: np.ndarray,
    n_phases: int = 64,
    K: Optional[int] = None,
) -> PassFid:
    """PASS signal by closed form and by explicit simulation.

    The simulation applies an ideal 90x pulse to I_z, runs the pi-pulse block
    with free evolution from the Floquet propagator, detects the (1,0)
    coherence after t2 and averages over n_phases initial rotor phases. Both
    signals are normalized to the shift-free case.
    """
    if not schedule.within_tolerance:
        raise ValidationError(f"schedule residual {schedule.residual:.3e} exceeds tolerance")
    t2 = np.asarray(t2, dtype=float)
    K = adaptive_truncation(params, rotor) if K is None else K
    closed = pass_closed_form(schedule.pitch, params, rotor, t2, K)

    U90 = _ideal(0.5 * math.pi)
    rho0 = U90 @ SPIN_HALF_Z @ U90.conj().T
    ref_block = _pass_block(schedule, rotor, lambda a, b: np.eye(SPIN_DIM, dtype=complex))
    reference = (ref_block @ rho0 @ ref_block.conj().T)[1, 0]

    window = propagator_truncation(params, rotor)
    T = rotor.period
    signal = np.zeros(t2.size, dtype=complex)
    for a in 2.0 * np.pi * np.arange(n_phases) / n_phases:
        eig = diagonalize(cs_floquet_hamiltonian(params.with_rotor_phase(a), rotor, window))
        block = _pass_block(schedule, rotor, lambda ta, tb, e=eig: interval_propagator(e, ta, tb))
        rho = block @ rho0 @ block.conj().T
        start_inv = np.linalg.inv(lab_propagator(eig, T))
        for i, t in enumerate(t2):
            V = lab_propagator(eig, T + t) @ start_inv
            signal[i] += (V @ rho @ V.conj().T)[1, 0]
    simulated = signal / n_phases / reference

    scale = max(float(np.max(np.abs(closed))), 1e-300)
    deviation = float(np.max(np.abs(closed - simulated))) / scale
    flagged = deviation > PASS_DEVIATION_TOL
    if flagged:
        logger.warning(
            "PASS closed form and simulation disagree",
            extra={"event": "pass_mismatch", "residual": deviation, "K": K},
        )
    return PassFid(t2, closed, simulated, deviation, flagged)


def separate_sideband_orders(signals: np.ndarray, K: int) -> Dict[int, np.ndarray]:
    """Split signals recorded at Theta_j = 2 pi j / N into sideband orders.

    Args:
        signals: Array of shape (N, T), one row per pitch.

    Returns:
        k -> signal carried by the exp(i k Theta) component, |k| <= K.
    """
    signals = np.atleast_2d(np.asarray(signals, dtype=complex))
    n = signals.shape[0]
    if n < 2 * K + 1:
        raise ValidationError(f"{n} pitches cannot separate {2 * K + 1} sideband orders")
    coeffs = np.fft.fft(signals, axis=0) / n
    return {k: coeffs[k % n] for k in range(-K, K + 1)}


# Profile weights

def solve_profile_weights(
    target: SidebandProfile,
    pitches: Sequence[float],
    intensities: np.ndarray,
) -> ProfileWeights:
    """Weights x with sum_j A_k exp(i k Theta_j) x_j = Delta_k for |k| <= K.

    Raises:
        ValidationError: If the system is not square.
        SingularSystemError: If its condition number exceeds 1e12.
    """
    K = target.K
    pitches = np.asarray(pitches, dtype=float)
    A_k = np.asarray(intensities, dtype=float)
    if pitches.size != 2 * K + 1 or A_k.size != 2 * K + 1:
        raise ValidationError(f"need {2 * K + 1} pitches and intensities for K={K}")
    k = np.arange(-K, K + 1)
    A = A_k[:, None] * np.exp(1j * np.outer(k, pitches))
    condition = float(np.linalg.cond(A))
    if not np.isfinite(condition) or condition > SINGULAR_CONDITION:
        raise SingularSystemError(
            f"pitch system is singular (condition {condition:.3e}); choose a different pitch set"
        )
    delta = target.as_array().astype(complex)
    x = linalg.solve(A, delta)
    residual = float(np.max(np.abs(A @ x - delta)))
    unphysical = bool(np.any(np.abs(x.imag) > 1e-9) or np.any(np.abs(x) > 1.0 + 1e-12))
    return ProfileWeights(x, pitches, target, residual, condition, unphysical)


def labeling_window(intensities: np.ndarray, floor: float = LABELING_FLOOR) -> int:
    """Largest K' whose edge intensities A_{+-K'} reach floor * max A.

    Orders beyond it carry too little intensity to be weighted up without an
    ill-conditioned pitch system.
    """
    A = np.asarray(intensities, dtype=float)
    K = (A.size - 1) // 2
    peak = float(np.max(A))
    for k in range(K, 0, -1):
        if min(A[K - k], A[K + k]) >= floor * peak:
            return k
    return 0


def resynthesize(weights: ProfileWeights, signals: np.ndarray) -> np.ndarray:
    """Weighted combination sum_j x_j S_j of per-pitch signals."""
    return np.asarray(weights.x) @ np.atleast_2d(np.asarray(signals, dtype=complex))


def amplitude_adjustment_angle(x: complex) -> float:
    """Flip angle theta_x of the amplitude-adjustment pulse pair, sin theta_x = x."""
    x = complex(x)
    if abs(x.imag) > 1e-12 or abs(x.real) > 1.0:
        raise ValidationError(f"weight {x} cannot be realized as sin(theta_x)")
    return math.asin(x.real)


# Gradient labeling

def _winding_balance(p: int, q: int, k: int, l: int, g1: GradientEvent, g2: GradientEvent) -> Fraction:
    return epsilon(p) * k * g2.winding + epsilon(q) * l * g1.winding


def gradient_selection_survives(
    p: int, q: int, k: int, l: int,
    g1: GradientEvent, g2: GradientEvent,
    spinning_speed: float = 1.0,
) -> bool:
    """eps_p k w_r G2 t2 + eps_q l w_r G1 t1 == 0, decided in exact arithmetic.

    The pathway is a mode coherence of order l inside spin manifold q during
    G1 and of order k inside manifold p during G2. The isotropic shift cancels
    from such coherences; spin coherences are decided by coherence_survives.
    """
    if spinning_speed <= 0.0:
        raise ValidationError("spinning speed must be positive")
    return _winding_balance(p, q, k, l, g1, g2) == 0


def gradient_winding(row: FloquetIndex, col: FloquetIndex, g: GradientEvent, offset: float = 0.0) -> float:
    """Turns of |row><col| across the sample, in units of pi z.

    offset is delta_0 / w_r; it enters only when row and col differ in spin.
    """
    w = float(g.winding)
    return w * ((row.epsilon * row.n - col.epsilon * col.n) + (row.epsilon - col.epsilon) * offset)


def pathway_winding(before: Element, after: Element, g1: GradientEvent, g2: GradientEvent,
                    params: SpinParams, rotor: RotorConfig) -> float:
    """Net winding of the pathway before -> after through the G1 - pulse - G2 sandwich."""
    offset = params.delta_iso / rotor.spinning_speed
    return gradient_winding(*before, g1, offset) + gradient_winding(*after, g2, offset)


def coherence_survives(before: Element, after: Element, g1: GradientEvent, g2: GradientEvent,
                       params: SpinParams, rotor: RotorConfig, tol: float = WINDING_TOL) -> bool:
    """True when the pathway's net winding vanishes, isotropic shift included."""
    return abs(pathway_winding(before, after, g1, g2, params, rotor)) <= tol


def z_positions(z_samples: int) -> np.ndarray:
    """Midpoints of z_samples equal slices of [-1/2, 1/2]."""
    return -0.5 + (np.arange(z_samples) + 0.5) / z_samples


def winding_average(winding: float, z_samples: int = DEFAULT_Z_SAMPLES) -> float:
    """|<exp(-i pi z N)>_z|: what a pathway of net winding N keeps after the z average."""
    return float(abs(np.mean(np.exp(-1j * np.pi * winding * z_positions(z_samples)))))


def _level_arrays(truncation: ModeTruncation):
    eps = np.tile([epsilon(0), epsilon(1)], truncation.n_modes).astype(float)
    modes = np.repeat(truncation.modes, SPIN_DIM).astype(float)
    return eps, modes


def _gradient_phase(z: float, g: GradientEvent, eps: np.ndarray, modes: np.ndarray,
                    delta_iso: float, spinning_speed: float) -> np.ndarray:
    t_g = g.seconds(spinning_speed)
    return np.exp(-0.5j * z * float(g.strength) * eps * (delta_iso + modes * spinning_speed) * t_g)


def apply_gradient_sandwich(
    rho: FloquetDensity,
    g1: GradientEvent,
    pulse90: RfPulse,
    g2: GradientEvent,
    params: SpinParams,
    rotor: RotorConfig,
    z_samples: int = DEFAULT_Z_SAMPLES,
    threads: Optional[int] = None,
) -> FloquetDensity:
    """Sample average of G1 - pulse - G2 applied to rho.

    Each gradient pairs exp(-i H_F t_G) with the diagonal D_G(z) carrying
    exp(-i z G eps_p (delta_0 + n w_r) t_G / 2). G1 winds the levels entering
    the sandwich and G2 the levels leaving it, so a pathway |a><b| -> |c><d|
    picks up exp(-i pi z N) with N = pathway_winding(a, b; c, d). z runs over
    midpoint samples of the unit sample length; chunks are reduced in order.

    Raises:
        ValidationError: If z_samples < 64.
    """
    if z_samples < MIN_Z_SAMPLES:
        raise ValidationError(f"z_samples must be at least {MIN_Z_SAMPLES}")
    trunc = rho.truncation
    w = rotor.spinning_speed
    eig = diagonalize(cs_floquet_hamiltonian(params, rotor, trunc))
    U1 = floquet_propagator(eig, g1.seconds(w)).matrix
    U2 = floquet_propagator(eig, g2.seconds(w)).matrix
    P = rf_floquet_propagator(pulse90, rotor, trunc, exact=True).matrix
    V = U2 @ P @ U1
    eps, modes = _level_arrays(trunc)
    d0 = params.delta_iso

    def chunk(zs: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(rho.matrix)
        for z in zs:
            d1 = _gradient_phase(z, g1, eps, modes, d0, w)
            d2 = _gradient_phase(z, g2, eps, modes, d0, w)
            x = V @ (rho.matrix * np.outer(d1, d1.conj())) @ V.conj().T
            acc += x * np.outer(d2, d2.conj())
        return acc

    zs = z_positions(z_samples)
    with ThreadPoolExecutor(max_workers=threads or settings.DEFAULT_THREADS) as pool:
        partials = list(pool.map(chunk, [zs[s:s + Z_CHUNK] for s in range(0, z_samples, Z_CHUNK)]))
    total = np.zeros_like(rho.matrix)
    for part in partials:
        total += part
    return rho.with_matrix(total / z_samples)


def gradient_pathway_amplitude(
    before: Element,
    after: Element,
    g1: GradientEvent,
    pulse90: RfPulse,
    g2: GradientEvent,
    params: SpinParams,
    rotor: RotorConfig,
    truncation: ModeTruncation,
    z_samples: int = DEFAULT_Z_SAMPLES,
) -> float:
    """Fraction of the before -> after pathway left by the sandwich.

    Runs apply_gradient_sandwich on the single element |a><b| and divides the
    |c><d| output by the same sequence with the gradients switched off.

    Raises:
        SingularSystemError: If the pulse and free evolution alone do not
            connect the two elements.
    """
    src = np.zeros((truncation.dim, truncation.dim), dtype=complex)
    src[before[0].flatten(truncation), before[1].flatten(truncation)] = 1.0
    rho = FloquetDensity(src, truncation)
    row, col = after[0].flatten(truncation), after[1].flatten(truncation)
    off1, off2 = GradientEvent(0, g1.duration), GradientEvent(0, g2.duration)
    reference = apply_gradient_sandwich(rho, off1, pulse90, off2, params, rotor, MIN_Z_SAMPLES, threads=1)
    ref = reference.matrix[row, col]
    if abs(ref) < PATHWAY_FLOOR:
        raise SingularSystemError("pathway is not connected by the pulse and free evolution")
    out = apply_gradient_sandwich(rho, g1, pulse90, g2, params, rotor, z_samples, threads=1)
    return float(abs(out.matrix[row, col] / ref))


def design_gradient_selection(target: FloquetIndex) -> GradientDesign:
    """Gradient pair for labeling |pm> from a longitudinal state.

    The first gradient is off; the second winds every mode by an even number of
    turns, so populations survive and all coherences average out.
    """
    return GradientDesign(
        first=GradientEvent(0, 0),
        second=GradientEvent(2, 1),
        target=target.as_tuple(),
        note="crusher after 90(-x) - 90(x); even winding removes all coherences",
    )


def prepare_by_gradient(
    target: FloquetIndex,
    params: SpinParams,
    rotor: RotorConfig,
    K: int,
    z_samples: int = DEFAULT_Z_SAMPLES,
    polarization: float = 1.0,
    threads: Optional[int] = None,
) -> GradientPreparation:
    """Label |pm> from the thermal state placed on mode m.

    p = 1 is reached by a preceding 180 degree pulse. A 90(-x) pre-pulse and the
    G1 - 90(x) - G2 sandwich follow.
    """
    trunc = ModeTruncation(K)
    if not trunc.contains(target.n):
        raise ValidationError(f"target mode {target.n} outside [-{K}, {K}]")
    rho = thermal_floquet_density(K, polarization, "origin", mode=target.n)
    if target.p == 1:
        rho = evolve(rho, rf_floquet_propagator(RfPulse.hard(math.pi), rotor, trunc, exact=True))
    pre = RfPulse.hard(0.5 * math.pi, PulsePhase.MINUS_X)
    rho = evolve(rho, rf_floquet_propagator(pre, rotor, trunc, exact=True))
    design = design_gradient_selection(target)
    out = apply_gradient_sandwich(
        rho, design.first, RfPulse.hard(0.5 * math.pi), design.second, params, rotor, z_samples, threads
    )
    fidelity = pseudo_pure_fidelity(out, target)
    return GradientPreparation(
        density=FloquetDensity(out.matrix, trunc, polarization, target.as_tuple()),
        fidelity=fidelity,
        design=design,
        z_samples=z_samples,
    )
