"""Spectral readout of Floquet pseudo-pure states.

A level |pm> reads out as one group of sidebands, at eps_p * j * w_r for
j = m-K..m+K with signed intensities eps_p * A_{j-m}. Signals are expressed in
the frame rotating at the effective isotropic shift and normalized to the
centerband of the shift-free reference state |1 0>.

analytic_fid writes that pattern down directly; simulate_fid obtains it by
propagating the density matrix under the chemical-shift Floquet Hamiltonian
and averaging over rotor phases.
"""

import math
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import AmbiguousReadoutError, DimensionMismatchError, ValidationError
from app.core.logging import get_logger
from app.models.floquet import SPIN_DIM, FloquetDensity, FloquetEigensystem, FloquetIndex, ModeTruncation, epsilon
from app.models.readout import DetectionChannel, FidTrace, ReadoutFrame, Spectrum, StateIdentification
from app.models.spin import PulsePhase, RfPulse, RotorConfig, SpinParams
from app.simulation.floquet import SPIN_PLUS, diagonalize, embed_density, evolve
from app.simulation.shift import (
    accumulated_phase,
    cs_floquet_hamiltonian,
    effective_isotropic,
    rf_floquet_propagator,
    rf_spin_propagator,
    sideband_intensities,
)

logger = get_logger("floquetsim.readout")

DEFAULT_POINTS = 4096
POINTS_PER_PERIOD = 64
DEFAULT_BROADENING_HZ = 20.0
MIN_MARGIN = 0.1
DEFAULT_READ_PHASES = 32
LEVEL_FLOOR = 1e-12

_READ_PULSE = RfPulse.hard(math.pi / 2.0, PulsePhase.PLUS_X)


def default_time_grid(rotor: RotorConfig, n_points: int = DEFAULT_POINTS,
                      points_per_period: int = POINTS_PER_PERIOD) -> np.ndarray:
    """Acquisition times with dwell = rotor period / points_per_period."""
    return rotor.period / points_per_period * np.arange(n_points)


def _grid_dwell(t_grid: np.ndarray) -> float:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ValidationError("time grid needs at least two points")
    dwell = float(t[1] - t[0])
    if abs(t[0]) > 1e-15 or dwell <= 0.0 or np.max(np.abs(np.diff(t) - dwell)) > 1e-9 * dwell:
        raise ValidationError("time grid must be uniform and start at t = 0")
    return dwell


def reference_coherence() -> complex:
    """<1|U_90 |1><1| U_90^dagger|0>: coherence of the shift-free |1 0> readout."""
    U = rf_spin_propagator(_READ_PULSE)
    rho = U @ np.diag([0.0, 1.0]).astype(complex) @ U.conj().T
    return complex(rho[1, 0])


def _check_level(p: int, m: int, K: int) -> None:
    if p not in (0, 1):
        raise ValidationError("spin index p must be 0 or 1")
    if not -K <= m <= K:
        raise ValidationError(f"mode index m={m} outside [-{K}, {K}]")


def _sideband_signal(p: int, m: int, intensities: np.ndarray, K: int, spinning_speed: float,
                     t: np.ndarray, detection: DetectionChannel) -> np.ndarray:
    e = epsilon(p)
    j = np.arange(m - K, m + K + 1)
    arg = np.outer(t, e * j * spinning_speed)
    amps = e * intensities
    if detection is DetectionChannel.X:
        return np.cos(arg) @ amps + 0j
    if detection is DetectionChannel.Y:
        return -(np.sin(arg) @ amps) + 0j
    return np.exp(-1j * arg) @ amps


def analytic_fid(
    p: int,
    m: int,
    params: SpinParams,
    rotor: RotorConfig,
    K: int,
    detection: DetectionChannel = DetectionChannel.PLUS,
    t_grid: Optional[np.ndarray] = None,
    intensities: Optional[np.ndarray] = None,
) -> FidTrace:
    """Closed-form readout of |pm>.

    S_+(t) = sum_j eps_p A_{j-m} exp(-i eps_p j w_r t); the x and y channels are
    its real and imaginary parts so S_+ = S_x + i S_y pointwise.

    Args:
        intensities: Optional precomputed A_n (n = -K..K), e.g. powder-averaged.

    Raises:
        ValidationError: If m lies outside [-K, K].
    """
    _check_level(p, m, K)
    t = default_time_grid(rotor) if t_grid is None else np.asarray(t_grid, dtype=float)
    dwell = _grid_dwell(t)
    A = sideband_intensities(params, rotor, K) if intensities is None else np.asarray(intensities, dtype=float)
    if A.size != 2 * K + 1:
        raise DimensionMismatchError(f"expected {2 * K + 1} intensities, got {A.size}")
    detection = DetectionChannel(detection)
    samples = _sideband_signal(p, m, A, K, rotor.spinning_speed, t, detection)
    return FidTrace(dwell, samples, detection)


def _contracted_rows(eig: FloquetEigensystem, t_lab: np.ndarray, t_evolve: np.ndarray) -> np.ndarray:
    """Rows sum_b exp(i b w_r t_lab) <b p| exp(-i H_F t_evolve), shape (T, 2, dim).

    Tr[D C sigma^F C^dagger] with C these rows equals Tr[D~(t_lab) sigma^F(t_evolve)]
    for the detection operator D~ of app.simulation.floquet.
    """
    P = eig.eigenvectors
    blocks = P.reshape(eig.truncation.n_modes, SPIN_DIM, P.shape[1])
    phases = np.exp(1j * np.outer(t_lab, eig.truncation.modes * eig.spinning_speed))
    rows = np.einsum("tb,bpk->tpk", phases, blocks)
    rows = rows * np.exp(-1j * np.outer(t_evolve, eig.eigenvalues))[:, None, :]
    return rows @ P.conj().T


def _populated_levels(sigma0: FloquetDensity) -> Tuple[List[FloquetIndex], np.ndarray]:
    background = (1.0 - sigma0.purity) / sigma0.dim
    weights = np.real(np.diag(sigma0.matrix)) - background
    keep = np.flatnonzero(np.abs(weights) > LEVEL_FLOOR)
    return [FloquetIndex.unflatten(int(i), sigma0.truncation) for i in keep], weights[keep]


def simulate_fid(
    sigma0: FloquetDensity,
    params: SpinParams,
    rotor: RotorConfig,
    K: int,
    t_grid: Optional[np.ndarray] = None,
    n_phases: int = DEFAULT_READ_PHASES,
    frame: ReadoutFrame = ReadoutFrame.LEVEL,
) -> FidTrace:
    """Density-matrix readout through the chemical-shift Floquet propagator.

    sigma0 is embedded in a window of sigma0.K + 2K + 4 modes and rotated by an
    exact hard 90x pulse. At each of n_phases rotor phases the chemical-shift
    Floquet Hamiltonian is diagonalized and Tr[D~(t) exp(-i H_F t) sigma
    exp(i H_F t)] is taken with D = I_+. The phase average is written in the
    frame rotating at the effective isotropic shift and normalized to the
    shift-free |1 0> coherence; t counts from the end of the pulse.

    frame=LAB returns that signal. It depends on p alone: a rotor-synchronous
    observable cannot see where a state sits on the mode ladder.
    frame=LEVEL reads every populated level |pm> separately and multiplies its
    signal by exp(-i eps_p m w_r t), conjugating it for p = 0, so |pm> lands on
    the group eps_p j w_r, j = m-K..m+K. Coherences between levels drop out in
    this frame and the (1 - alpha)/N background of a pseudo-pure state is
    removed first.

    Raises:
        ValidationError: On a malformed time grid or n_phases < 1.
    """
    t = default_time_grid(rotor) if t_grid is None else np.asarray(t_grid, dtype=float)
    dwell = _grid_dwell(t)
    if n_phases < 1:
        raise ValidationError("n_phases must be at least 1")
    frame = ReadoutFrame(frame)
    w = rotor.spinning_speed
    window = ModeTruncation(sigma0.truncation.K + 2 * K + 4)
    pulse = rf_floquet_propagator(_READ_PULSE, rotor, window, exact=True)
    t_lab = t + _READ_PULSE.width

    if frame is ReadoutFrame.LAB:
        rotated = evolve(embed_density(sigma0, window), pulse).matrix
    else:
        levels, weights = _populated_levels(sigma0)
        off = (window.K - sigma0.truncation.K) * SPIN_DIM
        columns = [level.flatten(sigma0.truncation) + off for level in levels]
        vectors = pulse.matrix[:, columns]

    total = np.zeros((t.size, 1 if frame is ReadoutFrame.LAB else len(columns)), dtype=complex)
    for a in 2.0 * np.pi * np.arange(n_phases) / n_phases:
        eig = diagonalize(cs_floquet_hamiltonian(params.with_rotor_phase(a), rotor, window))
        C = _contracted_rows(eig, t_lab, t)
        if frame is ReadoutFrame.LAB:
            total[:, 0] += np.einsum("pq,tqi,ij,tpj->t", SPIN_PLUS, C, rotated, C.conj())
        else:
            Z = C @ vectors
            total += np.einsum("pq,tql,tpl->tl", SPIN_PLUS, Z, Z.conj())
    signals = total / (n_phases * reference_coherence())
    signals *= np.exp(1j * effective_isotropic(params, rotor) * t)[:, None]

    if frame is ReadoutFrame.LAB:
        samples = signals[:, 0]
    else:
        samples = np.zeros(t.size, dtype=complex)
        for level, weight, signal in zip(levels, weights, signals.T):
            if level.p == 0:
                signal = signal.conj()
            samples += weight * np.exp(-1j * level.epsilon * level.n * w * t) * signal
    logger.debug(
        "Simulated readout",
        extra={"event": "simulate_fid", "K": window.K, "orientations": n_phases},
    )
    return FidTrace(dwell, samples, DetectionChannel.PLUS)


def exact_crystal_fid(params: SpinParams, rotor: RotorConfig, t_grid: Optional[np.ndarray] = None) -> FidTrace:
    """Single-crystal transverse signal exp(-i Phi(t)) at a fixed rotor phase.

    Includes the effective isotropic shift; generally dispersive.
    """
    t = default_time_grid(rotor) if t_grid is None else np.asarray(t_grid, dtype=float)
    dwell = _grid_dwell(t)
    return FidTrace(dwell, np.exp(-1j * accumulated_phase(params, rotor, t)))


def rotor_averaged_fid(params: SpinParams, rotor: RotorConfig, t_grid: Optional[np.ndarray] = None,
                       n_phases: int = 64) -> FidTrace:
    """exact_crystal_fid averaged over the initial rotor phase.

    Equals sum_n A_n exp(-i (d_eff + n w_r) t), an absorptive sideband pattern.
    """
    t = default_time_grid(rotor) if t_grid is None else np.asarray(t_grid, dtype=float)
    dwell = _grid_dwell(t)
    total = np.zeros(t.size, dtype=complex)
    for a in 2.0 * np.pi * np.arange(n_phases) / n_phases:
        total += np.exp(-1j * accumulated_phase(params.with_rotor_phase(a), rotor, t))
    return FidTrace(dwell, total / n_phases)


def level_readout(reference: np.ndarray, p: int, m: int, rotor: RotorConfig, t: np.ndarray) -> np.ndarray:
    """Carry a shift-frame |1 0> signal over to the sideband group of |pm>.

    p = 0 reads the conjugate with the opposite sign; m shifts the group by
    eps_p m w_r.
    """
    eps = epsilon(p)
    base = reference if p == 1 else -np.conj(reference)
    return base * np.exp(-1j * eps * m * rotor.spinning_speed * np.asarray(t, dtype=float))


def lorentzian_broaden(spectrum: Spectrum, fwhm: float) -> Spectrum:
    """Circular convolution with a unit-area absorptive Lorentzian of width fwhm (Hz)."""
    if fwhm <= 0.0:
        return spectrum
    n = spectrum.amplitudes.size
    df = spectrum.resolution
    offsets = np.fft.fftfreq(n, 1.0 / (n * df))
    half = 0.5 * fwhm
    kernel = half / np.pi / (offsets ** 2 + half ** 2)
    kernel /= kernel.sum()
    data = np.fft.ifftshift(spectrum.amplitudes)
    conv = np.fft.ifft(np.fft.fft(data) * np.fft.fft(kernel))
    return Spectrum(spectrum.frequencies, np.fft.fftshift(conv), broadening=fwhm)


def spectrum_of(fid: FidTrace, broadening: float = 0.0) -> Spectrum:
    """Fourier transform with unit stick height; exp(-i w t) lands at +w / 2pi."""
    if broadening < 0.0:
        raise ValidationError("broadening must be non-negative")
    n = len(fid)
    amplitudes = np.fft.fftshift(np.fft.ifft(fid.samples))
    frequencies = np.fft.fftshift(np.fft.fftfreq(n, fid.dwell))
    return lorentzian_broaden(Spectrum(frequencies, amplitudes), broadening)


def sideband_sticks(p: int, m: int, params: SpinParams, rotor: RotorConfig, K: int,
                    intensities: Optional[np.ndarray] = None) -> List[Tuple[float, float]]:
    """(frequency Hz, signed amplitude) sticks of the |pm> readout."""
    _check_level(p, m, K)
    A = sideband_intensities(params, rotor, K) if intensities is None else np.asarray(intensities)
    e = epsilon(p)
    nu_r = rotor.spinning_speed / (2.0 * np.pi)
    return [(e * j * nu_r, float(e * A[j - m + K])) for j in range(m - K, m + K + 1)]


def extract_sticks(spectrum: Spectrum, rotor: RotorConfig, orders: Iterable[int]) -> Dict[int, complex]:
    """Bin values at j * nu_r for each requested order j."""
    nu_r = rotor.spinning_speed / (2.0 * np.pi)
    half = 0.5 * abs(spectrum.resolution)
    out = {}
    for j in orders:
        f = j * nu_r
        i = spectrum.index_of(f)
        if abs(spectrum.frequencies[i] - f) > half:
            raise ValidationError(f"sideband {j} falls outside the spectral window")
        out[int(j)] = complex(spectrum.amplitudes[i])
    return out


def build_library(
    states: Sequence[Tuple[int, int]],
    spectrum_for: Callable[[int, int], Spectrum],
) -> Dict[Tuple[int, int], Spectrum]:
    """Reference spectra keyed by (p, m)."""
    return {tuple(s): spectrum_for(*s) for s in states}


def analytic_library(
    states: Sequence[Tuple[int, int]],
    params: SpinParams,
    rotor: RotorConfig,
    K: int,
    t_grid: Optional[np.ndarray] = None,
    broadening: float = 0.0,
) -> Dict[Tuple[int, int], Spectrum]:
    A = sideband_intensities(params, rotor, K)
    return build_library(
        states,
        lambda p, m: spectrum_of(analytic_fid(p, m, params, rotor, K, t_grid=t_grid, intensities=A), broadening),
    )


def _score(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.real(np.vdot(y, x)) / (np.linalg.norm(x) * np.linalg.norm(y)))


def identify_state(
    spectrum: Spectrum,
    library: Mapping[Tuple[int, int], Spectrum],
    min_margin: float = MIN_MARGIN,
) -> StateIdentification:
    """Match a spectrum against reference spectra by normalized correlation.

    Raises:
        AmbiguousReadoutError: If the best match does not stand out by min_margin.
    """
    if not library:
        raise ValidationError("reference library is empty")
    x = spectrum.amplitudes
    if not np.any(x):
        raise AmbiguousReadoutError("spectrum carries no signal", margin=0.0)
    scores = []
    for key, ref in library.items():
        if ref.amplitudes.shape != x.shape:
            raise DimensionMismatchError("library spectrum grid does not match the readout grid")
        scores.append((_score(x, ref.amplitudes), tuple(key)))
    scores.sort(key=lambda s: -s[0])
    best, index = scores[0]
    runner_up = scores[1][0] if len(scores) > 1 else 0.0
    margin = (best - runner_up) / (1.0 - runner_up) if runner_up < 1.0 else 0.0
    result = StateIdentification(index=index, score=best, runner_up=runner_up, margin=float(margin))
    if margin < min_margin:
        raise AmbiguousReadoutError(
            f"readout ambiguous between {index} and {scores[1][1]} (margin {margin:.3g})", margin=margin
        )
    return result


def level_density(index: FloquetIndex, truncation: ModeTruncation) -> FloquetDensity:
    """Pure projector |pm><pm|."""
    m = np.zeros((truncation.dim, truncation.dim), dtype=complex)
    i = index.flatten(truncation)
    m[i, i] = 1.0
    return FloquetDensity(m, truncation, 1.0, index.as_tuple())
