"""Powder averaging of sideband readouts."""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import ValidationError
from app.core.logging import get_logger
from app.models.floquet import epsilon
from app.models.readout import FidTrace, PowderGrid, PowderSpectrum, Spectrum
from app.models.spin import RotorConfig, SpinParams
from app.simulation.readout import default_time_grid, exact_crystal_fid, extract_sticks, level_readout, spectrum_of
from app.simulation.shift import adaptive_truncation, effective_isotropic, sideband_intensities

logger = get_logger("floquetsim.powder")

DEFAULT_N_BETA = 50
DEFAULT_N_ALPHA = 24
GAMMA_POINTS = 8
GRID_CHANGE_TOL = 1e-2
CHUNK = 256


def uniform_powder_grid(
    n_beta: int = DEFAULT_N_BETA,
    n_alpha: int = DEFAULT_N_ALPHA,
    n_gamma: int = 1,
) -> PowderGrid:
    """Equal-area grid: cos(beta) at interval midpoints, alpha and gamma uniform.

    gamma spans [0, pi) since the tensor is invariant under gamma -> gamma + pi.
    """
    if min(n_beta, n_alpha, n_gamma) < 1:
        raise ValidationError("grid sizes must be positive")
    cos_beta = 1.0 - (2.0 * np.arange(n_beta) + 1.0) / n_beta
    beta = np.arccos(cos_beta)
    alpha = 2.0 * np.pi * np.arange(n_alpha) / n_alpha
    gamma = np.pi * np.arange(n_gamma) / n_gamma
    a, b, g = np.meshgrid(alpha, beta, gamma, indexing="ij")
    orientations = np.column_stack([a.ravel(), b.ravel(), g.ravel()])
    weights = np.full(orientations.shape[0], 1.0 / orientations.shape[0])
    return PowderGrid(orientations, weights, "uniform-equal-area")


def grid_for(params: SpinParams, n_beta: int = DEFAULT_N_BETA, n_alpha: int = DEFAULT_N_ALPHA) -> PowderGrid:
    """Default grid; gamma is gridded only when the asymmetry makes it matter."""
    return uniform_powder_grid(n_beta, n_alpha, GAMMA_POINTS if params.eta > 0.0 else 1)


def _chunk_sum(params: SpinParams, rotor: RotorConfig, K: int, orientations: np.ndarray,
               weights: np.ndarray) -> np.ndarray:
    acc = np.zeros(2 * K + 1)
    for euler, w in zip(orientations, weights):
        acc += w * sideband_intensities(params.with_euler(tuple(euler)), rotor, K)
    return acc


def powder_intensities(
    params: SpinParams,
    rotor: RotorConfig,
    K: int,
    grid: PowderGrid,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Weighted average of A_n over the grid.

    Chunks run on a thread pool; partial sums are added in chunk order so the
    result does not depend on scheduling.
    """
    n = len(grid)
    starts = range(0, n, CHUNK)
    workers = threads or settings.DEFAULT_THREADS
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_chunk_sum, params, rotor, K, grid.orientations[s:s + CHUNK], grid.weights[s:s + CHUNK])
            for s in starts
        ]
        partials: List[np.ndarray] = [f.result() for f in futures]
    total = np.zeros(2 * K + 1)
    for part in partials:
        total += part
    return total


def _fid_chunk_sum(params: SpinParams, rotor: RotorConfig, t: np.ndarray, orientations: np.ndarray,
                   weights: np.ndarray) -> np.ndarray:
    acc = np.zeros(t.size, dtype=complex)
    for euler, w in zip(orientations, weights):
        crystal = params.with_euler(tuple(euler))
        frame = np.exp(1j * effective_isotropic(crystal, rotor) * t)
        acc += w * exact_crystal_fid(crystal, rotor, t).samples * frame
    return acc


def powder_fid(
    params: SpinParams,
    rotor: RotorConfig,
    grid: PowderGrid,
    t_grid: Optional[np.ndarray] = None,
    threads: Optional[int] = None,
) -> FidTrace:
    """Weighted sum of single-crystal signals exp(-i Phi(t)) over the grid.

    Each crystallite is read at its own fixed rotor phase, so the alpha grid is
    what averages the dispersive parts away. Signals are in the frame of each
    crystallite's effective isotropic shift.
    """
    t = default_time_grid(rotor) if t_grid is None else np.asarray(t_grid, dtype=float)
    n = len(grid)
    workers = threads or settings.DEFAULT_THREADS
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_fid_chunk_sum, params, rotor, t, grid.orientations[s:s + CHUNK], grid.weights[s:s + CHUNK])
            for s in range(0, n, CHUNK)
        ]
        partials: List[np.ndarray] = [f.result() for f in futures]
    total = np.zeros(t.size, dtype=complex)
    for part in partials:
        total += part
    return FidTrace(float(t[1] - t[0]), total)


def powder_truncation(params: SpinParams, rotor: RotorConfig, grid: PowderGrid) -> int:
    """Largest adaptive K over the distinct (beta, gamma) pairs of the grid."""
    pairs = np.unique(np.round(grid.orientations[:, 1:], 12), axis=0)
    return max(adaptive_truncation(params.with_euler((0.0, b, g)), rotor) for b, g in pairs)


def zero_order_phase(spectrum: Spectrum) -> float:
    """Phase that makes the sum of squared bins real and its real part positive."""
    s = spectrum.amplitudes
    return 0.5 * float(np.angle(np.sum(s * s)))


def imaginary_residue(spectrum: Spectrum, phase: float) -> float:
    phased = spectrum.amplitudes * np.exp(-1j * phase)
    peak = float(np.max(np.abs(phased)))
    return float(np.max(np.abs(phased.imag))) / peak if peak > 0.0 else 0.0


def measured_sticks(spectrum: Spectrum, p: int, m: int, K: int, rotor: RotorConfig) -> List[Tuple[float, float]]:
    """Signed stick heights of the |pm> group read off a phased stick spectrum.

    Orders beyond the spectral window are left out.
    """
    e = epsilon(p)
    nu_r = rotor.spinning_speed / (2.0 * np.pi)
    top = float(np.max(np.abs(spectrum.frequencies)))
    orders = [e * j for j in range(m - K, m + K + 1) if abs(j) * nu_r <= top]
    found = extract_sticks(spectrum, rotor, orders)
    return [(o * nu_r, float(found[o].real)) for o in orders]


def powder_spectrum(
    p: int,
    m: int,
    params: SpinParams,
    rotor: RotorConfig,
    K: Optional[int] = None,
    grid: Optional[PowderGrid] = None,
    t_grid: Optional[np.ndarray] = None,
    broadening: float = 0.0,
    threads: Optional[int] = None,
    check_grid: bool = True,
) -> PowderSpectrum:
    """Powder-averaged readout of |pm>.

    The spectrum and its imaginary residue come from the averaged time-domain
    signal; the reported intensities are the averaged A_n. The orientation of
    `params` is ignored. With check_grid the A_n average is repeated on a
    grid with twice the beta points; a change above 1e-2 is logged and
    reported as unconverged.
    """
    grid = grid or grid_for(params)
    if K is None:
        K = max(powder_truncation(params, rotor, grid), abs(m))
    A = powder_intensities(params, rotor, K, grid, threads)

    change = None
    converged = True
    if check_grid:
        n_beta = np.unique(np.round(grid.orientations[:, 1], 12)).size
        n_alpha = np.unique(np.round(grid.orientations[:, 0], 12)).size
        n_gamma = np.unique(np.round(grid.orientations[:, 2], 12)).size
        finer = uniform_powder_grid(2 * n_beta, n_alpha, n_gamma)
        change = float(np.max(np.abs(powder_intensities(params, rotor, K, finer, threads) - A)))
        converged = change <= GRID_CHANGE_TOL
        if not converged:
            logger.warning(
                "Powder grid not converged",
                extra={"event": "powder_unconverged", "orientations": len(grid), "residual": change},
            )

    t = default_time_grid(rotor) if t_grid is None else np.asarray(t_grid, dtype=float)
    reference = powder_fid(params, rotor, grid, t, threads)
    fid = FidTrace(reference.dwell, level_readout(reference.samples, p, m, rotor, t))
    sticks = spectrum_of(fid)
    phase = zero_order_phase(sticks)
    residue = imaginary_residue(sticks, phase)
    phased = Spectrum(sticks.frequencies, sticks.amplitudes * np.exp(-1j * phase))
    return PowderSpectrum(
        spectrum=spectrum_of(fid, broadening) if broadening > 0.0 else sticks,
        intensities=A,
        K=K,
        phase=phase,
        imaginary_residue=residue,
        grid_change=change,
        converged=converged,
        orientations=len(grid),
        fid=fid,
        sticks=measured_sticks(phased, p, m, K, rotor),
    )
