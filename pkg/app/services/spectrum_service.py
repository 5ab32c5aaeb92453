"""Service layer for Floquet-level readout spectra.

Computes single-crystal or powder readouts of a pseudo-pure level |pm> for
an experiment configuration. Numerical work runs in a worker thread so the
async API stays responsive.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from fastapi.concurrency import run_in_threadpool

from app.core.config import settings
from app.core.exceptions import ValidationError
from app.core.logging import get_logger
from app.models.readout import DetectionChannel, FidTrace, Spectrum
from app.schemas.config import ExperimentConfig
from app.simulation.floquet import truncation_converged
from app.simulation.powder import GAMMA_POINTS, powder_spectrum, uniform_powder_grid
from app.simulation.readout import analytic_fid, sideband_sticks, spectrum_of
from app.simulation.shift import sideband_intensities

logger = get_logger("floquetsim.spectrum")

MODES = ("crystal", "powder")



def truncation_stable(intensities: np.ndarray, tol: float) -> bool:
    """Compare the sideband pattern at K with the same pattern cut back to K - 2.

    Below K = 2 the centerband alone is the reference.
    """
    A = np.asarray(intensities, dtype=float)
    K = (A.size - 1) // 2
    keep = max(K - 2, 0)
    lower = np.zeros_like(A)
    lower[K - keep:K + keep + 1] = A[K - keep:K + keep + 1]
    return truncation_converged(A, lower, tol)


@dataclass(frozen=True, eq=False)
class SpectrumRun:
    """Readout of one level with the numbers reported alongside it."""

    p: int
    m: int
    mode: str
    K: int
    sum_an: float
    converged: bool
    fid: FidTrace
    spectrum: Spectrum
    sticks: List[Tuple[float, float]]
    extra: Dict[str, Any] = field(default_factory=dict)
    truncation_converged: bool = True

    def summary(self) -> Dict[str, Any]:
        return {
            "level": [self.p, self.m],
            "mode": self.mode,
            "K": self.K,
            "sum_an": self.sum_an,
            "converged": self.converged,
            "truncation_converged": self.truncation_converged,
            "points": len(self.fid),
            "dwell_s": self.fid.dwell,
            "broadening_hz": self.spectrum.broadening,
            "sticks": [{"frequency_hz": f, "amplitude": a} for f, a in self.sticks],
            **self.extra,
        }


class SpectrumService:
    """Readout spectra of Floquet pseudo-pure states.

    Attributes:
        threads: Worker count for powder averaging.
    """

    def __init__(self, threads: Optional[int] = None):
        self.threads = threads or settings.DEFAULT_THREADS

    def compute(
        self,
        config: ExperimentConfig,
        p: int,
        m: int,
        mode: str = "crystal",
        broadening: Optional[float] = None,
    ) -> SpectrumRun:
        """Run one readout.

        Crystal readouts are stick spectra unless a broadening is given; powder
        readouts default to the configured Lorentzian width.

        Raises:
            ValidationError: On an unknown mode or a level outside the window.
            ConvergenceError: If adaptive K cannot reach the Parseval threshold.
        """
        if mode not in MODES:
            raise ValidationError(f"mode must be one of {', '.join(MODES)}")
        params, rotor = config.spin_params(), config.rotor_config()
        t = config.time_grid(rotor)

        if mode == "crystal":
            K = config.resolve_K(params, rotor)
            if abs(m) > K:
                raise ValidationError(f"mode index m={m} outside [-{K}, {K}]")
            A = sideband_intensities(params, rotor, K)
            fid = analytic_fid(p, m, params, rotor, K, DetectionChannel.PLUS, t, A)
            spectrum = spectrum_of(fid, broadening or 0.0)
            extra: Dict[str, Any] = {}
            measured = None
        else:
            pw = config.powder
            n_gamma = pw.n_gamma or (GAMMA_POINTS if params.eta > 0.0 else 1)
            grid = uniform_powder_grid(pw.n_beta, pw.n_alpha, n_gamma)
            fixed_K = None if config.truncation == "auto" else int(config.truncation)
            width = pw.broadening_hz if broadening is None else broadening
            result = powder_spectrum(
                p, m, params, rotor, fixed_K, grid, t, broadening=width, threads=self.threads
            )
            K, A, spectrum, fid = result.K, result.intensities, result.spectrum, result.fid
            measured = result.sticks
            extra = {
                "orientations": result.orientations,
                "phase_rad": result.phase,
                "imaginary_residue": result.imaginary_residue,
                "grid_change": result.grid_change,
                "grid_converged": result.converged,
            }

        sum_an = float(np.sum(A))
        converged = sum_an >= 1.0 - settings.PARSEVAL_TOLERANCE
        if not converged:
            logger.warning(
                "Readout computed with an unconverged sideband sum",
                extra={"event": "parseval_deficit", "K": K, "sum_an": sum_an},
            )
        stable = truncation_stable(A, settings.TRUNCATION_TOLERANCE)
        if not stable:
            logger.warning(
                "Readout changes between K and K-2",
                extra={"event": "truncation_unconverged", "K": K},
            )
        sticks = measured if measured is not None else sideband_sticks(p, m, params, rotor, K, intensities=A)
        return SpectrumRun(p, m, mode, K, sum_an, converged, fid, spectrum, sticks, extra, stable)

    async def run(
        self,
        config: ExperimentConfig,
        p: int,
        m: int,
        mode: str = "crystal",
        broadening: Optional[float] = None,
    ) -> SpectrumRun:
        return await run_in_threadpool(self.compute, config, p, m, mode, broadening)
