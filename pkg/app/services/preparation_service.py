"""Service layer for pseudo-pure state preparation.

Wraps the two labeling routes: temporal labeling with PASS schedules and
profile weights, and spatial labeling with a gradient sandwich.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from fastapi.concurrency import run_in_threadpool

from app.core.config import settings
from app.core.exceptions import ValidationError
from app.core.logging import get_logger
from app.models.floquet import FloquetDensity, FloquetIndex
from app.models.labeling import PassSchedule, ProfileWeights
from app.models.spin import ProfileKind, SidebandProfile
from app.schemas.config import ExperimentConfig
from app.simulation.readout import default_time_grid
from app.simulation.shift import effective_isotropic, sideband_intensities
from app.simulation.state_prep import (
    DEFAULT_Z_SAMPLES,
    labeling_window,
    pass_closed_form,
    pass_theta_sweep,
    pitch_set,
    prepare_by_gradient,
    resynthesize,
    simulate_pass_fid,
    solve_profile_weights,
)

logger = get_logger("floquetsim.preparation")

METHODS = ("pass", "gradient")
# t2 samples per pitch for the simulated PASS signals
PASS_T2_POINTS = 32


@dataclass(frozen=True, eq=False)
class PreparationRun:
    target: FloquetIndex
    method: str
    K: int
    fidelity: float
    schedules: List[PassSchedule] = field(default_factory=list)
    weights: Optional[ProfileWeights] = None
    density: Optional[FloquetDensity] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "target": list(self.target.as_tuple()),
            "method": self.method,
            "K": self.K,
            "fidelity": self.fidelity,
        }
        if self.schedules:
            out["schedules"] = [s.as_dict() for s in self.schedules]
        if self.weights is not None:
            out["weights"] = self.weights.as_dict()
        out.update(self.details)
        return out


def _overlap(a: np.ndarray, b: np.ndarray) -> float:
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    return float(abs(np.vdot(a, b)) / norm) if norm > 0.0 else 0.0


class PreparationService:
    """Pseudo-pure state preparation.

    Attributes:
        threads: Worker count for the gradient sample average.
    """

    def __init__(self, threads: Optional[int] = None):
        self.threads = threads or settings.DEFAULT_THREADS

    def prepare_pass(self, config: ExperimentConfig, target: FloquetIndex) -> PreparationRun:
        """Temporal labeling of the sideband order m.

        Schedules are solved on the pitch set of the labeling window, the
        weights select order m alone, and the fidelity compares the weighted
        sum of simulated PASS signals with the single-sideband target.

        Raises:
            ValidationError: If m lies outside the labeling window.
            SolverError: If a schedule cannot be found.
            SingularSystemError: If the weighting system is singular.
        """
        params, rotor = config.spin_params(), config.rotor_config()
        K = config.resolve_K(params, rotor)
        A = sideband_intensities(params, rotor, K)
        K_lab = labeling_window(A)
        if abs(target.n) > K_lab:
            raise ValidationError(
                f"sideband order {target.n} outside the labeling window [-{K_lab}, {K_lab}]"
            )
        pitches = pitch_set(K_lab)
        schedules = pass_theta_sweep(max(K_lab, 1), pitches, seed=config.seed)
        profile = SidebandProfile({target.n: 1.0}, ProfileKind.TARGET, K_lab)
        weights = solve_profile_weights(profile, pitches, A[K - K_lab:K + K_lab + 1])

        t2 = default_time_grid(rotor, PASS_T2_POINTS)
        simulated = []
        deviation = 0.0
        for schedule in schedules:
            run = simulate_pass_fid(schedule, params, rotor, t2, K=K)
            simulated.append(run.simulated)
            deviation = max(deviation, run.deviation)
        combined = resynthesize(weights, np.array(simulated))
        ideal = np.exp(-1j * (effective_isotropic(params, rotor) + target.n * rotor.spinning_speed) * t2)
        closed = resynthesize(weights, np.array([pass_closed_form(s.pitch, params, rotor, t2, K) for s in schedules]))
        fidelity = _overlap(ideal, combined)
        logger.info(
            "PASS labeling prepared",
            extra={"event": "prepare_pass", "K": K_lab, "residual": deviation},
        )
        return PreparationRun(
            target=target,
            method="pass",
            K=K_lab,
            fidelity=fidelity,
            schedules=schedules,
            weights=weights,
            details={
                "simulation_deviation": deviation,
                "closed_form_fidelity": _overlap(ideal, closed),
            },
        )

    def prepare_gradient(self, config: ExperimentConfig, target: FloquetIndex,
                         z_samples: int = DEFAULT_Z_SAMPLES) -> PreparationRun:
        params, rotor = config.spin_params(), config.rotor_config()
        K = config.resolve_K(params, rotor)
        prep = prepare_by_gradient(target, params, rotor, K, z_samples, threads=self.threads)
        logger.info(
            "Gradient labeling prepared",
            extra={"event": "prepare_gradient", "K": K, "residual": 1.0 - prep.fidelity},
        )
        return PreparationRun(
            target=target,
            method="gradient",
            K=K,
            fidelity=prep.fidelity,
            density=prep.density,
            details={
                "z_samples": prep.z_samples,
                "gradients": {
                    "first": prep.design.first.as_dict(),
                    "second": prep.design.second.as_dict(),
                    "note": prep.design.note,
                },
            },
        )

    def compute(self, config: ExperimentConfig, p: int, m: int, method: str = "gradient") -> PreparationRun:
        if method not in METHODS:
            raise ValidationError(f"method must be one of {', '.join(METHODS)}")
        try:
            target = FloquetIndex(p, m)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
        if method == "pass":
            return self.prepare_pass(config, target)
        return self.prepare_gradient(config, target)

    async def run(self, config: ExperimentConfig, p: int, m: int, method: str = "gradient") -> PreparationRun:
        return await run_in_threadpool(self.compute, config, p, m, method)
