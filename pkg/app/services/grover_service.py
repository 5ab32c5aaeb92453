"""Service layer for the four-item Grover search on Floquet levels."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

from fastapi.concurrency import run_in_threadpool

from app.core.config import settings
from app.core.exceptions import SearchFailedError, ValidationError
from app.core.logging import get_logger
from app.models.floquet import FloquetIndex
from app.models.gates import WORKING_STATES, GroverInstance, GroverResult
from app.schemas.config import ExperimentConfig
from app.simulation.gates import run_grover

logger = get_logger("floquetsim.grover")


@dataclass(frozen=True)
class GroverOutcome:
    """Result of one search, or the reason it failed."""

    marked: Tuple[int, int]
    result: Optional[GroverResult] = None
    error: Optional[str] = None

    @property
    def success(self) -> bool:
        return self.result is not None and self.result.success

    def summary(self) -> Dict[str, Any]:
        if self.result is not None:
            return self.result.as_dict()
        return {"marked": list(self.marked), "success": False, "error": self.error}


def parse_marked(value: str) -> Optional[FloquetIndex]:
    """"all" -> None; "p,m" or a working-state position 1-4 -> that level.

    Raises:
        ValidationError: If the value names no working state.
    """
    text = value.strip().lower()
    if text == "all":
        return None
    try:
        if "," in text:
            p, m = (int(part) for part in text.split(","))
            index = FloquetIndex(p, m)
        else:
            position = int(text)
            if not 1 <= position <= len(WORKING_STATES):
                raise IndexError
            index = WORKING_STATES[position - 1]
    except (ValueError, IndexError):
        raise ValidationError(f"marked item '{value}' is not 'all', 1-4 or 'p,m'")
    if index not in WORKING_STATES:
        raise ValidationError(f"{index.as_tuple()} is not a working state")
    return index


class GroverService:
    """Runs Grover searches, one marked level at a time or all four.

    Attributes:
        threads: Bound on concurrently running searches.
    """

    def __init__(self, threads: Optional[int] = None):
        self.threads = threads or settings.DEFAULT_THREADS

    def search(self, config: ExperimentConfig, marked: FloquetIndex, compiled: bool = False) -> GroverResult:
        params, rotor = config.spin_params(), config.rotor_config()
        K = max(config.resolve_K(params, rotor), 1)
        return run_grover(
            GroverInstance(marked),
            params,
            rotor,
            K=K,
            compiled=compiled,
            t_grid=config.time_grid(rotor),
        )

    def _outcome(self, config: ExperimentConfig, marked: FloquetIndex, compiled: bool) -> GroverOutcome:
        try:
            return GroverOutcome(marked.as_tuple(), self.search(config, marked, compiled))
        except SearchFailedError as exc:
            logger.warning(
                "Grover search failed",
                extra={"event": "grover_failed"},
            )
            return GroverOutcome(marked.as_tuple(), error=str(exc))

    def search_all(self, config: ExperimentConfig, compiled: bool = False) -> List[GroverOutcome]:
        """All four searches on a bounded pool; outcomes in working-state order."""
        with ThreadPoolExecutor(max_workers=min(self.threads, len(WORKING_STATES))) as pool:
            futures = [pool.submit(self._outcome, config, s, compiled) for s in WORKING_STATES]
            return [f.result() for f in futures]

    def compute(self, config: ExperimentConfig, marked: str = "all", compiled: bool = False) -> List[GroverOutcome]:
        index = parse_marked(marked)
        if index is None:
            return self.search_all(config, compiled)
        return [self._outcome(config, index, compiled)]

    async def run(self, config: ExperimentConfig, marked: str = "all", compiled: bool = False) -> List[GroverOutcome]:
        return await run_in_threadpool(self.compute, config, marked, compiled)
