"""Structured logging for the Floquet MAS simulator.

All loggers live under the "floquetsim" namespace. The namespace root owns a
single JSON-lines handler on stderr, so CSV and JSON artifacts written to
stdout or disk never interleave with log output. Level comes from LOG_LEVEL.
"""

import json
import logging
import math
import os
from datetime import datetime, timezone
from typing import Any
from app.core.config import settings

ROOT_LOGGER = "floquetsim"

_EXTRA_KEYS = (
    # HTTP
    "method",
    "path",
    "status_code",
    "duration_ms",
    "client_ip",
    "request_id",
    # simulation
    "event",
    "K",
    "residual",
    "sum_an",
    "orientations",
    "command",
    "exit_code",
)


def _compact(value: Any) -> Any:
    # residuals and sums near 1 are only readable at fixed precision
    if isinstance(value, float) and math.isfinite(value):
        return float(f"{value:.12g}")
    return value


class JsonFormatter(logging.Formatter):
    """One JSON object per record; unset extras are left out."""

    def format(self, record: logging.LogRecord) -> str:
        log_record = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }

        for key in _EXTRA_KEYS:
            value = getattr(record, key, None)
            if value is not None:
                log_record[key] = _compact(value)

        if record.exc_info:
            log_record["exc_info"] = self.formatException(record.exc_info)

        return json.dumps(log_record, ensure_ascii=False, default=str)


def _resolve_log_level() -> str:
    level = os.getenv("LOG_LEVEL", settings.LOG_LEVEL)
    return str(level).upper()


def _root() -> logging.Logger:
    root = logging.getLogger(ROOT_LOGGER)
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(JsonFormatter())
        root.addHandler(handler)
        root.propagate = False
    root.setLevel(_resolve_log_level())
    return root


def get_logger(name: str = ROOT_LOGGER) -> logging.Logger:
    """Logger under the floquetsim namespace, e.g. "floquetsim.powder"."""
    root = _root()
    if name == ROOT_LOGGER:
        return root
    if not name.startswith(ROOT_LOGGER + "."):
        name = f"{ROOT_LOGGER}.{name}"
    return logging.getLogger(name)
