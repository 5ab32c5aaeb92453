"""Request tracing for the simulation API.

Each request is tagged with a request ID (the caller's X-Request-ID when
given) and with the simulation command its path names. Runs slower than
SLOW_REQUEST_MS are logged at WARNING.
"""

import time
from uuid import uuid4
from typing import Callable, Optional
from fastapi import Request, Response
from starlette.middleware.base import BaseHTTPMiddleware

from app.core.config import settings

REQUEST_ID_HEADER = "X-Request-ID"


def command_of(path: str) -> Optional[str]:
    """First path segment, e.g. "/grover/" -> "grover"."""
    head = path.strip("/").split("/", 1)[0]
    return head or None


class RequestLoggingMiddleware(BaseHTTPMiddleware):
    """Log each simulation request once on arrival and once on completion."""

    def __init__(self, app, logger, slow_ms: Optional[float] = None):
        super().__init__(app)
        self.logger = logger
        self.slow_ms = settings.SLOW_REQUEST_MS if slow_ms is None else slow_ms

    async def dispatch(self, request: Request, call_next: Callable):
        request_id = request.headers.get(REQUEST_ID_HEADER) or str(uuid4())
        context = {
            "request_id": request_id,
            "method": request.method,
            "path": request.url.path,
            "command": command_of(request.url.path),
            "client_ip": request.client.host if request.client else None,
        }
        start = time.perf_counter()
        self.logger.info("Incoming request", extra=context)

        try:
            response: Response = await call_next(request)
        except Exception:
            self.logger.error(
                "Request error",
                exc_info=True,
                extra={**context, "duration_ms": round((time.perf_counter() - start) * 1000, 2)},
            )
            raise

        duration_ms = round((time.perf_counter() - start) * 1000, 2)
        response.headers[REQUEST_ID_HEADER] = request_id
        extra = {**context, "status_code": response.status_code, "duration_ms": duration_ms}
        if duration_ms > self.slow_ms:
            self.logger.warning("Slow simulation request", extra=extra)
        else:
            self.logger.info("Outgoing response", extra=extra)
        return response
