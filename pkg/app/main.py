"""Floquet MAS simulator API application entrypoint.

Sets up the FastAPI app, registers the API router, and centralizes exception
handling to return consistent JSON responses to clients. Exception handlers map
framework and domain errors into a standardized response schema without leaking
internal details.
"""

from contextlib import asynccontextmanager
from fastapi import FastAPI, Request, status
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from app.api.api import api_router
from app.core.exceptions import ConfigError, FloquetSimError, ValidationError
from app.core.logging import get_logger
from app.core.middleware import RequestLoggingMiddleware
from app.core.error_codes import ErrorCode
from app.schemas.response import ErrorResponse

logger = get_logger("floquetsim")


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info("Starting up application", extra={"event": "startup"})
    try:
        yield
    finally:
        logger.info("Shutting down application", extra={"event": "shutdown"})


app = FastAPI(title="Floquet MAS Simulator", lifespan=lifespan)

# Middleware registration
app.add_middleware(RequestLoggingMiddleware, logger=logger)

app.include_router(api_router)


@app.get("/healthz")
async def healthcheck():
    return JSONResponse(status_code=status.HTTP_200_OK, content={"status": "up"})


def _fail(status_code: int, exc: Exception, default: ErrorCode, state: str = "fail") -> JSONResponse:
    body = ErrorResponse(
        status=state,
        message=str(exc),
        errorCode=getattr(exc, "error_code", None) or default,
    )
    return JSONResponse(status_code=status_code, content=body.model_dump(mode="json"))


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    """Handle validation errors raised by FastAPI/Pydantic.

    Aggregates field-level validation messages into a concise, human-friendly
    sentence and returns a 400 response following the project's standard JSON
    envelope.

    Args:
        request: The incoming HTTP request.
        exc: The RequestValidationError raised during request parsing/validation.

    Returns:
        JSONResponse: A 400 response, e.g.
        {"status": "fail", "message": "Validation Error: <details>"}.
    """
    errors = exc.errors()
    error_msg = "; ".join([f"{e['loc'][-1]}: {e['msg']}" for e in errors])
    return _fail(status.HTTP_400_BAD_REQUEST, Exception(f"Validation Error: {error_msg}"), ErrorCode.VALIDATION_ERROR)


@app.exception_handler(ValidationError)
async def custom_validation_exception_handler(request: Request, exc: ValidationError):
    """Map domain-level precondition failures to a 400 response."""
    return _fail(status.HTTP_400_BAD_REQUEST, exc, ErrorCode.VALIDATION_ERROR)


@app.exception_handler(ConfigError)
async def config_exception_handler(request: Request, exc: ConfigError):
    return _fail(status.HTTP_400_BAD_REQUEST, exc, ErrorCode.CONFIG_ERROR)


@app.exception_handler(FloquetSimError)
async def scientific_exception_handler(request: Request, exc: FloquetSimError):
    """Map scientific failures (no convergence, singular system, failed search) to 422.

    Args:
        request: The incoming HTTP request.
        exc: Domain error raised by the simulation layer.

    Returns:
        JSONResponse: A 422 response carrying the error code of the failure.
    """
    logger.warning(
        "Scientific failure",
        extra={"event": "scientific_failure", "path": str(request.url.path)},
    )
    return _fail(status.HTTP_422_UNPROCESSABLE_ENTITY, exc, ErrorCode.INTERNAL_ERROR)


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """Catch-all exception handler returning a generic 500 response.

    Prevents leaking internal error details to clients while providing a
    stable error envelope.
    """
    logger.error(
        "Global Exception",
        exc_info=True,
        extra={"path": str(request.url.path)},
    )
    return _fail(
        status.HTTP_500_INTERNAL_SERVER_ERROR,
        Exception("Internal Server Error"),
        ErrorCode.INTERNAL_ERROR,
        state="error",
    )


@app.exception_handler(ValueError)
async def value_error_handler(request: Request, exc: ValueError):
    return _fail(status.HTTP_400_BAD_REQUEST, exc, ErrorCode.VALIDATION_ERROR)
