"""Application configuration for the Floquet MAS simulator.

Defines a Settings class backed by pydantic-settings to load environment
variables from a .env file (case-sensitive). Experiment parameters live in
JSON experiment files (see app.schemas.config); this module only holds the
process-wide numerical and runtime knobs.
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import computed_field, field_validator


class Settings(BaseSettings):
    """Runtime configuration backed by environment variables.

    Attributes:
        LOG_LEVEL: Level for the JSON loggers.
        DEFAULT_THREADS: Worker-pool size for powder and Grover fan-out.
        QUADRATURE_POINTS: Samples of the rotor-phase integral for F_n.
        PARSEVAL_TOLERANCE: Allowed deficit of the sideband sum at converged K.
        TRUNCATION_TOLERANCE: Largest sideband change between K and K - 2 still
            reported as converged.
        MAX_MODE_ORDER: Upper bound for adaptive mode truncation.
        OUTPUT_ROOT: Default directory for CLI artifacts.
        SLOW_REQUEST_MS: API requests slower than this are logged at WARNING.
        GATE_LAYERS: Pulse - delay - [ASL] layers in a synthesized gate block.
        GATE_RESTARTS: Random starts tried by gate synthesis.
        GATE_SEED: Seed of the first synthesis start.

    Properties:
        ADAPTIVE_LEAKAGE: Leakage threshold used to pick K adaptively.
    """
    model_config = SettingsConfigDict(env_file=".env", case_sensitive=True, extra="ignore")

    LOG_LEVEL: str = "INFO"
    DEFAULT_THREADS: int = 4
    QUADRATURE_POINTS: int = 512
    PARSEVAL_TOLERANCE: float = 1e-8
    TRUNCATION_TOLERANCE: float = 1e-4
    MAX_MODE_ORDER: int = 64
    OUTPUT_ROOT: str = "runs"
    SLOW_REQUEST_MS: float = 30000.0
    GATE_LAYERS: int = 16
    GATE_RESTARTS: int = 8
    GATE_SEED: int = 0

    @computed_field
    @property
    def ADAPTIVE_LEAKAGE(self) -> float:
        return self.PARSEVAL_TOLERANCE

    @field_validator("LOG_LEVEL")
    @classmethod
    def _normalize_log_level(cls, value: str):
        lvl = str(value).upper()
        allowed = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if lvl not in allowed:
            raise ValueError("LOG_LEVEL must be one of DEBUG, INFO, WARNING, ERROR, CRITICAL")
        return lvl

    @field_validator("DEFAULT_THREADS", "MAX_MODE_ORDER", "GATE_LAYERS", "GATE_RESTARTS")
    @classmethod
    def _positive(cls, value: int, info):
        if value < 1:
            raise ValueError(f"{info.field_name} must be at least 1")
        return value

    @field_validator("QUADRATURE_POINTS")
    @classmethod
    def _power_of_two(cls, value: int):
        if value < 64 or value & (value - 1):
            raise ValueError("QUADRATURE_POINTS must be a power of two >= 64")
        return value

    @field_validator("PARSEVAL_TOLERANCE", "TRUNCATION_TOLERANCE")
    @classmethod
    def _small_positive(cls, value: float, info):
        if not 0.0 < value < 1.0:
            raise ValueError(f"{info.field_name} must lie in (0, 1)")
        return value


settings = Settings()
