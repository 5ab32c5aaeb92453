"""Centralized error codes for machine-readable API and CLI errors."""

from enum import Enum


class ErrorCode(str, Enum):
    VALIDATION_ERROR = "VALIDATION_ERROR"
    CONFIG_ERROR = "CONFIG_ERROR"
    CONVERGENCE_FAILED = "CONVERGENCE_FAILED"
    SOLVER_FAILED = "SOLVER_FAILED"
    SINGULAR_SYSTEM = "SINGULAR_SYSTEM"
    AMBIGUOUS_READOUT = "AMBIGUOUS_READOUT"
    SEARCH_FAILED = "SEARCH_FAILED"
    DIMENSION_MISMATCH = "DIMENSION_MISMATCH"
    INTERNAL_ERROR = "INTERNAL_ERROR"
