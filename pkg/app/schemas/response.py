"""Response envelopes shared by every endpoint.

Successful calls return {"status": "success", "data": ...}; failures return
{"status": "fail", "message": ..., "errorCode": ...}.
"""

from typing import Generic, Literal, Optional, TypeVar
from pydantic import BaseModel, Field
from app.core.error_codes import ErrorCode

T = TypeVar("T")


class ErrorResponse(BaseModel):
    status: Literal["fail", "error"] = Field(default="fail", example="fail")
    message: str = Field(..., example="mode index m=7 outside [-2, 2]")
    errorCode: Optional[ErrorCode] = Field(default=None, example="VALIDATION_ERROR")


class StandardResponse(BaseModel, Generic[T]):
    status: Literal["success"] = Field(default="success", example="success")
    message: Optional[str] = Field(default=None, example="One or more checks failed")
    data: Optional[T] = None
