from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field

from primexp.expsums import SumPath


class SumKind(str, Enum):
    PRIME = "prime"  # weights Lambda(n)
    WEYL = "weyl"  # unit weights


class SumBody(BaseModel):
    """Model for incoming exponential sum requests."""
    alpha: str  # a/q, decimal string or named constant
    k: int = Field(ge=1)
    x: int = Field(ge=2)
    y: int = Field(ge=2)
    path: SumPath = SumPath.AUTO
    kind: SumKind = SumKind.PRIME


class SumResponse(BaseModel):
    re: float
    im: float
    abs: float
    terms: int
    abs_err: float
    path: Optional[str] = None


class ClassifyBody(BaseModel):
    alpha: str
    k: int = Field(ge=1)
    theta: str  # exact rational, e.g. "9/10"
    x: float = Field(ge=2)
    P: float = Field(ge=1)


class ClassifyResponse(BaseModel):
    kind: str
    a: int
    q: int
    err: float
    threshold: float
    boundary: bool


class WkResponse(BaseModel):
    q: int
    k: int
    rat: str
    rad: int
    value: float
