import math
from enum import Enum
from fractions import Fraction
from typing import List, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from primexp import settings
from primexp.errors import ConfigError
from primexp.utils import load_json, parse_fraction

MIN_SCAN_X = 100


class ExperimentKind(str, Enum):
    MINOR_SCAN = "MinorScan"
    MAJOR_SCAN = "MajorScan"
    DICHOTOMY = "Dichotomy"
    LEMMA1_AUDIT = "Lemma1Audit"
    LEMMA3_AUDIT = "Lemma3Audit"
    GAUSS_AUDIT = "GaussAudit"


class ExperimentRecord(BaseModel):
    """One harness observation; ``ratio`` is abs_sum / bound_rhs."""

    experiment: ExperimentKind
    k: int
    theta: str = ""
    rho: str = ""
    x: int
    y: Optional[int] = None
    P: Optional[float] = None
    alpha: str = ""
    a: Optional[int] = None
    q: Optional[int] = None
    arc: str = ""
    abs_sum: float
    bound_rhs: float = Field(gt=0)
    ratio: float
    runtime_ms: int = 0
    flags: List[str] = Field(default_factory=list)

    @model_validator(mode="before")
    @classmethod
    def _fill_ratio(cls, data):
        if isinstance(data, dict) and data.get("ratio") is None and data.get("bound_rhs"):
            data = dict(data)
            data["ratio"] = float(data["abs_sum"]) / float(data["bound_rhs"])
        return data

    @property
    def sort_key(self):
        """Ratio descending, then alpha; records without a ratio go last."""
        missing = math.isnan(self.ratio)
        return (missing, 0.0 if missing else -self.ratio, self.alpha)


class ScanConfig(BaseModel):
    k: int = Field(default=3, ge=1)
    theta: str = "1"
    rho: Optional[str] = None  # defaults to rho_max(k, theta)
    x: List[int] = Field(default_factory=lambda: [10 ** 5])
    P_exp: Optional[str] = None  # P = x^P_exp; defaults to 2 k rho
    samples: int = Field(default=200, ge=1)
    seed: int = Field(default=1, ge=0, lt=2 ** 64)
    near_rational_fraction: float = Field(default=0.25, ge=0.0, le=1.0)
    extra_alphas: List[str] = Field(default_factory=list)
    q_max: int = Field(default=20, ge=1)  # major-arc grid
    precision_bits: int = Field(default=settings.PRECISION_BITS, ge=64)
    threads: int = Field(default=settings.THREADS, ge=1)
    timing: bool = False
    progress: bool = True

    @field_validator("x")
    @classmethod
    def _x_at_desk_scale(cls, values: List[int]) -> List[int]:
        if not values or any(v < MIN_SCAN_X for v in values):
            raise ValueError(f"x values must be >= {MIN_SCAN_X}")
        return values

    @field_validator("theta", "rho", "P_exp")
    @classmethod
    def _rational(cls, value: Optional[str]) -> Optional[str]:
        return value if value is None else str(parse_fraction(value))

    @property
    def theta_value(self) -> Fraction:
        return Fraction(self.theta)

    @property
    def rho_value(self) -> Optional[Fraction]:
        return None if self.rho is None else Fraction(self.rho)


def load_scan_config(path: str, **overrides) -> ScanConfig:
    """Read a ScanConfig from JSON; keyword overrides that are not None win."""
    data = load_json(path)
    data.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return ScanConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid scan config {path}: {e}") from e
