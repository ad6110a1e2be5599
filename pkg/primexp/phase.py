"""Fixed-point phase arithmetic: alpha * n^k mod 1 with exact big integers,
root-of-unity tables and compensated complex accumulation."""
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Tuple, Union

import mpmath
import numpy as np

from primexp import settings
from primexp.errors import DomainError, PrecisionError
from primexp.utils import ceil_log2

MIN_PRECISION = 64
DOUBLE_ROUNDING = 2.0 ** -53

NAMED_CONSTANTS = {
    "pi": lambda: +mpmath.pi,
    "e": lambda: +mpmath.e,
    "phi": lambda: +mpmath.phi,
    "sqrt2": lambda: mpmath.sqrt(2),
}


@dataclass(frozen=True)
class FixedPointReal:
    """``int_part + frac_bits / 2**prec``; ``rational`` is set when the value is known exactly."""

    int_part: int
    frac_bits: int
    prec: int = settings.PRECISION_BITS
    rational: Optional[Fraction] = None

    def __post_init__(self):
        if self.prec < MIN_PRECISION:
            raise PrecisionError(f"precision {self.prec} below the {MIN_PRECISION}-bit minimum")
        if not 0 <= self.frac_bits < (1 << self.prec):
            raise DomainError("frac_bits must lie in [0, 2**prec)")

    @classmethod
    def from_fraction(cls, value, prec: Optional[int] = None) -> "FixedPointReal":
        value = Fraction(value)
        prec = prec or settings.PRECISION_BITS
        scaled = round(value * (1 << prec))
        int_part, frac_bits = divmod(scaled, 1 << prec)
        return cls(int_part, frac_bits, prec, value)

    @classmethod
    def from_mpf(cls, value, prec: Optional[int] = None) -> "FixedPointReal":
        prec = prec or settings.PRECISION_BITS
        man, exp = mpmath.mpf(value).man_exp
        man = int(man)  # gmpy backend yields mpz, which breaks Fraction arithmetic
        shift = exp + prec
        if shift >= 0:
            scaled = man << shift
        else:
            scaled = round(Fraction(man, 1 << -shift))
        int_part, frac_bits = divmod(scaled, 1 << prec)
        return cls(int_part, frac_bits, prec)

    @classmethod
    def parse(cls, text: str, prec: Optional[int] = None) -> "FixedPointReal":
        """Parse ``a/q``, a decimal, or a named constant (pi, e, phi, sqrt2), optionally negated."""
        prec = prec or settings.PRECISION_BITS
        raw = str(text).strip().lower()
        negative = raw.startswith("-")
        name = raw.lstrip("+-")
        if name in NAMED_CONSTANTS:
            with mpmath.workprec(prec + 32):
                value = NAMED_CONSTANTS[name]()
                if negative:
                    value = -value
                return cls.from_mpf(value, prec)
        try:
            return cls.from_fraction(Fraction(raw), prec)
        except (ValueError, ZeroDivisionError) as e:
            raise DomainError(f"cannot parse alpha {text!r}") from e

    @property
    def is_exact(self) -> bool:
        return self.rational is not None

    @property
    def value(self) -> Fraction:
        if self.rational is not None:
            return self.rational
        return self.int_part + Fraction(self.frac_bits, 1 << self.prec)

    @property
    def resolution(self) -> Fraction:
        """Absolute representation error bound."""
        return Fraction(0) if self.rational is not None else Fraction(1, 1 << self.prec)

    def mod1(self) -> "FixedPointReal":
        rational = self.rational % 1 if self.rational is not None else None
        return FixedPointReal(0, self.frac_bits, self.prec, rational)

    def with_precision(self, prec: int) -> "FixedPointReal":
        if self.rational is not None:
            return FixedPointReal.from_fraction(self.rational, prec)
        if prec > self.prec:
            raise PrecisionError("cannot raise the precision of an inexact value")
        scaled = round(Fraction((self.int_part << self.prec) + self.frac_bits, 1 << (self.prec - prec)))
        int_part, frac_bits = divmod(scaled, 1 << prec)
        return FixedPointReal(int_part, frac_bits, prec)

    def __neg__(self) -> "FixedPointReal":
        scaled = -((self.int_part << self.prec) + self.frac_bits)
        int_part, frac_bits = divmod(scaled, 1 << self.prec)
        rational = -self.rational if self.rational is not None else None
        return FixedPointReal(int_part, frac_bits, self.prec, rational)

    def __add__(self, other: int) -> "FixedPointReal":
        if not isinstance(other, int):
            return NotImplemented
        rational = self.rational + other if self.rational is not None else None
        return FixedPointReal(self.int_part + other, self.frac_bits, self.prec, rational)

    __radd__ = __add__

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return format_alpha(self)


def as_alpha(alpha: Union["FixedPointReal", Fraction, int, str], prec: Optional[int] = None) -> FixedPointReal:
    if isinstance(alpha, FixedPointReal):
        return alpha
    if isinstance(alpha, str):
        return FixedPointReal.parse(alpha, prec)
    if isinstance(alpha, float):
        raise DomainError("pass alpha as a Fraction, a string or a FixedPointReal, not a float")
    return FixedPointReal.from_fraction(alpha, prec)


def format_alpha(alpha: FixedPointReal, digits: int = 36) -> str:
    """``a/q`` for exact values with small q, else a truncated decimal."""
    value = alpha.value
    if alpha.rational is not None and value.denominator <= settings.MODULAR_Q_CAP:
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    sign = "-" if value < 0 else ""
    value = abs(value)
    whole = value.numerator // value.denominator
    rest = value - whole
    scaled = rest.numerator * 10 ** digits // rest.denominator
    return f"{sign}{whole}.{scaled:0{digits}d}"


@dataclass(frozen=True)
class UnitPhase:
    """Fractional part t = frac / 2**prec of alpha * n^k, with error bound ``err``."""

    frac: int
    prec: int
    err: float

    def __post_init__(self):
        if self.err >= 2.0 ** -40:
            raise PrecisionError(f"phase error {self.err:.3e} exceeds 2^-40")

    @property
    def t(self) -> float:
        return self.frac / (1 << self.prec)

    @property
    def centered(self) -> float:
        """t mapped into [-1/2, 1/2)."""
        if 2 * self.frac >= (1 << self.prec):
            return -(((1 << self.prec) - self.frac) / (1 << self.prec))
        return self.t


@dataclass(frozen=True)
class ComplexSum:
    re: float
    im: float
    terms: int
    abs_err: float
    path: Optional[str] = None

    @property
    def abs(self) -> float:
        return math.hypot(self.re, self.im)

    def conjugate(self) -> "ComplexSum":
        return ComplexSum(self.re, -self.im, self.terms, self.abs_err, self.path)

    def to_dict(self) -> dict:
        out = {"re": self.re, "im": self.im, "abs": self.abs, "terms": self.terms, "abs_err": self.abs_err}
        if self.path is not None:
            out["path"] = self.path
        return out


class CompensatedSum:
    """Neumaier summation; the result depends only on the order of additions."""

    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, v: float):
        t = self.s + v
        if abs(self.s) >= abs(v):
            self.c += (self.s - t) + v
        else:
            self.c += (v - t) + self.s
        self.s = t

    def add_partials(self, s: float, c: float):
        self.add(s)
        self.add(c)

    @property
    def value(self) -> float:
        return self.s + self.c


class ComplexAccumulator:
    """Merges chunk partials in the order they are given."""

    def __init__(self):
        self.re = CompensatedSum()
        self.im = CompensatedSum()
        self.terms = 0
        self.abs_err = 0.0

    def add(self, re: float, im: float, err: float = 0.0):
        self.re.add(re)
        self.im.add(im)
        self.terms += 1
        self.abs_err += err

    def merge(self, partials: Tuple[float, float, float, float], terms: int, err: float):
        re_s, re_c, im_s, im_c = partials
        self.re.add_partials(re_s, re_c)
        self.im.add_partials(im_s, im_c)
        self.terms += terms
        self.abs_err += err

    def result(self) -> ComplexSum:
        return ComplexSum(self.re.value, self.im.value, self.terms, self.abs_err)


def mod_pow(n: int, k: int, q: int) -> int:
    if q < 1:
        raise DomainError(f"modulus must be positive, got {q}")
    return pow(n, k, q)


def required_precision(n: int, k: int) -> int:
    return settings.PHASE_BASE_BITS + k * ceil_log2(n) + settings.PHASE_GUARD_BITS


def check_precision(alpha: FixedPointReal, n_max: int, k: int):
    need = required_precision(n_max, k)
    if alpha.prec < need:
        raise PrecisionError(
            f"alpha carries {alpha.prec} bits but n={n_max}, k={k} needs {need}; raise --precision-bits"
        )


def phase_of(alpha: FixedPointReal, n: int, k: int) -> UnitPhase:
    if n < 1 or k < 1:
        raise DomainError(f"phase_of needs n >= 1 and k >= 1, got n={n}, k={k}")
    check_precision(alpha, n, k)
    prec = alpha.prec
    nk = n ** k
    if alpha.rational is not None:
        r = alpha.rational
        residue = (r.numerator * nk) % r.denominator
        return UnitPhase((residue << prec) // r.denominator, prec, math.ldexp(1.0, -prec))
    frac = (alpha.frac_bits * nk) & ((1 << prec) - 1)
    return UnitPhase(frac, prec, math.ldexp(float(nk + 1), -prec))


def term_error(weight: float, phase_err: float) -> float:
    return abs(weight) * (2.0 * math.pi * phase_err + 8.0 * DOUBLE_ROUNDING)


def accumulate(phases: Iterable[Tuple[Union[UnitPhase, float], float]]) -> ComplexSum:
    acc = ComplexAccumulator()
    two_pi = 2.0 * math.pi
    for phase, weight in phases:
        if isinstance(phase, UnitPhase):
            t, err = phase.centered, phase.err
        else:
            t, err = float(phase), 0.0
            t = t - math.floor(t + 0.5)
        if not math.isfinite(weight):
            raise DomainError("weights must be finite")
        acc.add(weight * math.cos(two_pi * t), weight * math.sin(two_pi * t), term_error(weight, err))
    return acc.result()


def centered_phases(frac_bits: int, prec: int, powers) -> np.ndarray:
    """frac(alpha * n^k) for each exact n^k, truncated to 53 bits and centred in [-1/2, 1/2)."""
    full = 1 << prec
    mask = full - 1
    half = 1 << (prec - 1)
    shift = prec - 53
    out = np.empty(len(powers), dtype=np.float64)
    for i, nk in enumerate(powers):
        r = (frac_bits * nk) & mask
        if r >= half:
            out[i] = -((full - r) >> shift) * DOUBLE_ROUNDING
        else:
            out[i] = (r >> shift) * DOUBLE_ROUNDING
    return out


@lru_cache(maxsize=8)
def root_table(q: int) -> Tuple[np.ndarray, np.ndarray]:
    """cos and sin of 2 pi r / q for r in [0, q); mirrored so e(-r/q) is the exact conjugate."""
    if not 1 <= q <= settings.MODULAR_Q_CAP:
        raise DomainError(f"root table size {q} outside [1, {settings.MODULAR_Q_CAP}]")
    r = np.arange(q // 2 + 1, dtype=np.float64)
    angle = 2.0 * np.pi * r / q
    c = np.cos(angle)
    s = np.sin(angle)
    s[0] = 0.0
    c[0] = 1.0
    if q % 2 == 0:
        c[q // 2], s[q // 2] = -1.0, 0.0
    if q % 4 == 0:
        c[q // 4], s[q // 4] = 0.0, 1.0
    cos_table = np.empty(q, dtype=np.float64)
    sin_table = np.empty(q, dtype=np.float64)
    cos_table[: q // 2 + 1] = c
    sin_table[: q // 2 + 1] = s
    mirror = np.arange(1, (q + 1) // 2)
    cos_table[q - mirror] = c[mirror]
    sin_table[q - mirror] = -s[mirror]
    cos_table.setflags(write=False)
    sin_table.setflags(write=False)
    return cos_table, sin_table
