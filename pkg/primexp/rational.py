"""Continued fractions, Dirichlet approximation and the major/minor arc test."""
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import gcd
from typing import Iterator, Tuple

from loguru import logger

from primexp.errors import DomainError, PrecisionError
from primexp.phase import FixedPointReal, as_alpha
from primexp.utils import parse_fraction, xpow

BOUNDARY_RTOL = 1e-12
# bits of slack required between alpha's resolution and the arc threshold
RESOLUTION_GUARD_BITS = 20


class ArcKind(str, Enum):
    MAJOR = "major"
    MINOR = "minor"


@dataclass(frozen=True)
class RationalApprox:
    a: int
    q: int
    err: Fraction  # |q alpha - a|

    def __post_init__(self):
        if self.q < 1 or gcd(self.a, self.q) != 1:
            raise DomainError(f"{self.a}/{self.q} is not a reduced fraction with q >= 1")

    @property
    def error(self) -> float:
        return float(self.err)


@dataclass(frozen=True)
class ArcDecision:
    kind: ArcKind
    approx: RationalApprox
    threshold: float
    boundary: bool = False

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "a": self.approx.a,
            "q": self.approx.q,
            "err": self.approx.error,
            "threshold": self.threshold,
            "boundary": self.boundary,
        }


class Convergents(list):
    """List of RationalApprox; ``truncated`` is set when alpha's precision ran out first."""

    truncated = False


def partial_quotients(lo: Fraction, hi: Fraction) -> Iterator[int]:
    """Partial quotients shared by every real in [lo, hi]; stops where they diverge or the expansion ends."""
    while True:
        a, b = math.floor(lo), math.floor(hi)
        if a != b:
            return
        yield a
        rem_lo, rem_hi = lo - a, hi - a
        if rem_lo == 0 or rem_hi == 0:
            return
        lo, hi = 1 / rem_hi, 1 / rem_lo


def expand_convergents(alpha: FixedPointReal, q_cap: int) -> Tuple[Convergents, bool]:
    """Convergents with q <= q_cap, and whether the list is certified complete."""
    value = alpha.value
    lo, hi = value - alpha.resolution, value + alpha.resolution
    out = Convergents()
    p_prev, q_prev, p, q = 1, 0, None, None
    complete = False
    quotients = partial_quotients(lo, hi)
    for a in quotients:
        if p is None:
            p_next, q_next = a, 1
        else:
            p_next, q_next = a * p + p_prev, a * q + q_prev
        if q_next > q_cap:
            complete = True
            break
        if p is not None:
            p_prev, q_prev = p, q
        p, q = p_next, q_next
        out.append(RationalApprox(p, q, abs(q * value - p)))
    else:
        complete = alpha.is_exact
    out.truncated = not complete
    return out, complete


def convergents(alpha, q_cap: int) -> Convergents:
    alpha = as_alpha(alpha)
    if q_cap < 1:
        raise DomainError(f"q_cap must be >= 1, got {q_cap}")
    out, complete = expand_convergents(alpha, int(q_cap))
    if not complete:
        logger.warning(f"alpha precision ({alpha.prec} bits) exhausted before q_cap={q_cap}; convergents truncated")
    return out


def dirichlet_approx(alpha, Q) -> RationalApprox:
    """Last convergent with q <= Q, so that |q alpha - a| < 1/Q."""
    alpha = as_alpha(alpha)
    Q = Fraction(Q)
    if Q < 1:
        raise DomainError(f"Q must be >= 1, got {Q}")
    out, complete = expand_convergents(alpha, math.floor(Q))
    if not complete:
        raise PrecisionError(f"alpha precision ({alpha.prec} bits) cannot certify a Dirichlet approximation at Q={float(Q)}")
    return out[-1]


def arc_threshold(k: int, theta: Fraction, x: float, P: float) -> float:
    """x^{-k + 2(1 - theta)} P."""
    return xpow(x, -k + 2 * (1 - theta)) * P


def classify_arc(alpha, k: int, theta, x: float, P: float) -> ArcDecision:
    """
    Decide whether alpha lies on a major arc M(P).

    Args:
        alpha: Rational or real frequency, anything as_alpha accepts.
        k (int): Degree.
        theta (Fraction | str): Interval exponent.
        x (float): Scale.
        P (float): Arc parameter, P >= 1: alpha is major when some q <= P has
            |q alpha - a| <= x^(-k + 2(1 - theta)) P.

    Returns:
        ArcDecision: MAJOR or MINOR, the approximation found and the boundary flag.
    """
    alpha = as_alpha(alpha)
    theta = parse_fraction(theta)
    if k < 1 or not 0 < theta <= 1 or x < 2 or P < 1:
        raise DomainError(f"classify_arc needs k >= 1, 0 < theta <= 1, x >= 2, P >= 1 (k={k}, theta={theta}, x={x}, P={P})")
    alpha = alpha.mod1()
    threshold = arc_threshold(k, theta, x, P)
    if not alpha.is_exact:
        log2_threshold = math.log2(x) * float(-k + 2 * (1 - theta)) + math.log2(P)
        if math.log2(P) - alpha.prec > log2_threshold - RESOLUTION_GUARD_BITS:
            raise PrecisionError(f"arc threshold {threshold:.3e} is below alpha's {alpha.prec}-bit resolution")
    out, complete = expand_convergents(alpha, math.floor(P))
    if not complete:
        raise PrecisionError(f"alpha precision ({alpha.prec} bits) cannot resolve denominators up to P={P}")
    best = min(out, key=lambda c: (c.err, c.q))
    err = best.error
    kind = ArcKind.MAJOR if err <= threshold else ArcKind.MINOR
    boundary = abs(err - threshold) <= BOUNDARY_RTOL * threshold
    if boundary:
        logger.warning(f"alpha={alpha} sits on the arc boundary: err={err:.17g}, threshold={threshold:.17g}")
    return ArcDecision(kind, best, threshold, boundary)


def xi_value(approx: RationalApprox, k: int, theta, x: float) -> float:
    """q + x^{k - 2(1 - theta)} |q alpha - a|."""
    theta = parse_fraction(theta)
    return approx.q + xpow(x, k - 2 * (1 - theta)) * approx.error
