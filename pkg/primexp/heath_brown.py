"""Heath-Brown's identity: exact evaluation, the dyadic coefficients c(n; N),
the dyadic cover of (x, x + x^theta] and the case analysis of each vector."""
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, combinations_with_replacement, product
from typing import Iterator, List, Optional, Sequence, Tuple

from loguru import logger

from primexp import settings
from primexp.errors import ClassificationError, DomainError, EnumerationBudgetError
from primexp.exponents import ExponentProfile, log_le
from primexp.local_factors import divisors, factorize
from primexp.sieve import MobiusTable, cached_mobius_table
from primexp.utils import floor_power, iroot

MAX_J = 8
HB_N_MAX = 10 ** 6
DYADIC_X_MAX = 10 ** 8


@dataclass(frozen=True)
class DyadicRange:
    """Integers in (low, high] with low < high <= 2 low."""

    low: Fraction
    high: int

    def __post_init__(self):
        if not 0 < self.low < self.high <= 2 * self.low:
            raise DomainError(f"({self.low}, {self.high}] is not a range N < n <= N' <= 2N")

    @classmethod
    def of_exponent(cls, e: int) -> "DyadicRange":
        """(2^e, 2^(e+1)]; e = -1 is (1/2, 1], the range holding only n = 1."""
        if e < -1:
            raise DomainError(f"dyadic exponent must be >= -1, got {e}")
        return cls(Fraction(2) ** e, 2 ** (e + 1))

    @property
    def first(self) -> int:
        return math.floor(self.low) + 1

    @property
    def last(self) -> int:
        return self.high

    @property
    def log2_low(self) -> float:
        return math.log2(self.low.numerator) - math.log2(self.low.denominator)

    def __contains__(self, n: int) -> bool:
        return self.first <= n <= self.last

    def __str__(self) -> str:
        return f"({self.low},{self.high}]"


@dataclass(frozen=True)
class HBVector:
    """(N_1, ..., N_2j): the first j ranges carry mu, the last one carries log n_2j.

    ``cap`` bounds the mu-weighted variables (floor(X^(1/J))) when set.
    """

    j: int
    ranges: Tuple[DyadicRange, ...]
    cap: Optional[int] = None

    def __post_init__(self):
        if self.j < 1 or len(self.ranges) != 2 * self.j:
            raise DomainError(f"an HB vector with j={self.j} needs {2 * self.j} ranges, got {len(self.ranges)}")

    @classmethod
    def of_exponents(cls, j: int, exponents: Sequence[int], cap: Optional[int] = None) -> "HBVector":
        return cls(j, tuple(DyadicRange.of_exponent(e) for e in exponents), cap)

    @property
    def mobius_ranges(self) -> Tuple[DyadicRange, ...]:
        return self.ranges[: self.j]

    @property
    def log_range(self) -> DyadicRange:
        return self.ranges[-1]

    @property
    def log2_sizes(self) -> List[float]:
        return [r.log2_low for r in self.ranges]

    def product_bounds(self) -> Tuple[int, int]:
        """Smallest and largest n = n_1...n_2j the ranges admit."""
        return math.prod(r.first for r in self.ranges), math.prod(r.last for r in self.ranges)

    def admits(self, i: int, d: int) -> bool:
        if d not in self.ranges[i]:
            return False
        return not (i < self.j and self.cap is not None and d > self.cap)

    def label(self) -> str:
        mu = " ".join(str(r) for r in self.mobius_ranges)
        rest = " ".join(str(r) for r in self.ranges[self.j :])
        return f"{mu} | {rest}"


class CaseKind(str, Enum):
    CASE1 = "case1"
    CASE2 = "case2"
    CASE3_1 = "case3.1"
    CASE3_2 = "case3.2"


@dataclass(frozen=True)
class CaseLabel:
    kind: CaseKind
    S: Optional[Tuple[int, ...]] = None  # 1-based indices
    M: Optional[float] = None
    r: Optional[int] = None
    M1: Optional[float] = None
    M2: Optional[float] = None

    @property
    def is_type1(self) -> bool:
        return self.kind in (CaseKind.CASE1, CaseKind.CASE3_1)

    def to_dict(self) -> dict:
        return {
            "case": self.kind.value,
            "S": "" if self.S is None else " ".join(map(str, self.S)),
            "M": self.M,
            "r": self.r,
            "M1": self.M1,
            "M2": self.M2,
        }


def ordered_factorization_count(n: int, parts: int) -> int:
    """tau_parts(n), the number of ordered factorizations of n into ``parts`` factors."""
    return math.prod(math.comb(e + parts - 1, parts - 1) for _, e in factorize(n))


def _check_hb_args(n: int, X: int, J: int):
    if not 2 <= n <= X:
        raise DomainError(f"hb_rhs needs 2 <= n <= X, got n={n}, X={X}")
    if n > HB_N_MAX:
        raise DomainError(f"n={n} exceeds {HB_N_MAX}")
    if not 1 <= J <= MAX_J:
        raise DomainError(f"J must lie in [1, {MAX_J}], got {J}")
    count = ordered_factorization_count(n, 2 * J)
    if count > settings.HB_ENUMERATION_BUDGET:
        raise EnumerationBudgetError(f"{count} ordered factorizations of n={n} into {2 * J} parts exceed the budget")


def hb_term(n: int, X: int, J: int, j: int) -> float:
    """sum over n = n_1...n_2j, n_1..n_j <= X^(1/J) of mu(n_1)...mu(n_j) log n_2j."""
    _check_hb_args(n, X, J)
    if not 1 <= j <= J:
        raise DomainError(f"j must lie in [1, J={J}], got {j}")
    z = iroot(X, J)
    mobius = cached_mobius_table(min(X, HB_N_MAX))
    last = 2 * j - 1

    @lru_cache(maxsize=None)
    def descend(m: int, pos: int) -> float:
        if pos == last:
            return math.log(m)
        if pos < j:
            terms = [mobius[d] * descend(m // d, pos + 1) for d in divisors(m) if d <= z and mobius[d] != 0]
        else:
            terms = [descend(m // d, pos + 1) for d in divisors(m)]
        return math.fsum(terms)

    return descend(n, 0)


def hb_rhs(n: int, X: int, J: int) -> float:
    """Right side of the identity: sum_j binom(J, j) (-1)^(j-1) hb_term(n, X, J, j), equal to Lambda(n)."""
    _check_hb_args(n, X, J)
    terms = [math.comb(J, j) * (-1) ** (j - 1) * hb_term(n, X, J, j) for j in range(1, J + 1)]
    return math.fsum(terms)


def hb_coefficient(n: int, v: HBVector, mobius: MobiusTable) -> float:
    """c(n; N): the constrained ordered factorizations of n, weighted by mu(n_1)...mu(n_j) log n_2j."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    lo, hi = v.product_bounds()
    if not lo <= n <= hi:
        return 0.0
    last = 2 * v.j - 1

    @lru_cache(maxsize=None)
    def descend(m: int, pos: int) -> float:
        if pos == last:
            return math.log(m) if v.admits(pos, m) else 0.0
        terms = []
        for d in divisors(m):
            if not v.admits(pos, d):
                continue
            if pos < v.j:
                mu = mobius[d]
                if mu:
                    terms.append(mu * descend(m // d, pos + 1))
            else:
                terms.append(descend(m // d, pos + 1))
        return math.fsum(terms)

    return descend(n, 0)


def _blocks(options: range, size: int, canonical: bool) -> Iterator[Tuple[int, ...]]:
    if canonical:
        return combinations_with_replacement(options, size)
    return product(options, repeat=size)


def _bounded_blocks(options: range, size: int, lo: int, hi: int, canonical: bool) -> Iterator[Tuple[int, ...]]:
    """The blocks of _blocks whose sum lies in [lo, hi], in the same order."""
    if not options:
        return
    bottom, top = options[0], options[-1]

    def extend(prefix: Tuple[int, ...], first: int, total: int) -> Iterator[Tuple[int, ...]]:
        left = size - len(prefix)
        if left == 0:
            yield prefix
            return
        for e in range(first, top + 1):
            if total + e + (left - 1) * (e if canonical else bottom) > hi:
                break
            if total + e + (left - 1) * top < lo:
                continue
            yield from extend(prefix + (e,), e if canonical else bottom, total + e)

    yield from extend((), bottom, 0)


def dyadic_vectors(x: int, theta, J: int, canonical: bool = True) -> List[HBVector]:
    """Dyadic vectors covering (x, x + floor(x^theta)] for j = 1..J.

    A vector is kept when its upper endpoints multiply to at least x and its
    lower endpoints to at most x + x^theta. With ``canonical`` both blocks are
    listed non-decreasing; otherwise every ordering is listed.
    """
    x = int(x)
    theta = Fraction(theta)
    if not 2 <= x <= DYADIC_X_MAX:
        raise DomainError(f"dyadic_vectors needs 2 <= x <= {DYADIC_X_MAX}, got {x}")
    if not 0 < theta <= 1:
        raise DomainError(f"theta must lie in (0, 1], got {theta}")
    if not 1 <= J <= MAX_J:
        raise DomainError(f"J must lie in [1, {MAX_J}], got {J}")
    X = x + floor_power(x, theta)
    z = iroot(X, J)
    mu_options = range(-1, max(z - 1, 0).bit_length())
    free_options = range(-1, (X - 1).bit_length())
    s_lo, s_hi = (x - 1).bit_length(), X.bit_length() - 1

    out = []
    for j in range(1, J + 1):
        for mu_block in _blocks(mu_options, j, canonical):
            partial = sum(mu_block)
            for free_block in _bounded_blocks(free_options, j, s_lo - 2 * j - partial, s_hi - partial, canonical):
                out.append(HBVector.of_exponents(j, mu_block + free_block, z))
    logger.debug(f"dyadic_vectors(x={x}, theta={theta}, J={J}): {len(out)} vectors, cap {z}")
    return out


def _fits(log2_product: float, low: float, high: float) -> bool:
    return log_le(low, log2_product) and log_le(log2_product, high)


def find_subset(sizes: Sequence[float], candidates: Sequence[int], low: float, high: float) -> Optional[Tuple[int, ...]]:
    """Indices S (0-based) with low <= sum(sizes[S]) <= high, in log2.

    The greedy prefix of ``candidates`` is tried first, then every subset in
    (size, lexicographic) order.
    """
    total = 0.0
    for count, i in enumerate(candidates, start=1):
        total += sizes[i]
        if log_le(low, total):
            if log_le(total, high):
                return tuple(candidates[:count])
            break
    for size in range(1, len(candidates) + 1):
        for subset in combinations(candidates, size):
            if _fits(sum(sizes[i] for i in subset), low, high):
                return subset
    return None


def classify_case(v: HBVector, profile: ExponentProfile, x: float) -> CaseLabel:
    """
    Assign a dyadic vector to Case 1, 2, 3.1 or 3.2.

    Sizes are the lower endpoints of the ranges, in log2. Type I labels carry
    the index set S whose product lies in [delta^-1 x^(2 rho), delta^-1 x^(beta + 2 rho)].

    Args:
        v (HBVector): Vector from dyadic_vectors.
        profile (ExponentProfile): Plan giving the threshold and cap exponents.
        x (float): Scale of the cover.

    Returns:
        CaseLabel: The case with S and M = x / prod(N_S), or (M1, M2) for type II.

    Raises:
        ClassificationError: A Case 1 or 3.1 vector has no fitting index set.
    """
    log2_x = math.log2(x)
    low = float(profile.threshold_exp) * log2_x
    high = float(profile.cap_exp) * log2_x
    sizes = v.log2_sizes
    j = v.j

    def type1(kind: CaseKind, candidates: List[int], r: Optional[int] = None) -> CaseLabel:
        subset = find_subset(sizes, candidates, low, high)
        if subset is None:
            raise ClassificationError(f"no index set fits [x^{profile.threshold_exp}, x^{profile.cap_exp}] for {v.label()}")
        M = 2.0 ** (log2_x - sum(sizes[i] for i in subset))
        return CaseLabel(kind, S=tuple(i + 1 for i in subset), M=M, r=r)

    if log_le(low, sum(sizes[:j])):
        return type1(CaseKind.CASE1, list(range(j)))
    if j == 1:
        return CaseLabel(CaseKind.CASE2, M1=2.0 ** sizes[0], M2=1.0)
    if j == 2:
        return CaseLabel(CaseKind.CASE2, M1=2.0 ** sizes[2], M2=2.0 ** (sizes[0] + sizes[1]))

    head = sizes[: 2 * j - 2]
    if log_le(low, sum(head)):
        running = 0.0
        for r, size in enumerate(head, start=1):
            running += size
            if log_le(low, running):
                return type1(CaseKind.CASE3_1, list(range(r)), r=r)
    return CaseLabel(CaseKind.CASE3_2, M1=2.0 ** sizes[2 * j - 2], M2=2.0 ** sum(head))
