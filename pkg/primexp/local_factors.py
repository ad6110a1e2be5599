"""The local factor w_k(q) in exact radical arithmetic, complete Gauss sums,
and the counting sums that bound them."""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt, sqrt
from typing import Iterator, Tuple, Union

import numpy as np

from primexp.errors import DomainError, GcdError
from primexp.kernels import compensated_total, power_residues, table_sum
from primexp.phase import DOUBLE_ROUNDING, ComplexAccumulator, ComplexSum, root_table
from primexp.sieve import prime_sieve

SPF_LIMIT = 1 << 22
TRIAL_PRIME_LIMIT = 1 << 25
GAUSS_Q_MAX = 10 ** 6
MOMENT_LIMIT = 10 ** 6
GCD_SUM_LIMIT = 10 ** 7
LEMMA3_N_MAX = 10 ** 7
LEMMA3_Q_MAX = 10 ** 9


@lru_cache(maxsize=2)
def smallest_prime_factors(limit: int) -> np.ndarray:
    spf = np.arange(limit + 1, dtype=np.int64)
    for p in prime_sieve(isqrt(limit)).tolist():
        view = spf[p * p :: p]
        untouched = view == np.arange(p * p, limit + 1, p, dtype=np.int64)
        view[untouched] = p
    spf.setflags(write=False)
    return spf


@dataclass(frozen=True)
class Factorization:
    factors: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        primes = [p for p, _ in self.factors]
        if primes != sorted(set(primes)) or any(e < 1 for _, e in self.factors):
            raise DomainError(f"malformed factorization {self.factors}")

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return iter(self.factors)

    @property
    def value(self) -> int:
        out = 1
        for p, e in self.factors:
            out *= p ** e
        return out

    @property
    def omega(self) -> int:
        return len(self.factors)


@lru_cache(maxsize=1 << 16)
def factorize(q: int) -> Factorization:
    """Prime factorization by smallest-prime-factor lookup, or trial division up to 2^25."""
    if q < 1:
        raise DomainError(f"cannot factor {q}")
    factors = {}
    if q <= SPF_LIMIT:
        spf = smallest_prime_factors(SPF_LIMIT)
        m = q
        while m > 1:
            p = int(spf[m])
            factors[p] = factors.get(p, 0) + 1
            m //= p
        return Factorization(tuple(sorted(factors.items())))

    root = isqrt(q)
    if root > TRIAL_PRIME_LIMIT:
        raise DomainError(f"q = {q} exceeds the 2^50 trial-division range")
    bound = max(1 << 10, 1 << root.bit_length())
    m = q
    for p in prime_sieve(min(bound, TRIAL_PRIME_LIMIT)).tolist():
        if p * p > m:
            break
        while m % p == 0:
            factors[p] = factors.get(p, 0) + 1
            m //= p
    if m > 1:
        factors[m] = factors.get(m, 0) + 1
    return Factorization(tuple(sorted(factors.items())))


@lru_cache(maxsize=1 << 14)
def divisors(n: int) -> Tuple[int, ...]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p ** i for d in divs for i in range(e + 1)]
    return tuple(sorted(divs))


@dataclass(frozen=True)
class ExactRadical:
    """rat * sqrt(rad) with rad squarefree; build through ``ExactRadical.of`` to normalize."""

    rat: Fraction
    rad: int = 1

    @classmethod
    def of(cls, rat: Union[Fraction, int], rad: int = 1) -> "ExactRadical":
        if rad < 1:
            raise DomainError(f"radicand must be positive, got {rad}")
        rat = Fraction(rat)
        squarefree = 1
        for p, e in factorize(rad):
            rat *= p ** (e // 2)
            squarefree *= p ** (e % 2)
        if rat == 0:
            squarefree = 1
        return cls(rat, squarefree)

    def __mul__(self, other: "ExactRadical") -> "ExactRadical":
        g = gcd(self.rad, other.rad)
        rat = self.rat * other.rat * g
        rad = (self.rad // g) * (other.rad // g)
        return ExactRadical(rat, 1 if rat == 0 else rad)

    def __pow__(self, j: int) -> "ExactRadical":
        if j < 0:
            raise DomainError("negative powers are not supported")
        rat = self.rat ** j * self.rad ** (j // 2)
        return ExactRadical(rat, self.rad if j % 2 and rat != 0 else 1)

    @property
    def squared(self) -> Fraction:
        return self.rat * self.rat * self.rad

    def __float__(self) -> float:
        return float(self.rat) * sqrt(self.rad)

    def __lt__(self, other: "ExactRadical") -> bool:
        if (self.rat >= 0) != (other.rat >= 0):
            return self.rat < other.rat
        if self.rat >= 0:
            return self.squared < other.squared
        return self.squared > other.squared

    def __str__(self) -> str:
        rat = str(self.rat)
        return rat if self.rad == 1 else f"{rat}*sqrt({self.rad})"


ONE = ExactRadical(Fraction(1), 1)


@lru_cache(maxsize=1 << 16)
def wk_value(q: int, k: int) -> ExactRadical:
    if q < 1 or k < 3:
        raise DomainError(f"w_k(q) needs q >= 1 and k >= 3, got q={q}, k={k}")
    value = ONE
    for p, e in factorize(q):
        u = (e - 1) // k
        v = e - k * u
        if v == 1:
            value = value * ExactRadical(Fraction(k, p ** (u + 1)), p)
        else:
            value = value * ExactRadical(Fraction(1, p ** (u + 1)), 1)
    return value


def complete_sum(q: int, a: int, k: int) -> ComplexSum:
    """sum_{x=1}^{q} e(a x^k / q) from the multiset of k-th power residues."""
    if not 1 <= q <= GAUSS_Q_MAX or k < 2:
        raise DomainError(f"complete_sum needs 1 <= q <= {GAUSS_Q_MAX} and k >= 2, got q={q}, k={k}")
    if gcd(a, q) != 1:
        raise GcdError(f"gcd(a={a}, q={q}) = {gcd(a, q)} != 1")
    residues = power_residues(np.arange(1, q + 1, dtype=np.int64), k, q)
    residues = (residues * (a % q)) % q
    counts = np.bincount(residues, minlength=q)
    classes = np.flatnonzero(counts)
    cos_table, sin_table = root_table(q)
    acc = ComplexAccumulator()
    acc.merge(table_sum(classes, counts[classes].astype(np.float64), cos_table, sin_table), q, q * 8 * DOUBLE_ROUNDING)
    return acc.result()


def wk_moment_sum(Q: int, k: int, j: int) -> float:
    """sum over Q < q <= 2Q of w_k(q)^j."""
    if Q < 1 or 2 * Q > MOMENT_LIMIT or j < 1:
        raise DomainError(f"wk_moment_sum needs 1 <= Q, 2Q <= {MOMENT_LIMIT}, j >= 1")
    values = np.fromiter((float(wk_value(q, k) ** j) for q in range(Q + 1, 2 * Q + 1)), dtype=np.float64, count=Q)
    return compensated_total(values)


def _grouped_sum(q: int, k: int, gcds: np.ndarray) -> float:
    found, counts = np.unique(gcds, return_counts=True)
    terms = np.array([c * float(wk_value(q // int(g), k)) for g, c in zip(found.tolist(), counts.tolist())])
    return compensated_total(terms)


def wk_gcd_sum(q: int, k: int, j: int, N: int) -> float:
    """sum over N < n <= 2N of w_k(q / (q, n^j))."""
    if not 1 <= j <= k:
        raise DomainError(f"j must lie in [1, k], got j={j}, k={k}")
    if q < 1 or q > MOMENT_LIMIT or N < 1 or 2 * N > GCD_SUM_LIMIT:
        raise DomainError(f"wk_gcd_sum range exceeded (q={q}, N={N})")
    residues = power_residues(np.arange(N + 1, 2 * N + 1, dtype=np.int64), j, q)
    return _grouped_sum(q, k, np.gcd(residues, q))


def difference_polynomial(n: int, h: int, k: int) -> int:
    """R(n, h) = ((n + h)^k - n^k) / h, exactly."""
    return ((n + h) ** k - n ** k) // h


def wk_difference_sum(q: int, k: int, N: int, h: int) -> float:
    """sum over N < n <= 2N with (n, h) = 1 of w_k(q / (q, R(n, h)))."""
    if q < 1 or N < 1 or h < 1 or 2 * N > GCD_SUM_LIMIT:
        raise DomainError(f"wk_difference_sum range exceeded (q={q}, N={N}, h={h})")
    gcds = [gcd(q, difference_polynomial(n, h, k)) for n in range(N + 1, 2 * N + 1) if gcd(n, h) == 1]
    if not gcds:
        return 0.0
    return _grouped_sum(q, k, np.asarray(gcds, dtype=np.int64))


def lemma3_count(q: int, a: int, k: int, N: int, delta_threshold) -> Tuple[int, float]:
    """#{N < n <= 2N : (n, q) = 1, ||a n^k / q|| < delta} and that count over delta (q + N)."""
    if q < 2 or q > LEMMA3_Q_MAX or k < 2 or N < 2 or N > LEMMA3_N_MAX:
        raise DomainError(f"lemma3_count range exceeded (q={q}, k={k}, N={N})")
    if a % q == 0:
        raise GcdError(f"q={q} divides a={a}")
    delta = Fraction(delta_threshold)
    if not 0 < delta < Fraction(1, 2):
        raise DomainError(f"delta must lie in (0, 1/2), got {delta_threshold}")
    ns = np.arange(N + 1, 2 * N + 1, dtype=np.int64)
    ns = ns[np.gcd(ns, q) == 1]
    residues = (power_residues(ns, k, q) * (a % q)) % q
    distance = np.minimum(residues, q - residues)
    # distance / q < delta  <=>  distance <= ceil(delta q) - 1
    bound = -((-delta.numerator * q) // delta.denominator) - 1
    count = int(np.count_nonzero(distance <= bound))
    return count, count / (float(delta) * (q + N))
