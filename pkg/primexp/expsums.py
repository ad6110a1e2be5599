"""f_k(alpha; x, y), the short Weyl sum and the bilinear Type I / Type II sums.

Every sum reduces to ``sum_n c(n) e(alpha n^k)`` over an interval, evaluated
either from residues a n^k mod q and a q-entry root table (modular path) or
from exact fixed-point phases (fixed path). Terms are split into chunks that
may run on a thread pool; partials are merged in chunk order, so the result
does not depend on the thread count.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator

from primexp import settings
from primexp.errors import DomainError
from primexp.exponents import (
    ExponentProfile,
    lemma31_bound_rhs,
    lemma31_rho_ok,
    lemma32_bound_rhs,
    lemma32_rho_ok,
    window_check_l31,
    window_check_l32,
)
from primexp.heath_brown import DyadicRange
from primexp.kernels import MAX_KERNEL_MODULUS, phase_sum, power_residues, table_sum
from primexp.local_factors import wk_value
from primexp.phase import (
    DOUBLE_ROUNDING,
    ComplexAccumulator,
    ComplexSum,
    FixedPointReal,
    as_alpha,
    centered_phases,
    check_precision,
    root_table,
)
from primexp.rational import RationalApprox
from primexp.sieve import cached_mobius_table, lambda_block

Coefficient = Callable[[int], float]
PairCoefficient = Callable[[int, int], float]
RangeLike = Union[DyadicRange, Tuple[Union[int, Fraction], int]]


class SumPath(str, Enum):
    AUTO = "auto"
    FIXED = "fixed"
    MODULAR = "modular"


class SumRequest(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alpha: FixedPointReal
    x: int = Field(ge=2)
    y: int = Field(ge=2)
    k: int = Field(ge=1)
    path: SumPath = SumPath.AUTO

    @field_validator("alpha", mode="before")
    @classmethod
    def _coerce_alpha(cls, value):
        if isinstance(value, FixedPointReal):
            return value
        if isinstance(value, float):
            raise ValueError("alpha must be given exactly (a/q, decimal string or named constant)")
        return as_alpha(value)


def resolve_path(alpha: FixedPointReal, path: SumPath) -> SumPath:
    rational = alpha.rational
    fits = rational is not None and rational.denominator <= min(settings.MODULAR_Q_CAP, MAX_KERNEL_MODULUS)
    if path == SumPath.AUTO:
        return SumPath.MODULAR if fits else SumPath.FIXED
    if path == SumPath.MODULAR and not fits:
        if rational is None:
            raise DomainError("the modular path needs a rational alpha")
        raise DomainError(f"q={rational.denominator} exceeds the modular root-table cap {settings.MODULAR_Q_CAP}")
    return path


def _chunks(n_terms: int, chunk_size: int) -> List[slice]:
    return [slice(start, min(start + chunk_size, n_terms)) for start in range(0, n_terms, chunk_size)]


def weighted_sum(
    alpha: FixedPointReal,
    ns: np.ndarray,
    weights: np.ndarray,
    k: int,
    path: SumPath = SumPath.AUTO,
    threads: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> ComplexSum:
    """
    Evaluate sum_i weights[i] e(alpha ns[i]^k) in chunks, merged in index order.

    The result does not depend on ``threads``: chunk boundaries are fixed by
    ``chunk_size`` and partial sums are merged in chunk order.

    Args:
        alpha (FixedPointReal): Frequency; only alpha mod 1 is used.
        ns (np.ndarray): Positive integers n, int64.
        weights (np.ndarray): Finite real weights, same length as ``ns``.
        k (int): Exponent, k >= 1.
        path (SumPath): AUTO, MODULAR (rational alpha only) or FIXED.
        threads (int, optional): Worker threads, settings.THREADS when omitted.
        chunk_size (int, optional): Terms per chunk, settings.CHUNK_SIZE when omitted.

    Returns:
        ComplexSum: re, im, abs, the term count, the error bound abs_err and the path used.
    """
    threads = threads or settings.THREADS
    chunk_size = chunk_size or settings.CHUNK_SIZE
    if chunk_size < 1 or threads < 1:
        raise DomainError("threads and chunk_size must be positive")
    ns = np.ascontiguousarray(ns, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if ns.shape != weights.shape:
        raise DomainError("ns and weights must have the same length")
    if not np.all(np.isfinite(weights)):
        raise DomainError("weights must be finite")
    path = resolve_path(alpha, path)
    alpha = alpha.mod1()

    if path == SumPath.MODULAR:
        a, q = alpha.rational.numerator, alpha.rational.denominator
        cos_table, sin_table = root_table(q)

        def run(chunk: slice):
            residues = (power_residues(ns[chunk], k, q) * a) % q
            w = weights[chunk]
            return table_sum(residues, w, cos_table, sin_table), float(np.abs(w).sum()) * 8.0 * DOUBLE_ROUNDING

    else:
        n_max = int(ns.max()) if ns.size else 1
        check_precision(alpha, n_max, k)
        prec, frac_bits = alpha.prec, alpha.frac_bits

        def run(chunk: slice):
            powers = [n ** k for n in ns[chunk].tolist()]
            w = weights[chunk]
            err = math.ldexp(float(max(powers, default=0) + 1), -prec) + DOUBLE_ROUNDING
            partials = phase_sum(centered_phases(frac_bits, prec, powers), w)
            return partials, float(np.abs(w).sum()) * (2.0 * math.pi * err + 8.0 * DOUBLE_ROUNDING)

    chunks = _chunks(int(ns.shape[0]), chunk_size)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(run, chunks))
    else:
        results = [run(chunk) for chunk in chunks]

    acc = ComplexAccumulator()
    for chunk, (partials, err) in zip(chunks, results):
        acc.merge(partials, chunk.stop - chunk.start, err)
    logger.debug(f"{path.value} sum over {ns.shape[0]} terms in {len(chunks)} chunks")
    return replace(acc.result(), path=path.value)


def _check_interval(x: int, y: int):
    if not 2 <= y <= x:
        raise DomainError(f"need 2 <= y <= x, got x={x}, y={y}")


def f_k_sum(req: SumRequest, threads: Optional[int] = None, chunk_size: Optional[int] = None) -> ComplexSum:
    """
    Evaluate f_k(alpha; x, y) = sum_{x < n <= x + y} Lambda(n) e(alpha n^k).

    Args:
        req (SumRequest): alpha, x, y, k and the evaluation path.
        threads (int, optional): Worker threads for the chunked sum.
        chunk_size (int, optional): Terms per chunk.

    Returns:
        ComplexSum: The sum with its rounding error bound.
    """
    _check_interval(req.x, req.y)
    block = lambda_block(req.x, req.y)
    result = weighted_sum(req.alpha, block.ns, block.weights, req.k, req.path, threads, chunk_size)
    trivial = block.total()
    if result.abs > trivial + result.abs_err + 1e-9 * max(1.0, trivial):
        logger.warning(f"|f_k| = {result.abs:.17g} exceeds the trivial bound {trivial:.17g}")
    return result


def weyl_short(
    alpha,
    x: int,
    y: int,
    k: int,
    path: SumPath = SumPath.AUTO,
    threads: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> ComplexSum:
    """sum_{x < n <= x + y} e(alpha n^k)."""
    _check_interval(x, y)
    ns = np.arange(x + 1, x + y + 1, dtype=np.int64)
    return weighted_sum(as_alpha(alpha), ns, np.ones(y, dtype=np.float64), k, path, threads, chunk_size)


def unit(*_: int) -> float:
    return 1.0


def mobius_coefficients(limit: int) -> Coefficient:
    table = cached_mobius_table(limit)
    return lambda m: float(table[m])


def mobius_product(limit: int) -> PairCoefficient:
    table = cached_mobius_table(limit)
    return lambda m1, m2: float(table[m1] * table[m2])


def as_range(value: RangeLike) -> DyadicRange:
    if isinstance(value, DyadicRange):
        return value
    low, high = value
    return DyadicRange(Fraction(low), int(high))


def _bounded(value: float, what: str) -> float:
    if not abs(value) <= 1.0:
        raise DomainError(f"coefficient {what} = {value} exceeds 1 in absolute value")
    return value


@dataclass(frozen=True)
class BilinearResult:
    sum: ComplexSum
    window_ok: Optional[bool] = None
    rho_ok: Optional[bool] = None
    bound_rhs: Optional[float] = None

    def to_dict(self) -> dict:
        out = self.sum.to_dict()
        out.update({"window_ok": self.window_ok, "rho_ok": self.rho_ok, "bound_rhs": self.bound_rhs})
        return out


def _multiples(m: int, x: int, y: int) -> np.ndarray:
    """r with x < m r <= x + y."""
    return np.arange(x // m + 1, (x + y) // m + 1, dtype=np.int64)


def _distance(alpha: FixedPointReal, approx: RationalApprox) -> float:
    return float(abs(alpha.value - Fraction(approx.a, approx.q)))


def type1_bilinear(
    alpha,
    M: RangeLike,
    xi: Coefficient,
    eta: Coefficient,
    x: int,
    y: int,
    k: int,
    profile: Optional[ExponentProfile] = None,
    approx: Optional[RationalApprox] = None,
    path: SumPath = SumPath.AUTO,
    threads: Optional[int] = None,
) -> BilinearResult:
    """sum_{m ~ M} sum_{x < mn <= x + y} xi_m eta_n e(alpha (mn)^k), grouped by mn."""
    _check_interval(x, y)
    alpha = as_alpha(alpha)
    M = as_range(M)
    coefficients = np.zeros(y, dtype=np.float64)
    for m in range(M.first, M.last + 1):
        xi_m = _bounded(xi(m), f"xi({m})")
        if xi_m == 0.0:
            continue
        rs = _multiples(m, x, y)
        if rs.size == 0:
            continue
        etas = np.fromiter((_bounded(eta(r), f"eta({r})") for r in rs.tolist()), dtype=np.float64, count=rs.size)
        np.add.at(coefficients, m * rs - (x + 1), xi_m * etas)
    ns = np.arange(x + 1, x + y + 1, dtype=np.int64)
    total = weighted_sum(alpha, ns, coefficients, k, path, threads)

    if profile is None:
        return BilinearResult(total)
    window_ok = window_check_l31(float(M.low), profile, x)
    if not window_ok:
        logger.info(f"M={float(M.low):.6g} lies outside the type I window at x={x}")
    bound = None
    if approx is not None:
        w = float(wk_value(approx.q, k))
        bound = lemma31_bound_rhs(x, profile.theta, profile.rho, k, w, _distance(alpha, approx))
    return BilinearResult(total, window_ok, lemma31_rho_ok(k, profile.rho), bound)


def type2_bilinear(
    alpha,
    M1: RangeLike,
    M2: RangeLike,
    xi: PairCoefficient,
    x: int,
    y: int,
    k: int,
    profile: Optional[ExponentProfile] = None,
    approx: Optional[RationalApprox] = None,
    path: SumPath = SumPath.AUTO,
    threads: Optional[int] = None,
) -> BilinearResult:
    """sum_{m1 ~ M1} sum_{m2 ~ M2} sum_{x < m1 m2 n <= x + y} xi_{m1,m2} e(alpha (m1 m2 n)^k)."""
    _check_interval(x, y)
    alpha = as_alpha(alpha)
    M1, M2 = as_range(M1), as_range(M2)
    coefficients = np.zeros(y, dtype=np.float64)
    for m1 in range(M1.first, M1.last + 1):
        for m2 in range(M2.first, M2.last + 1):
            value = _bounded(xi(m1, m2), f"xi({m1}, {m2})")
            if value == 0.0:
                continue
            m = m1 * m2
            rs = _multiples(m, x, y)
            if rs.size:
                np.add.at(coefficients, m * rs - (x + 1), value)
    ns = np.arange(x + 1, x + y + 1, dtype=np.int64)
    total = weighted_sum(alpha, ns, coefficients, k, path, threads)

    if profile is None:
        return BilinearResult(total)
    window_ok = window_check_l32(float(M1.low), float(M2.low), profile, x)
    if not window_ok:
        logger.info(f"(M1, M2)=({float(M1.low):.6g}, {float(M2.low):.6g}) violates the type II window at x={x}")
    bound = None
    if approx is not None:
        w = float(wk_value(approx.q, k))
        bound = lemma32_bound_rhs(x, profile.theta, profile.rho, k, w, _distance(alpha, approx))
    return BilinearResult(total, window_ok, lemma32_rho_ok(k, profile.rho), bound)
