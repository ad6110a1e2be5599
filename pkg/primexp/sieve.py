from dataclasses import dataclass
from functools import lru_cache
from math import isqrt
from typing import List, Tuple

import numpy as np
from loguru import logger

from primexp.errors import DomainError, SieveRangeError
from primexp.kernels import compensated_total

MAX_BLOCK = 2 ** 31
MAX_X = 2 ** 40


@lru_cache(maxsize=16)
def prime_sieve(limit: int) -> np.ndarray:
    """All primes <= limit (read-only int64 array)."""
    if limit < 2:
        primes = np.zeros(0, dtype=np.int64)
    else:
        is_prime = np.ones(limit + 1, dtype=bool)
        is_prime[:2] = False
        is_prime[4::2] = False
        for p in range(3, isqrt(limit) + 1, 2):
            if is_prime[p]:
                is_prime[p * p :: 2 * p] = False
        primes = np.flatnonzero(is_prime).astype(np.int64)
    primes.setflags(write=False)
    return primes


@dataclass(frozen=True)
class MangoldtBlock:
    """Support of the von Mangoldt function on (x, x + y]."""

    x: int
    y: int
    ns: np.ndarray
    weights: np.ndarray

    @property
    def support(self) -> List[Tuple[int, float]]:
        return list(zip(self.ns.tolist(), self.weights.tolist()))

    def __len__(self):
        return int(self.ns.shape[0])

    def total(self) -> float:
        """psi(x + y) - psi(x)."""
        return compensated_total(self.weights)


def lambda_block(x: int, y: int) -> MangoldtBlock:
    if not 2 <= y <= x:
        raise SieveRangeError(f"lambda_block needs 2 <= y <= x, got x={x}, y={y}")
    if y > MAX_BLOCK or x + y > MAX_X:
        raise SieveRangeError(f"block (x={x}, y={y}) exceeds the sieve limits")
    lo, hi = x + 1, x + y
    base = prime_sieve(isqrt(hi))
    unmarked = np.ones(y, dtype=bool)
    for p in base.tolist():
        start = max(p * p, -(-lo // p) * p)
        if start <= hi:
            unmarked[start - lo :: p] = False

    primes = np.flatnonzero(unmarked).astype(np.int64) + lo
    powers, power_logs = [], []
    for p in base.tolist():
        pm = p * p
        while pm <= hi:
            if pm >= lo:
                powers.append(pm)
                power_logs.append(np.log(p))
            pm *= p

    ns = np.concatenate([primes, np.asarray(powers, dtype=np.int64)])
    weights = np.concatenate([np.log(primes.astype(np.float64)), np.asarray(power_logs, dtype=np.float64)])
    order = np.argsort(ns, kind="stable")
    ns, weights = ns[order], weights[order]
    ns.setflags(write=False)
    weights.setflags(write=False)
    logger.debug(f"lambda_block({x}, {y}): {len(primes)} primes, {len(powers)} higher prime powers")
    return MangoldtBlock(x, y, ns, weights)


def mangoldt_values(N: int) -> np.ndarray:
    """Lambda(n) for 0 <= n <= N (index n)."""
    if not 1 <= N <= MAX_BLOCK:
        raise DomainError(f"mangoldt_values needs 1 <= N <= 2^31, got {N}")
    values = np.zeros(N + 1, dtype=np.float64)
    for p in prime_sieve(N).tolist():
        pm = p
        while pm <= N:
            values[pm] = np.log(p)
            pm *= p
    return values


@dataclass(frozen=True)
class MobiusTable:
    N: int
    values: np.ndarray

    def __getitem__(self, n: int) -> int:
        if not 1 <= n <= self.N:
            raise DomainError(f"mu({n}) outside the table range [1, {self.N}]")
        return int(self.values[n])

    def squarefree_count(self) -> int:
        return int(np.count_nonzero(self.values[1:]))


def mobius_table(N: int) -> MobiusTable:
    if not 1 <= N <= MAX_BLOCK:
        raise DomainError(f"mobius_table needs 1 <= N <= 2^31, got {N}")
    mu = np.ones(N + 1, dtype=np.int8)
    mu[0] = 0
    for p in prime_sieve(N).tolist():
        mu[p::p] *= -1
        if p * p <= N:
            mu[p * p :: p * p] = 0
    mu.setflags(write=False)
    return MobiusTable(N, mu)


@lru_cache(maxsize=4)
def cached_mobius_table(N: int) -> MobiusTable:
    return mobius_table(N)
