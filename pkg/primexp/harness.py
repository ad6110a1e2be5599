"""Experiment drivers: minor and major arc scans, the short-sum dichotomy,
and the audits of the local-factor, counting and decomposition results.

Scans report the maximum ratio over the sampled alpha; a finite sample only
bounds the supremum over an arc from below.
"""
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from math import gcd
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from loguru import logger
from tqdm import tqdm

from primexp.errors import ClassificationError, ConfigError, DomainError, PrecisionError
from primexp.exponents import (
    cover_plan,
    log_le,
    minor_bound_rhs,
    plan_decomposition,
    rho_max,
    sigma,
    theorem1_bound_rhs,
    theorem1_rho_cap,
    window_check_l31,
    window_check_l32,
)
from primexp.expsums import SumRequest, f_k_sum, weyl_short
from primexp.heath_brown import classify_case, dyadic_vectors, hb_rhs
from primexp.local_factors import complete_sum, lemma3_count, wk_moment_sum, wk_value
from primexp.models import ExperimentKind, ExperimentRecord, ScanConfig
from primexp.phase import FixedPointReal, as_alpha
from primexp.rational import ArcKind, arc_threshold, classify_arc, dirichlet_approx, xi_value
from primexp.sieve import mangoldt_values
from primexp.utils import floor_power, format_fraction, parse_fraction, xpow

T = TypeVar("T")
R = TypeVar("R")

SEED_BITS = 64
HB_TOLERANCE = 1e-8
LEMMA3_DELTAS = (Fraction(1, 100), Fraction(1, 20), Fraction(1, 10), Fraction(1, 4))


def _parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: int, progress: bool, desc: str) -> List[R]:
    """fn over items, results in input order."""
    bar = dict(total=len(items), desc=desc, disable=not progress or not sys.stderr.isatty(), file=sys.stderr)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(tqdm(executor.map(fn, items), **bar))
    return [fn(item) for item in tqdm(items, **bar)]


def _uniform_alpha(rng: np.random.Generator) -> Fraction:
    """Uniform 128-bit fraction in [0, 1)."""
    hi, lo = (int(v) for v in rng.integers(0, 2 ** SEED_BITS, size=2, dtype=np.uint64))
    return Fraction((hi << SEED_BITS) | lo, 1 << (2 * SEED_BITS))


def _coprime_numerator(rng: np.random.Generator, q: int) -> int:
    if q == 1:
        return 0
    while True:
        a = int(rng.integers(1, q))
        if gcd(a, q) == 1:
            return a


def _near_rational_alpha(rng: np.random.Generator, P: float, threshold: float) -> Fraction:
    """a/q with q log-uniform in [2, P], pushed off by (1, 10) thresholds over q."""
    q = int(math.exp(rng.uniform(math.log(2), math.log(max(P, 2.0)))))
    q = max(2, min(q, int(P))) if P >= 2 else 2
    a = _coprime_numerator(rng, q)
    offset = Fraction(float(rng.uniform(1.0, 10.0) * threshold / q))
    if rng.random() < 0.5:
        offset = -offset
    return (Fraction(a, q) + offset) % 1


def _elapsed_ms(start: float, timing: bool) -> int:
    return int(round((time.perf_counter() - start) * 1000)) if timing else 0


def _scan_rho(cfg: ScanConfig) -> Fraction:
    theta = cfg.theta_value
    try:
        cap = rho_max(cfg.k, theta)
    except DomainError as e:
        raise ConfigError(str(e)) from e
    rho = cfg.rho_value if cfg.rho_value is not None else cap
    if not 0 < rho <= cap:
        raise ConfigError(f"rho={rho} outside (0, rho_max={cap}] for k={cfg.k}, theta={theta}")
    return rho


def _interval_length(x: int, theta: Fraction) -> int:
    y = floor_power(x, theta)
    if not 2 <= y <= x:
        raise ConfigError(f"x^theta = {y} is not a usable interval length at x={x}")
    return y


def max_ratio_by_x(records: Iterable[ExperimentRecord]) -> Dict[int, float]:
    out: Dict[int, float] = {}
    for record in records:
        if not math.isnan(record.ratio):
            out[record.x] = max(out.get(record.x, 0.0), record.ratio)
    return dict(sorted(out.items()))


def _failed_record(kind: ExperimentKind, base: dict, alpha: FixedPointReal, error: Exception, start: float, timing: bool):
    logger.warning(f"alpha={alpha}: {error}")
    return ExperimentRecord(
        experiment=kind,
        alpha=str(alpha),
        abs_sum=math.nan,
        bound_rhs=1.0,
        ratio=math.nan,
        runtime_ms=_elapsed_ms(start, timing),
        flags=["precision_error"],
        **base,
    )


def scan_minor(cfg: ScanConfig) -> List[ExperimentRecord]:
    """
    Compare |f_k(alpha; x, x^theta)| on sampled minor-arc alpha with x^(theta-rho) + x^theta P^(-1/2).

    Samples come from numpy's default_rng seeded with (seed, x), so the
    records do not depend on ``cfg.threads``.

    Args:
        cfg (ScanConfig): k, theta, rho, the x values, P_exp, samples and seed.

    Returns:
        List[ExperimentRecord]: Minor-arc records, ratio descending.

    Raises:
        ConfigError: rho outside (0, rho_max] or an unusable interval length.
    """
    k, theta = cfg.k, cfg.theta_value
    rho = _scan_rho(cfg)
    records: List[ExperimentRecord] = []
    for x in cfg.x:
        y = _interval_length(x, theta)
        P_exp = parse_fraction(cfg.P_exp) if cfg.P_exp is not None else 2 * k * rho
        P = xpow(x, P_exp)
        threshold = arc_threshold(k, theta, x, P)
        bound = minor_bound_rhs(x, theta, rho, P)
        rng = np.random.default_rng([cfg.seed, x])

        alphas = [as_alpha(text, cfg.precision_bits) for text in cfg.extra_alphas]
        near = round(cfg.samples * cfg.near_rational_fraction)
        alphas += [as_alpha(_uniform_alpha(rng), cfg.precision_bits) for _ in range(cfg.samples - near)]
        alphas += [as_alpha(_near_rational_alpha(rng, P, threshold), cfg.precision_bits) for _ in range(near)]
        base = dict(k=k, theta=format_fraction(theta), rho=format_fraction(rho), x=x, y=y, P=P)

        def evaluate(alpha: FixedPointReal) -> Optional[ExperimentRecord]:
            start = time.perf_counter()
            try:
                decision = classify_arc(alpha, k, theta, x, P)
                if decision.kind == ArcKind.MAJOR:
                    return None
                total = f_k_sum(SumRequest(alpha=alpha, x=x, y=y, k=k), threads=1)
            except PrecisionError as e:
                return _failed_record(ExperimentKind.MINOR_SCAN, base, alpha, e, start, cfg.timing)
            return ExperimentRecord(
                experiment=ExperimentKind.MINOR_SCAN,
                alpha=str(alpha),
                a=decision.approx.a,
                q=decision.approx.q,
                arc=decision.kind.value,
                abs_sum=total.abs,
                bound_rhs=bound,
                runtime_ms=_elapsed_ms(start, cfg.timing),
                flags=["boundary"] if decision.boundary else [],
                **base,
            )

        found = [r for r in _parallel_map(evaluate, alphas, cfg.threads, cfg.progress, f"minor x={x}") if r is not None]
        logger.info(f"scan-minor x={x}: {len(found)} of {len(alphas)} sampled alpha on the minor arcs")
        records.extend(found)

    records.sort(key=lambda r: r.sort_key)
    for x, value in max_ratio_by_x(records).items():
        logger.info(f"scan-minor x={x}: max ratio over sampled alpha = {value:.6g}")
    return records


def major_grid(q_max: int) -> List[Fraction]:
    """Every reduced a/q in [0, 1) with q <= q_max."""
    return [Fraction(a, q) for q in range(1, q_max + 1) for a in range(q) if gcd(a, q) == 1]


def scan_major(cfg: ScanConfig) -> List[ExperimentRecord]:
    """|f_k| on major-arc alpha against x^(theta-rho) + x^theta Xi(alpha)^(-1/2)."""
    k, theta = cfg.k, cfg.theta_value
    if not Fraction(7, 10) < theta <= 1:
        raise ConfigError(f"the major-arc scan needs 7/10 < theta <= 1, got {theta}")
    cap = theorem1_rho_cap(k, theta)
    rho = cfg.rho_value if cfg.rho_value is not None else cap
    if not 0 < rho <= cap:
        raise ConfigError(f"rho={rho} outside (0, {cap}] for k={k}, theta={theta}")

    records: List[ExperimentRecord] = []
    for x in cfg.x:
        y = _interval_length(x, theta)
        P = xpow(x, parse_fraction(cfg.P_exp)) if cfg.P_exp is not None else float(cfg.q_max)
        q_max = min(cfg.q_max, max(1, math.floor(P)))
        threshold = arc_threshold(k, theta, x, P)
        rng = np.random.default_rng([cfg.seed, x])

        points = [as_alpha(text, cfg.precision_bits) for text in cfg.extra_alphas]
        points += [as_alpha(value, cfg.precision_bits) for value in major_grid(q_max)]
        for _ in range(cfg.samples):
            q = int(rng.integers(1, q_max + 1))
            a = _coprime_numerator(rng, q)
            offset = Fraction(float(rng.uniform(0.0, 1.0) * threshold / q))
            if rng.random() < 0.5:
                offset = -offset
            points.append(as_alpha((Fraction(a, q) + offset) % 1, cfg.precision_bits))
        base = dict(k=k, theta=format_fraction(theta), rho=format_fraction(rho), x=x, y=y, P=P)

        def evaluate(alpha: FixedPointReal) -> Optional[ExperimentRecord]:
            start = time.perf_counter()
            try:
                decision = classify_arc(alpha, k, theta, x, P)
                if decision.kind != ArcKind.MAJOR:
                    return None
                total = f_k_sum(SumRequest(alpha=alpha, x=x, y=y, k=k), threads=1)
            except PrecisionError as e:
                return _failed_record(ExperimentKind.MAJOR_SCAN, base, alpha, e, start, cfg.timing)
            xi = xi_value(decision.approx, k, theta, x)
            return ExperimentRecord(
                experiment=ExperimentKind.MAJOR_SCAN,
                alpha=str(alpha),
                a=decision.approx.a,
                q=decision.approx.q,
                arc=decision.kind.value,
                abs_sum=total.abs,
                bound_rhs=theorem1_bound_rhs(x, theta, rho, xi),
                runtime_ms=_elapsed_ms(start, cfg.timing),
                flags=["boundary"] if decision.boundary else [],
                **base,
            )

        found = [r for r in _parallel_map(evaluate, points, cfg.threads, cfg.progress, f"major x={x}") if r is not None]
        logger.info(f"scan-major x={x}: {len(found)} of {len(points)} alpha on the major arcs")
        records.extend(found)

    records.sort(key=lambda r: r.sort_key)
    return records


def dichotomy_experiment(alpha, x: int, y: int, k: int, rho, prec: Optional[int] = None) -> ExperimentRecord:
    """Which side of the short-sum dichotomy covers |sum_{x<n<=x+y} e(alpha n^k)|.

    The approximation threshold for q is y^(k rho).
    """
    alpha = as_alpha(alpha, prec)
    rho = parse_fraction(rho)
    if not 0 < rho <= sigma(k):
        raise DomainError(f"rho={rho} outside (0, sigma_k={sigma(k)}]")
    log_x, log_y = math.log(x), math.log(y)
    flags = []
    if not log_le(k * log_x, float(k + 1 - 2 * rho) * log_y):
        flags.append("hypothesis_violated")
        logger.warning(f"x^k > y^(k+1-2rho) at x={x}, y={y}, k={k}, rho={rho}")

    total = weyl_short(alpha, x, y, k)
    q_cap = math.exp(float(k * rho) * log_y)
    rhs1 = math.exp(float(1 - rho) * log_y)
    base = dict(experiment=ExperimentKind.DICHOTOMY, k=k, rho=format_fraction(rho), x=x, y=y, P=q_cap, alpha=str(alpha))

    Q = max(1.0, math.exp((k - 1) * log_x + float(1 - k * rho) * log_y))
    try:
        approx = dirichlet_approx(alpha, Q)
    except PrecisionError as e:
        logger.warning(f"no certified approximation for alpha={alpha} at Q={Q:.6g}: {e}")
        flags += ["precision_error", "branch=1"]
        return ExperimentRecord(abs_sum=total.abs, bound_rhs=rhs1, flags=flags, **base)

    distance = approx.error / approx.q
    has_q = approx.q <= q_cap * (1 + 1e-12)
    err_ok = approx.error <= math.exp((1 - k) * log_x + float(k * rho - 1) * log_y) * (1 + 1e-12)
    if approx.q > y:
        flags.append("q_gt_y")
    if has_q and err_ok:
        flags.append("approximation_found")

    bound, branch = rhs1, 1
    if has_q and err_ok:
        w = float(wk_value(approx.q, k))
        rhs2 = w * y / (1 + y * math.exp((k - 1) * log_x) * distance) + math.exp(k / 2 * log_x + (1 - k) / 2 * log_y)
        if rhs2 < rhs1:
            bound, branch = rhs2, 2
    flags.append(f"branch={branch}")
    return ExperimentRecord(
        a=approx.a, q=approx.q, abs_sum=total.abs, bound_rhs=bound, flags=flags, **base
    )


def gauss_audit(q_max: int, k: int, q_min: int = 1, progress: bool = True) -> Tuple[List[ExperimentRecord], dict]:
    """|S(q, a, k)| / (q w_k(q)) for a in {1, q - 1} and q_min <= q <= q_max."""
    if not 1 <= q_min <= q_max:
        raise DomainError(f"need 1 <= q_min <= q_max, got {q_min}, {q_max}")
    records = []
    for q in tqdm(range(q_min, q_max + 1), desc="gauss", disable=not progress or not sys.stderr.isatty(), file=sys.stderr):
        scale = q * float(wk_value(q, k))
        for a in sorted({1, max(1, q - 1)}):
            total = complete_sum(q, a, k)
            records.append(
                ExperimentRecord(
                    experiment=ExperimentKind.GAUSS_AUDIT, k=k, x=q, alpha=f"{a}/{q}", a=a, q=q,
                    abs_sum=total.abs, bound_rhs=scale,
                )
            )
    half = q_max // 2
    summary = {
        "max_ratio": max(r.ratio for r in records),
        "lower_half_max": max((r.ratio for r in records if r.q <= half), default=0.0),
        "upper_half_max": max((r.ratio for r in records if r.q > half), default=0.0),
    }
    summary["stable"] = summary["upper_half_max"] <= summary["max_ratio"]
    summary["growth"] = summary["upper_half_max"] / summary["lower_half_max"] if summary["lower_half_max"] else math.inf
    logger.info(f"gauss audit k={k}, q <= {q_max}: max ratio {summary['max_ratio']:.6g}")
    return records, summary


def lemma1_audit(k: int, e_min: int = 5, e_max: int = 14) -> Tuple[List[ExperimentRecord], dict]:
    """Normalized dyadic moments: Q sum w_3^4 for k = 3, Q^(1-1/k) sum w_k^k for k >= 4."""
    if e_min < 0 or e_max < e_min:
        raise DomainError(f"bad dyadic range 2^{e_min}..2^{e_max}")
    j = 4 if k == 3 else k
    records = []
    for e in range(e_min, e_max + 1):
        Q = 1 << e
        scale = 1.0 / Q if k == 3 else Q ** (-1 + 1 / k)
        records.append(
            ExperimentRecord(
                experiment=ExperimentKind.LEMMA1_AUDIT, k=k, x=Q, abs_sum=wk_moment_sum(Q, k, j), bound_rhs=scale,
            )
        )
    growth = [b.ratio / a.ratio for a, b in zip(records, records[1:]) if a.ratio > 0]
    return records, {"j": j, "max_growth": max(growth, default=1.0), "max_ratio": max(r.ratio for r in records)}


def lemma3_audit(
    cases: int,
    seed: int,
    q_max: int = 1000,
    n_max: int = 10 ** 4,
    ks: Sequence[int] = (2, 3, 4),
    deltas: Sequence[Fraction] = LEMMA3_DELTAS,
) -> Tuple[List[ExperimentRecord], dict]:
    """Seeded lemma3_count cases; the count over delta (q + N) by half of the q range."""
    if cases < 1:
        raise DomainError(f"cases must be positive, got {cases}")
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(cases):
        q = int(rng.integers(2, q_max + 1))
        a = int(rng.integers(1, q))
        k = int(ks[int(rng.integers(0, len(ks)))])
        N = int(rng.integers(2, n_max + 1))
        delta = deltas[int(rng.integers(0, len(deltas)))]
        count, _ = lemma3_count(q, a, k, N, delta)
        records.append(
            ExperimentRecord(
                experiment=ExperimentKind.LEMMA3_AUDIT, k=k, x=N, alpha=f"{a}/{q}", a=a, q=q,
                abs_sum=float(count), bound_rhs=float(delta) * (q + N), flags=[f"delta={delta}"],
            )
        )
    half = q_max // 2
    summary = {
        "lower_half_max": max((r.ratio for r in records if r.q <= half), default=0.0),
        "upper_half_max": max((r.ratio for r in records if r.q > half), default=0.0),
    }
    return records, summary


def hb_verify(n_max: int, J: int, X: Optional[int] = None) -> dict:
    """max |hb_rhs(n, X, J) - Lambda(n)| over 2 <= n <= n_max."""
    X = X or n_max
    lam = mangoldt_values(n_max)
    worst_n, worst = 2, 0.0
    ok = True
    for n in range(2, n_max + 1):
        diff = abs(hb_rhs(n, X, J) - lam[n])
        if diff > HB_TOLERANCE * max(1.0, math.log(n)):
            ok = False
        if diff > worst:
            worst_n, worst = n, diff
    return {"n_max": n_max, "J": J, "X": X, "max_abs_err": worst, "worst_n": worst_n, "ok": ok}


def hb_case_rows(x: int, theta, k: int, rho=None) -> List[dict]:
    """One row per dyadic vector: ranges, case, S or (M1, M2), and the window check of that case.

    Without ``rho`` the plan comes from cover_plan (rho_max, or rho_full where rho_max has no plan).
    """
    theta = parse_fraction(theta)
    profile = cover_plan(k, theta, x) if rho is None else plan_decomposition(k, theta, parse_fraction(rho), x)
    rows = []
    for v in dyadic_vectors(x, theta, profile.J):
        row = {"j": v.j, "ranges": v.label()}
        try:
            label = classify_case(v, profile, x)
        except ClassificationError as e:
            logger.error(str(e))
            row.update({"case": "failure", "S": "", "M": None, "r": None, "M1": None, "M2": None, "window_ok": False})
            rows.append(row)
            continue
        row.update(label.to_dict())
        if label.is_type1:
            row["window_ok"] = window_check_l31(label.M, profile, x)
        else:
            row["window_ok"] = window_check_l32(label.M1, label.M2, profile, x)
        rows.append(row)
    return rows
