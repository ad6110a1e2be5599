"""Closed-form exponents (sigma_k, rho_k(theta), Q, beta, J) and the bound
right-hand sides, in exact rational arithmetic until the last step."""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Tuple

from loguru import logger

from primexp.errors import DomainError, InfeasiblePlanError
from primexp.utils import parse_fraction

LOG_RTOL = 1e-12
ONE_THIRD = Fraction(1, 3)


def sigma(k: int) -> Fraction:
    if k < 3:
        raise DomainError(f"sigma_k is defined for k >= 3, got {k}")
    return Fraction(1, min(2 ** (k - 1), 2 * k * (k - 2)))


def theta_lower(k: int) -> Fraction:
    """Exclusive lower end of the theta range covered by rho_max."""
    if k < 3:
        raise DomainError(f"k must be >= 3, got {k}")
    return Fraction(4, 5) if k == 3 else 1 - Fraction(1, k + 2)


def _theta_in_range(k: int, theta) -> Fraction:
    theta = parse_fraction(theta)
    if not theta_lower(k) < theta <= 1:
        raise DomainError(f"theta={theta} outside ({theta_lower(k)}, 1] for k={k}")
    return theta


def rho_max(k: int, theta) -> Fraction:
    theta = _theta_in_range(k, theta)
    if k == 3:
        return min((2 * theta - 1) / 14, (14 * theta - 11) / 30, (5 * theta - 4) / 6)
    return min(sigma(k) * (3 * theta - 1) / 6, ((k + 2) * theta - (k + 1)) / 6)


def rho_raw(k: int, theta) -> Fraction:
    theta = _theta_in_range(k, theta)
    return min(
        sigma(k) * (3 * theta - 1) / 6,
        (2 * theta - 1) / (4 * k + 2),
        ((k + 2) * theta - k - 1) / 6,
        ((4 * k + 2) * theta - 3 * k - 2) / (10 * k),
    )


def rho_constraints(k: int, theta) -> Dict[str, Fraction]:
    """The seven caps on rho before the four-term simplification (d = theta - 1)."""
    theta = _theta_in_range(k, theta)
    s = sigma(k)
    d = theta - 1
    return {
        "weyl": s * (3 * d + 2) / 6,
        "type1_log": (2 * d + 1) / (4 * k + 2),
        "type1_sigma": (2 * d + 1) * s / (1 + s),
        "case2": (k + 2) * d / 6 + Fraction(1, 6),
        "iv2": (k + 1) * d / 4 + Fraction(1, 6),
        "case3": (2 * k + 1) * d / (5 * k) + Fraction(1, 10),
        "iv7": d / (4 * k) + Fraction(k + 1, 12 * k),
    }


def rho_full(k: int, theta) -> Fraction:
    return min(rho_constraints(k, theta).values())


def theorem1_rho_cap(k: int, theta) -> Fraction:
    theta = parse_fraction(theta)
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    return min((8 * theta - 5) / (6 * k + 6), (10 * theta - 7) / 15)


def q_exponent(theta, k: int, rho) -> Fraction:
    theta, rho = parse_fraction(theta), parse_fraction(rho)
    return ((theta - 1) + k - 2 * rho) * Fraction(k, 2 * k - 1)


def q_param(x: float, theta, k: int, rho) -> float:
    if x < 2:
        raise DomainError(f"x must be >= 2, got {x}")
    return math.exp(math.log(x) * float(q_exponent(theta, k, rho)))


def beta_terms(k: int, theta: Fraction, rho: Fraction) -> Tuple[Fraction, Fraction, Fraction]:
    d = theta - 1
    return (
        2 * d + 1 - 2 * rho * (1 / sigma(k) + 1),
        (k + 2) * d + 1 - 6 * rho,
        (2 * k * d + k - (8 * k - 2) * rho) / (2 * k - 1),
    )


@dataclass(frozen=True)
class ExponentProfile:
    k: int
    theta: Fraction
    rho: Fraction
    sigma_k: Fraction
    delta_exp: Fraction
    Q_exp: Fraction
    beta: Fraction
    J: int
    P_major_exp: Fraction
    iv2_exp: Fraction = Fraction(0)
    iv2_numeric_ok: bool = True
    case2: Dict[str, bool] = field(default_factory=dict)

    @property
    def threshold_exp(self) -> Fraction:
        """Exponent of delta^{-1} x^{2 rho}."""
        return -self.delta_exp + 2 * self.rho

    @property
    def cap_exp(self) -> Fraction:
        """Exponent of delta^{-1} x^{beta + 2 rho}."""
        return -self.delta_exp + self.beta + 2 * self.rho

    def to_dict(self) -> dict:
        out = {}
        for name in ("sigma_k", "delta_exp", "Q_exp", "beta", "P_major_exp", "iv2_exp", "theta", "rho"):
            value = getattr(self, name)
            out[name] = {"exact": str(value), "decimal": float(value)}
        out.update({"k": self.k, "J": self.J, "iv2_numeric_ok": self.iv2_numeric_ok, "case2": dict(self.case2)})
        return out


def case2_conditions(k: int, theta: Fraction, rho: Fraction) -> Dict[str, bool]:
    d = theta - 1
    s = sigma(k)
    return {
        "iv7a": k - Fraction(1, 2) <= d + k - (2 * k + 1) * rho,
        "iv7b": -2 * d + Fraction(1, 2) + 3 * rho <= d / k + 1 - 2 * rho,
        "iv8": -d + Fraction(1, 2) + rho <= d + min(1 - rho / s, k * d + 1 - 2 * rho),
    }


def plan_decomposition(k: int, theta, rho, x: float) -> ExponentProfile:
    """
    Fix beta and J for the dyadic decomposition at (k, theta, rho).

    Args:
        k (int): Degree, k >= 3.
        theta (Fraction | str): Interval exponent in (theta_lower(k), 1].
        rho (Fraction | str): Saving exponent in (0, rho_max(k, theta)].
        x (float): Scale of the numeric head-length comparison.

    Returns:
        ExponentProfile: Exact exponents, J = max(3, ceil(1 / beta)) and the Case 2 conditions.

    Raises:
        InfeasiblePlanError: beta <= 0, or (1 - theta) + beta + 2 rho < 1/3.
    """
    theta, rho = parse_fraction(theta), parse_fraction(rho)
    cap = rho_max(k, theta)
    if not 0 < rho <= cap:
        raise DomainError(f"rho={rho} outside (0, rho_max={cap}] for k={k}, theta={theta}")
    if x < 2:
        raise DomainError(f"x must be >= 2, got {x}")
    beta = min(beta_terms(k, theta, rho))
    if beta <= 0:
        raise InfeasiblePlanError(f"beta={beta} is not positive at k={k}, theta={theta}, rho={rho}", lhs=beta, rhs=0)
    J = max(3, math.ceil(1 / beta))
    iv2 = (1 - theta) + beta + 2 * rho
    log_x = math.log(x)
    lhs, rhs = math.exp(log_x * float(iv2)), 2 * math.exp(log_x / 3)
    if iv2 < ONE_THIRD:
        raise InfeasiblePlanError(
            f"head-length condition fails: delta^-1 x^(beta+2rho) = x^{iv2} < 2x^(1/3) ({lhs:.6g} < {rhs:.6g})", lhs=lhs, rhs=rhs
        )
    numeric_ok = lhs >= rhs
    if not numeric_ok:
        logger.warning(f"head-length condition holds in exponent ({iv2} >= 1/3) but not numerically at x={x}: {lhs:.6g} < {rhs:.6g}")
    profile = ExponentProfile(
        k=k,
        theta=theta,
        rho=rho,
        sigma_k=sigma(k),
        delta_exp=theta - 1,
        Q_exp=q_exponent(theta, k, rho),
        beta=beta,
        J=J,
        P_major_exp=2 * k * rho,
        iv2_exp=iv2,
        iv2_numeric_ok=numeric_ok,
        case2=case2_conditions(k, theta, rho),
    )
    logger.debug(f"plan k={k} theta={theta} rho={rho}: beta={beta}, J={J}")
    return profile


def cover_plan(k: int, theta, x: float) -> ExponentProfile:
    """
    Plan for the dyadic cover at the largest workable rho.

    rho_max drops the (k + 1) d / 4 + 1/6 cap, which is the head-length
    condition whenever beta is the (k + 2) d + 1 - 6 rho term. Where the plan
    at rho_max fails, the plan is retried at rho_full.

    Args:
        k (int): Degree, k >= 3.
        theta (Fraction | str): Interval exponent in (theta_lower(k), 1].
        x (float): Scale of the numeric head-length comparison.

    Returns:
        ExponentProfile: Plan at rho_max, or at rho_full when only that one is feasible.

    Raises:
        InfeasiblePlanError: No rho in (0, rho_max] gives a plan.
    """
    theta = _theta_in_range(k, theta)
    cap = rho_max(k, theta)
    try:
        return plan_decomposition(k, theta, cap, x)
    except InfeasiblePlanError as e:
        fallback = rho_full(k, theta)
        if not 0 < fallback < cap:
            raise
        logger.warning(f"no plan at rho_max={cap} for k={k}, theta={theta} ({e}); using rho_full={fallback}")
        return plan_decomposition(k, theta, fallback, x)


def log_le(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + LOG_RTOL * max(1.0, abs(lhs), abs(rhs))


def window_l31(profile: ExponentProfile) -> Tuple[Fraction, Fraction]:
    """Exponents (lower, upper) of the M window for type I sums."""
    k, rho, d = profile.k, profile.rho, profile.delta_exp
    lower = max(
        -d + 2 * rho / profile.sigma_k,
        -d - k * d + 4 * rho,
        -d + ((2 * k - 2) * d + k - 1 + 4 * k * rho) / (2 * k - 1),
    )
    return lower, profile.theta - 2 * rho


def window_check_l31(M: float, profile: ExponentProfile, x: float) -> bool:
    lower, upper = window_l31(profile)
    log_x, log_m = math.log(x), math.log(M)
    return log_le(float(lower) * log_x, log_m) and log_le(log_m, float(upper) * log_x)


def window_check_l32(M1: float, M2: float, profile: ExponentProfile, x: float) -> bool:
    k, rho, d, s = profile.k, profile.rho, profile.delta_exp, profile.sigma_k
    log_x, l1, l2 = math.log(x), math.log(M1), math.log(M2)
    first = log_le((2 * k - 1) * l1, float(d + k - (2 * k + 1) * rho) * log_x)
    second = log_le(l1 + l2, float(min(d + 1 - rho / s, (k + 1) * d + 1 - 2 * rho)) * log_x)
    third = log_le(l1 + 2 * l2, float(d / k + 1 - 2 * rho) * log_x)
    return first and second and third


def _xpow(x: float, exponent: float) -> float:
    return math.exp(math.log(x) * exponent)


def minor_bound_rhs(x: float, theta, rho, P: float, eps: float = 0.0) -> float:
    theta, rho = float(parse_fraction(theta)), float(parse_fraction(rho))
    return _xpow(x, theta - rho + eps) + _xpow(x, theta + eps) / math.sqrt(P)


def theorem1_bound_rhs(x: float, theta, rho, xi: float, eps: float = 0.0) -> float:
    theta, rho = float(parse_fraction(theta)), float(parse_fraction(rho))
    return _xpow(x, theta - rho + eps) + _xpow(x, theta + eps) / math.sqrt(xi)


def sup_minor_bound_rhs(x: float, theta, rho, eps: float = 0.0) -> float:
    """Bound over the minor arcs of P = x^{2 k rho}: x^{theta - rho + eps}."""
    theta, rho = float(parse_fraction(theta)), float(parse_fraction(rho))
    return _xpow(x, theta - rho + eps)


def lemma31_rho_ok(k: int, rho) -> bool:
    s = sigma(k)
    return parse_fraction(rho) < s / (2 + 2 * s)


def lemma32_rho_ok(k: int, rho) -> bool:
    return parse_fraction(rho) < sigma(k)


def lemma31_bound_rhs(x: float, theta, rho, k: int, w: float, distance: float) -> float:
    """x^{theta - rho} + w^{1/2} x^theta / (1 + delta^2 x^k |alpha - a/q|)^{1/2}."""
    theta, rho = float(parse_fraction(theta)), float(parse_fraction(rho))
    scale = _xpow(x, 2 * (theta - 1) + k) * distance
    return _xpow(x, theta - rho) + math.sqrt(w) * _xpow(x, theta) / math.sqrt(1 + scale)


def lemma32_bound_rhs(x: float, theta, rho, k: int, w: float, distance: float) -> float:
    """x^{theta - rho} + w x^theta / (1 + delta x^k |alpha - a/q|)."""
    theta, rho = float(parse_fraction(theta)), float(parse_fraction(rho))
    scale = _xpow(x, (theta - 1) + k) * distance
    return _xpow(x, theta - rho) + w * _xpow(x, theta) / (1 + scale)


def _exact(value: Fraction) -> dict:
    return {"exact": str(value), "decimal": float(value)}


def exponent_report(k: int, theta, rho=None, x: float = 10 ** 6) -> dict:
    """sigma_k, the rho caps and, when feasible, the decomposition plan at x."""
    theta = parse_fraction(theta)
    cap = rho_max(k, theta)
    rho = cap if rho is None else parse_fraction(rho)
    report = {
        "k": k,
        "theta": _exact(theta),
        "sigma": _exact(sigma(k)),
        "rho_max": _exact(cap),
        "rho_raw": _exact(rho_raw(k, theta)),
        "rho_full": _exact(rho_full(k, theta)),
        "rho_constraints": {name: _exact(value) for name, value in rho_constraints(k, theta).items()},
        "theorem1_rho_cap": _exact(theorem1_rho_cap(k, theta)),
        "rho": _exact(rho),
        "Q_exp": _exact(q_exponent(theta, k, rho)),
        "x": x,
    }
    try:
        report["plan"] = plan_decomposition(k, theta, rho, x).to_dict()
    except InfeasiblePlanError as e:
        report["plan"] = {"infeasible": str(e)}
    return report
