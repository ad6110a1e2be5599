import math
from fractions import Fraction

import pytest

from primexp.errors import DomainError, InfeasiblePlanError
from primexp.exponents import (
    case2_conditions,
    cover_plan,
    exponent_report,
    lemma31_rho_ok,
    lemma32_rho_ok,
    minor_bound_rhs,
    plan_decomposition,
    q_param,
    rho_full,
    rho_max,
    rho_raw,
    sigma,
    sup_minor_bound_rhs,
    theorem1_bound_rhs,
    theorem1_rho_cap,
    theta_lower,
    window_check_l31,
    window_check_l32,
    window_l31,
)


def theta_grid(k: int, points: int):
    lower = theta_lower(k)
    return [lower + (1 - lower) * Fraction(i, points) for i in range(1, points + 1)]


@pytest.mark.parametrize("k, expected", [(3, Fraction(1, 4)), (4, Fraction(1, 8)), (5, Fraction(1, 16)), (8, Fraction(1, 96))])
def test_sigma(k, expected):
    assert sigma(k) == expected


def test_sigma_domain():
    with pytest.raises(DomainError):
        sigma(2)


def test_rho_max_examples():
    assert rho_max(3, 1) == Fraction(1, 14)
    assert rho_max(4, 1) == Fraction(1, 24)
    assert rho_max(4, "0.85") == Fraction(1, 60)


def test_rho_max_theta_range():
    with pytest.raises(DomainError):
        rho_max(3, Fraction(4, 5))
    with pytest.raises(DomainError):
        rho_max(4, Fraction(5, 6))
    with pytest.raises(DomainError):
        rho_max(3, Fraction(11, 10))


@pytest.mark.parametrize("k", range(3, 13))
def test_rho_raw_simplifies_to_rho_max(k):
    for theta in theta_grid(k, 100):
        assert rho_raw(k, theta) == rho_max(k, theta)


@pytest.mark.slow
@pytest.mark.parametrize("k", range(3, 13))
def test_rho_raw_simplifies_to_rho_max_fine_grid(k):
    for theta in theta_grid(k, 1000):
        assert rho_raw(k, theta) == rho_max(k, theta)


@pytest.mark.parametrize("k", range(3, 13))
def test_rho_full_never_exceeds_rho_raw(k):
    for theta in theta_grid(k, 50):
        assert rho_full(k, theta) <= rho_raw(k, theta)
    assert rho_full(k, 1) == rho_raw(k, 1)


def test_theorem1_rho_cap():
    assert theorem1_rho_cap(3, 1) == Fraction(1, 8)
    assert theorem1_rho_cap(1, Fraction(9, 10)) == Fraction(2, 15)


def test_q_param():
    assert q_param(100, 1, 3, Fraction(1, 14)) == pytest.approx(10 ** (24 / 7), rel=1e-12)
    with pytest.raises(DomainError):
        q_param(1, 1, 3, Fraction(1, 14))


def test_plan_decomposition_cubic():
    profile = plan_decomposition(3, 1, Fraction(1, 14), 10 ** 6)
    assert profile.beta == Fraction(2, 7)
    assert profile.J == 4
    assert profile.P_major_exp == Fraction(3, 7)
    assert profile.iv2_exp == Fraction(3, 7)
    assert profile.iv2_numeric_ok
    assert profile.delta_exp == 0
    assert profile.Q_exp == Fraction(12, 7)


@pytest.mark.parametrize("k, theta, J", [(3, "1", 4), (3, "0.9", 6), (4, "1", 4), (4, "0.9", 7), (5, "1", 4)])
def test_plan_decomposition_lengths(k, theta, J):
    assert plan_decomposition(k, theta, rho_max(k, theta), 10 ** 6).J == J


def test_plan_decomposition_infeasible():
    with pytest.raises(InfeasiblePlanError) as info:
        plan_decomposition(4, "0.85", rho_max(4, "0.85"), 10 ** 6)
    assert info.value.lhs == 0
    with pytest.raises(InfeasiblePlanError):
        plan_decomposition(3, "0.85", rho_max(3, "0.85"), 10 ** 6)
    with pytest.raises(InfeasiblePlanError):
        plan_decomposition(5, "0.9", rho_max(5, "0.9"), 10 ** 6)


def test_head_length_cap_is_not_implied_by_rho_max():
    assert rho_max(3, "0.85") == Fraction(3, 100)
    assert rho_full(3, "0.85") == Fraction(1, 60)
    assert rho_max(5, "0.9") == Fraction(17, 960)
    assert rho_full(5, "0.9") == Fraction(1, 60)
    assert rho_full(4, "0.85") == Fraction(-1, 48)


def test_cover_plan_keeps_rho_max_when_feasible():
    profile = cover_plan(3, 1, 10 ** 6)
    assert profile.rho == Fraction(1, 14)
    assert profile.J == 4
    assert cover_plan(4, "0.9", 10 ** 6).rho == rho_max(4, "0.9")


@pytest.mark.parametrize("k, theta, beta, J", [(3, "0.85", Fraction(3, 20), 7), (5, "0.9", Fraction(1, 5), 5)])
def test_cover_plan_falls_back_to_rho_full(k, theta, beta, J, caplog_loguru):
    profile = cover_plan(k, theta, 10 ** 6)
    assert profile.rho == Fraction(1, 60)
    assert profile.beta == beta
    assert profile.J == J
    assert profile.iv2_exp == Fraction(1, 3)
    assert "using rho_full" in caplog_loguru.text


def test_cover_plan_without_any_admissible_rho():
    with pytest.raises(InfeasiblePlanError):
        cover_plan(4, "0.85", 10 ** 6)
    with pytest.raises(DomainError):
        cover_plan(5, "0.85", 10 ** 6)


def test_plan_decomposition_warns_when_small_x_misses_iv2(caplog_loguru):
    profile = plan_decomposition(3, 1, Fraction(1, 14), 10)
    assert not profile.iv2_numeric_ok
    assert "not numerically" in caplog_loguru.text


def test_plan_decomposition_domain():
    with pytest.raises(DomainError):
        plan_decomposition(3, 1, Fraction(1, 10), 10 ** 6)
    with pytest.raises(DomainError):
        plan_decomposition(3, 1, 0, 10 ** 6)
    with pytest.raises(DomainError):
        plan_decomposition(3, 1, Fraction(1, 14), 1)


def test_case2_conditions_hold_for_cubic():
    assert all(case2_conditions(3, Fraction(1), Fraction(1, 14)).values())


def test_window_l31():
    profile = plan_decomposition(3, 1, Fraction(1, 14), 10 ** 6)
    assert window_l31(profile) == (Fraction(4, 7), Fraction(6, 7))
    x = 10 ** 6
    assert window_check_l31(x ** (5 / 7), profile, x)
    assert window_check_l31(x ** (4 / 7), profile, x)
    assert not window_check_l31(x ** 0.5, profile, x)
    assert not window_check_l31(x ** 0.9, profile, x)


def test_window_l32():
    profile = plan_decomposition(3, 1, Fraction(1, 14), 10 ** 6)
    x = 10 ** 6
    assert window_check_l32(1.0, 1.0, profile, x)
    assert not window_check_l32(float(x), 1.0, profile, x)
    assert not window_check_l32(1.0, float(x), profile, x)


def test_rho_conditions_of_the_sum_lemmas():
    assert lemma31_rho_ok(3, Fraction(1, 14))
    assert not lemma31_rho_ok(3, Fraction(1, 10))
    assert lemma31_rho_ok(4, Fraction(1, 24))
    assert lemma32_rho_ok(3, Fraction(1, 14))
    assert not lemma32_rho_ok(3, Fraction(1, 4))


def test_bound_rhs():
    x = 10 ** 6
    assert minor_bound_rhs(x, 1, Fraction(1, 14), 100) == pytest.approx(x ** (13 / 14) + x / 10, rel=1e-12)
    assert theorem1_bound_rhs(x, 1, Fraction(1, 14), 4) == pytest.approx(x ** (13 / 14) + x / 2, rel=1e-12)
    assert sup_minor_bound_rhs(x, 1, Fraction(1, 14)) == pytest.approx(x ** (13 / 14), rel=1e-12)
    assert sup_minor_bound_rhs(x, 1, Fraction(1, 14), eps=0.01) == pytest.approx(x ** (13 / 14 + 0.01), rel=1e-12)
    assert math.isfinite(minor_bound_rhs(x, "0.9", "1/30", 1))


def test_exponent_report():
    report = exponent_report(3, "1")
    assert report["rho_max"]["exact"] == "1/14"
    assert report["sigma"]["decimal"] == 0.25
    assert report["plan"]["J"] == 4
    assert set(report["rho_constraints"]) == {"weyl", "type1_log", "type1_sigma", "case2", "iv2", "case3", "iv7"}
    assert "infeasible" in exponent_report(4, "0.85")["plan"]
