import math
from fractions import Fraction

import pytest

from primexp import settings
from primexp.errors import ClassificationError, DomainError, EnumerationBudgetError, InfeasiblePlanError
from primexp.exponents import cover_plan, log_le, plan_decomposition
from primexp.heath_brown import (
    CaseKind,
    DyadicRange,
    HBVector,
    _blocks,
    _bounded_blocks,
    classify_case,
    dyadic_vectors,
    find_subset,
    hb_coefficient,
    hb_rhs,
    hb_term,
    ordered_factorization_count,
)
from primexp.sieve import cached_mobius_table, mangoldt_values, mobius_table

X_CLASSIFY = 10 ** 6


@pytest.fixture(scope="module")
def cubic_profile():
    return plan_decomposition(3, 1, Fraction(1, 14), X_CLASSIFY)


def test_dyadic_range():
    r = DyadicRange.of_exponent(3)
    assert (r.first, r.last) == (9, 16)
    assert 9 in r and 8 not in r
    unit = DyadicRange.of_exponent(-1)
    assert (unit.first, unit.last) == (1, 1)
    with pytest.raises(DomainError):
        DyadicRange.of_exponent(-2)
    with pytest.raises(DomainError):
        DyadicRange(Fraction(2), 5)


def test_hb_vector_needs_2j_ranges():
    with pytest.raises(DomainError):
        HBVector.of_exponents(2, [0, 1, 2])
    v = HBVector.of_exponents(2, [0, 1, 2, 3], cap=3)
    assert v.product_bounds() == (2 * 3 * 5 * 9, 2 * 4 * 8 * 16)
    assert v.admits(1, 3) and not v.admits(1, 4) and v.admits(2, 8)


def test_ordered_factorization_count():
    assert ordered_factorization_count(12, 2) == 6
    assert ordered_factorization_count(8, 3) == 10
    assert ordered_factorization_count(1, 4) == 1


@pytest.mark.parametrize("n, X, J, expected", [(2, 10, 1, math.log(2)), (12, 12, 2, 0.0), (16, 16, 2, math.log(2))])
def test_hb_rhs_examples(n, X, J, expected):
    assert hb_rhs(n, X, J) == pytest.approx(expected, abs=1e-12)


def _check_identity(N: int, J: int):
    lam = mangoldt_values(N)
    for n in range(2, N + 1):
        assert hb_rhs(n, N, J) == pytest.approx(lam[n], abs=1e-9), n


@pytest.mark.parametrize("J", [1, 2, 3])
def test_hb_rhs_reproduces_mangoldt(J):
    _check_identity(1000, J)


@pytest.mark.slow
@pytest.mark.parametrize("J", [1, 2, 3])
def test_hb_rhs_reproduces_mangoldt_to_5000(J):
    _check_identity(5000, J)


def test_hb_rhs_domain():
    with pytest.raises(DomainError):
        hb_rhs(1, 10, 1)
    with pytest.raises(DomainError):
        hb_rhs(11, 10, 1)
    with pytest.raises(DomainError):
        hb_rhs(5, 10, 9)
    with pytest.raises(DomainError):
        hb_term(5, 10, 2, 3)


def test_hb_rhs_enumeration_budget(monkeypatch):
    monkeypatch.setattr(settings, "HB_ENUMERATION_BUDGET", 10)
    with pytest.raises(EnumerationBudgetError):
        hb_rhs(64, 64, 2)


def test_hb_coefficient_examples():
    mobius = mobius_table(20)
    v = HBVector.of_exponents(1, [1, 1])
    assert hb_coefficient(12, v, mobius) == pytest.approx(-math.log(4))
    assert hb_coefficient(6, v, mobius) == 0.0
    assert hb_coefficient(1, HBVector.of_exponents(1, [-1, -1]), mobius) == 0.0
    with pytest.raises(DomainError):
        hb_coefficient(0, v, mobius)


def test_dyadic_cover_reproduces_hb_terms():
    x, theta, J = 200, Fraction(1, 2), 2
    X = x + 14
    vectors = dyadic_vectors(x, theta, J, canonical=False)
    mobius = cached_mobius_table(X)
    lam = mangoldt_values(X)
    for n in range(x + 1, X + 1):
        per_j = {j: math.fsum(hb_coefficient(n, v, mobius) for v in vectors if v.j == j) for j in (1, 2)}
        for j in (1, 2):
            assert per_j[j] == pytest.approx(hb_term(n, X, J, j), abs=1e-9)
        total = math.fsum(math.comb(J, j) * (-1) ** (j - 1) * per_j[j] for j in (1, 2))
        assert total == pytest.approx(lam[n], abs=1e-9)


@pytest.mark.parametrize("canonical", [True, False])
def test_dyadic_vector_count_bound(canonical):
    vectors = dyadic_vectors(X_CLASSIFY, 1, 2, canonical=canonical)
    assert 0 < len(vectors) <= (2 * math.log2(X_CLASSIFY) + 2) ** 3
    assert {v.j for v in vectors} == {1, 2}


def test_canonical_vectors_are_sorted_blocks():
    for v in dyadic_vectors(10 ** 4, Fraction(1, 2), 3):
        mu = [r.high for r in v.mobius_ranges]
        free = [r.high for r in v.ranges[v.j :]]
        assert mu == sorted(mu) and free == sorted(free)


def test_dyadic_vectors_domain():
    with pytest.raises(DomainError):
        dyadic_vectors(1, 1, 2)
    with pytest.raises(DomainError):
        dyadic_vectors(1000, 0, 2)
    with pytest.raises(DomainError):
        dyadic_vectors(1000, 1, 9)


def test_find_subset():
    assert find_subset([1.0, 2.0, 3.0], [0, 1, 2], 2.5, 3.5) == (0, 1)
    assert find_subset([4.0, 1.0, 3.0], [0, 1, 2], 2.5, 3.5) == (2,)
    assert find_subset([4.0, 5.0], [0, 1], 1.0, 2.0) is None


def test_classify_case_examples(cubic_profile):
    case1 = classify_case(HBVector.of_exponents(1, [4, 15]), cubic_profile, X_CLASSIFY)
    assert case1.kind == CaseKind.CASE1 and case1.S == (1,)
    assert case1.M == pytest.approx(X_CLASSIFY / 16)
    assert case1.is_type1

    small = classify_case(HBVector.of_exponents(1, [1, 18]), cubic_profile, X_CLASSIFY)
    assert (small.kind, small.M1, small.M2) == (CaseKind.CASE2, 2.0, 1.0)

    pair = classify_case(HBVector.of_exponents(2, [1, 0, 5, 12]), cubic_profile, X_CLASSIFY)
    assert (pair.kind, pair.M1, pair.M2) == (CaseKind.CASE2, 32.0, 2.0)

    split = classify_case(HBVector.of_exponents(3, [1, 1, 0, 3, 3, 12]), cubic_profile, X_CLASSIFY)
    assert (split.kind, split.r, split.S) == (CaseKind.CASE3_1, 4, (1, 2, 3, 4))
    assert split.M == pytest.approx(X_CLASSIFY / 32)

    bilinear = classify_case(HBVector.of_exponents(3, [0, 0, 0, 2, 3, 14]), cubic_profile, X_CLASSIFY)
    assert (bilinear.kind, bilinear.M1, bilinear.M2) == (CaseKind.CASE3_2, 8.0, 4.0)
    assert not bilinear.is_type1
    assert bilinear.to_dict()["case"] == "case3.2"
    assert bilinear.to_dict()["S"] == ""


def test_classify_case_reports_missing_subset(cubic_profile):
    with pytest.raises(ClassificationError):
        classify_case(HBVector.of_exponents(1, [12, 7]), cubic_profile, X_CLASSIFY)


def _check_totality(k: int, theta: str):
    x = X_CLASSIFY
    profile = cover_plan(k, theta, x)
    log2_x = math.log2(x)
    low, high = float(profile.threshold_exp) * log2_x, float(profile.cap_exp) * log2_x
    vectors = dyadic_vectors(x, profile.theta, profile.J)
    assert vectors
    labels = [classify_case(v, profile, x) for v in vectors]
    assert all(labels[i] == classify_case(vectors[i], profile, x) for i in range(0, len(vectors), 97))
    for v, label in zip(vectors, labels):
        if label.kind in (CaseKind.CASE1, CaseKind.CASE3_1):
            size = sum(v.log2_sizes[i - 1] for i in label.S)
            assert log_le(low, size) and log_le(size, high)


@pytest.mark.parametrize("k, theta", [(3, "1"), (4, "1"), (5, "1")])
def test_classify_case_is_total(k, theta):
    _check_totality(k, theta)


@pytest.mark.slow
@pytest.mark.parametrize("k, theta", [(3, "0.9"), (4, "0.9"), (5, "0.9"), (3, "0.85")])
def test_classify_case_is_total_long_decompositions(k, theta):
    _check_totality(k, theta)


def test_grid_points_without_a_decomposition():
    # beta = 0 at rho_max and rho_full < 0: no rho admits a plan
    with pytest.raises(InfeasiblePlanError):
        cover_plan(4, "0.85", X_CLASSIFY)
    # 0.85 < theta_lower(5) = 6/7
    with pytest.raises(DomainError):
        cover_plan(5, "0.85", X_CLASSIFY)


@pytest.mark.parametrize("canonical", [True, False])
def test_pruned_blocks_match_filtered_blocks(canonical):
    options = range(-1, 6)
    for size in (1, 2, 3):
        for lo, hi in ((0, 4), (-3, 2), (7, 15)):
            expected = [b for b in _blocks(options, size, canonical) if lo <= sum(b) <= hi]
            assert list(_bounded_blocks(options, size, lo, hi, canonical)) == expected
