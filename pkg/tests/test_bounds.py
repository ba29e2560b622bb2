import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import B3, EQ, F4, H2, PD, T3, TM, substitutions
from substdim.bounds import (
    DISCRETE,
    FINITE,
    PARTLY_CONTINUOUS,
    AcBounds,
    ClassifyConfig,
    ac_bound,
    binary_formula,
    classify,
    default_budget,
    general_bounds,
    rate_le,
    refine_bounds,
)
from substdim.core import PreconditionError, is_finite_subshift, parse_substitution
from substdim.spectral import (
    AgreementStats,
    CoincidenceCertificate,
    ExhaustionProof,
    FiniteSubshiftError,
    agreement_stats,
    find_coincidence,
    injective_reduction,
)


def stats(length, c, C, k=1):
    return AgreementStats(k=k, length=length, pairwise={}, c=c, C=C)


# --- closed formula ----------------------------------------------------------

@pytest.mark.parametrize("rules, expected", [(PD, 1.0), (F4, 2.0), (B3, 1.0)])
def test_binary_formula(rules, expected):
    b = binary_formula(parse_substitution(rules))
    assert abs(b.exact - expected) <= 1e-12
    assert b.lower == b.upper == b.exact


def test_binary_formula_counts_differences(f4):
    b = binary_formula(f4)
    assert b.provenance["lower"]["differing_positions"] == 2


def test_binary_formula_errors(tm, eq, t3):
    with pytest.raises(PreconditionError):
        binary_formula(tm)  # no coincidence
    with pytest.raises(FiniteSubshiftError):
        binary_formula(eq)
    with pytest.raises(PreconditionError):
        binary_formula(t3)


# --- general estimates -------------------------------------------------------

def test_general_bounds_exact():
    b = general_bounds(stats(2, 1, 1))
    assert b.lower == b.upper == b.exact == 1.0


def test_general_bounds_interval():
    b = general_bounds(stats(4, 1, 2))
    assert b.lower == pytest.approx(2.0, abs=1e-12)
    assert b.upper == pytest.approx(math.log(4) / (math.log(4) - math.log(3)), abs=1e-12)
    assert b.upper == pytest.approx(4.8188, abs=1e-4)
    assert b.exact is None


def test_general_bounds_errors():
    with pytest.raises(PreconditionError):
        general_bounds(stats(4, 0, 2))
    with pytest.raises(PreconditionError):
        general_bounds(stats(4, 1, 4))


def test_acbounds_invariant():
    with pytest.raises(ValueError):
        AcBounds(2.0, 1.0)


def test_rate_comparison_is_exact():
    # log(3)/1 vs log(9)/2 are equal; float division may say otherwise
    assert rate_le(3, 1, 9, 2) and rate_le(9, 2, 3, 1)
    assert not rate_le(4, 1, 3, 1)


def test_default_budget():
    assert default_budget(2) == 48
    assert default_budget(4) == 24
    assert 3 ** default_budget(3) <= 2 ** 48 < 3 ** (default_budget(3) + 1)


# --- refinement --------------------------------------------------------------

def test_refine_pd_stays_exact(pd):
    b = refine_bounds(pd, 1, 8)
    assert b.exact == 1.0
    for row in b.provenance["history"]:
        assert row["c"] == row["C"] == 2 ** row["power"] - 1


def test_refine_f4_exact_at_first_power(f4):
    b = refine_bounds(f4, 1, 6)
    assert b.exact == pytest.approx(2.0, abs=1e-12)
    assert b.provenance["history"][0]["c"] == b.provenance["history"][0]["C"] == 2


def test_refine_t3_interval_shrinks(t3):
    b = refine_bounds(t3, 2, 8)
    hist = b.provenance["history"]
    assert [row["power"] for row in hist] == [2, 4, 6, 8]
    assert all(1 <= row["lower"] <= row["upper"] for row in hist)
    assert b.lower == max(row["lower"] for row in hist)
    assert b.upper == min(row["upper"] for row in hist)


def test_refine_budget_below_order(t3):
    with pytest.raises(ValueError):
        refine_bounds(t3, 2, 1)


@settings(max_examples=40, deadline=None)
@given(substitutions(max_size=4, max_length=3))
def test_refinement_monotone_along_multiples(theta):
    assume(not is_finite_subshift(theta).finite)
    try:
        reduced, _ = injective_reduction(theta)
    except FiniteSubshiftError:
        return
    cert = find_coincidence(reduced)
    assume(isinstance(cert, CoincidenceCertificate))
    k = cert.order
    base = agreement_stats(reduced, k)
    for m in (2, 3):
        if reduced.length ** (m * k) > 10 ** 6:
            break
        s = agreement_stats(reduced, m * k)
        # lower(mk) >= lower(k) and upper(mk) <= upper(k), decided on integers
        assert rate_le(base.length - base.C, k, s.length - s.C, m * k)
        assert rate_le(s.length - s.c, m * k, base.length - base.c, k)


def test_consecutive_powers_can_worsen_the_lower_bound():
    theta = parse_substitution("a -> aab ; b -> aac ; c -> aba")
    s3, s4 = agreement_stats(theta, 3), agreement_stats(theta, 4)
    assert (s3.length - s3.C, s4.length - s4.C) == (3, 4)
    assert general_bounds(s4).lower < general_bounds(s3).lower
    b = refine_bounds(theta, 1, 6)
    assert b.lower == max(row["lower"] for row in b.provenance["history"])


@settings(max_examples=30, deadline=None)
@given(substitutions(max_size=3, max_length=3), st.integers(1, 4))
def test_refine_never_worsens_with_budget(theta, extra):
    assume(not is_finite_subshift(theta).finite)
    try:
        reduced, _ = injective_reduction(theta)
    except FiniteSubshiftError:
        return
    cert = find_coincidence(reduced)
    assume(isinstance(cert, CoincidenceCertificate))
    small = refine_bounds(reduced, cert.order, cert.order)
    big = refine_bounds(reduced, cert.order, cert.order * (1 + extra))
    assert big.lower >= small.lower and big.upper <= small.upper


# --- classification ----------------------------------------------------------

def test_classify_pd(pd):
    r = classify(pd)
    assert r.verdict == DISCRETE and r.bounds.exact == 1.0
    assert r.trace["route"] == "binary"
    assert r.trace["assumptions"]


def test_classify_tm(tm):
    r = classify(tm)
    assert r.verdict == PARTLY_CONTINUOUS and r.bounds.exact == math.inf
    assert isinstance(r.certificates["no_coincidence"], ExhaustionProof)


def test_classify_eq(eq):
    r = classify(eq)
    assert r.verdict == FINITE and r.bounds.exact == 0.0
    assert r.certificates["periodicity"]["period"] == 2


def test_classify_t3_general_route(t3):
    r = classify(t3, ClassifyConfig(budget=8))
    assert r.verdict == DISCRETE and r.trace["route"] == "general"
    assert r.certificates["coincidence"].order == 2
    assert 1 <= r.bounds.lower <= r.bounds.upper < math.inf


def test_classify_height_two():
    r = classify(parse_substitution(H2))
    assert r.trace["height"]["h"] == 2
    assert r.trace["pure_base"]["size"] == 2
    assert r.verdict == DISCRETE


def test_classify_rejects_non_primitive():
    with pytest.raises(PreconditionError):
        classify(parse_substitution("0 -> 01 ; 1 -> 11"))


@pytest.mark.parametrize("rules", [PD, TM, EQ, F4, T3, B3, H2])
@pytest.mark.parametrize("k", [2, 3])
def test_verdict_invariant_under_powers(rules, k):
    theta = parse_substitution(rules)
    a, b = classify(theta, ClassifyConfig(budget=12)), classify(theta.power(k), ClassifyConfig(budget=12 // k))
    assert a.verdict == b.verdict
    if a.bounds.exact is not None and b.bounds.exact is not None:
        assert a.bounds.exact == pytest.approx(b.bounds.exact, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(substitutions(max_size=3, max_length=3))
def test_discrete_bounds_are_finite_and_at_least_one(theta):
    r = classify(theta, ClassifyConfig(budget=8))
    if r.verdict == DISCRETE:
        assert 1.0 - 1e-12 <= r.bounds.lower <= r.bounds.upper < math.inf
    elif r.verdict == FINITE:
        assert r.bounds.upper == 0.0
    else:
        assert r.bounds.lower == math.inf


def test_ac_bound_infinite_without_agreement():
    assert ac_bound(4, 0) == math.inf
    assert ac_bound(4, 2) == pytest.approx(2.0)
    assert Fraction(1) <= Fraction(ac_bound(2, 1)).limit_denominator(10)
