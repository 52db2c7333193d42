"""Pinned-value and envelope tests for the log-space tail computations.

Expected values in oracle_values.py come from the mpmath brute-force
references in oracles.py; see make_oracle_values.py.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle_values as ov
import oracles
from poisdetect import tails

GRID_MEANS = (1, 2, 5, 15, 50, 200)


def grid_counts(lam):
    return range(0, int(lam + 20 * math.sqrt(lam)) + 1)


# --- pmf -------------------------------------------------------------------


def test_log_pmf_pinned():
    for (lam, x), expected in ov.LOG_PMF.items():
        assert tails.log_pmf(lam, x) == pytest.approx(expected, rel=1e-13)


def test_log_pmf_exact_at_zero():
    assert tails.log_pmf(1.0, 0) == -1.0
    assert tails.log_pmf(15.0, 0) == -15.0


@settings(max_examples=60, deadline=None)
@given(
    lam=st.floats(min_value=0.01, max_value=1e4),
    x=st.integers(min_value=0, max_value=5000),
)
def test_log_pmf_matches_live_oracle(lam, x):
    got = tails.log_pmf(lam, x)
    want = float(oracles.log_pmf(lam, x))
    assert got == pytest.approx(want, rel=1e-13, abs=1e-13)


def test_log_pmf_input_checks():
    with pytest.raises(ValueError):
        tails.log_pmf(0.0, 1)
    with pytest.raises(ValueError):
        tails.log_pmf(-2.0, 1)
    with pytest.raises(ValueError):
        tails.log_pmf(2.0, 1.5)
    assert tails.log_pmf(2.0, -1) == -math.inf
    # integral floats are accepted
    assert tails.log_pmf(2.0, 2.0) == tails.log_pmf(2.0, 2)


# --- survival functions ----------------------------------------------------


def test_survival_upper_pinned():
    for (lam, x), expected in ov.LOG_SURVIVAL_UPPER.items():
        assert tails.survival_upper(lam, x) == pytest.approx(expected, abs=1e-10)


def test_survival_lower_pinned():
    for (lam, x), expected in ov.LOG_SURVIVAL_LOWER.items():
        assert tails.survival_lower(lam, x) == pytest.approx(expected, abs=1e-10)


def test_survival_edge_cases():
    assert tails.survival_upper(1.0, 0) == 0.0
    assert tails.survival_lower(1.0, 10**6) == 0.0
    assert tails.survival_lower(1.0, 0) == pytest.approx(-1.0, rel=1e-13)
    assert tails.survival_lower(1.0, -1) == -math.inf


def test_survival_complement_identity():
    # P(X >= x) + P(X <= x-1) = 1
    for lam in GRID_MEANS:
        for x in grid_counts(lam):
            total = math.exp(tails.survival_upper(lam, x)) + math.exp(
                tails.survival_lower(lam, x - 1)
            )
            assert total == pytest.approx(1.0, abs=1e-12), (lam, x)


def test_survival_monotone_in_x_and_lam():
    for lam in GRID_MEANS:
        vals = [tails.survival_upper(lam, x) for x in grid_counts(lam)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
    for x in (0, 1, 3, 10, 40):
        vals = [tails.survival_upper(lam, x) for lam in GRID_MEANS]
        assert all(a <= b for a, b in zip(vals, vals[1:])), x


# --- two-sided tail (strict) and p-values (non-strict) ---------------------


def test_two_sided_tail_pinned():
    for (lam, z), expected in ov.TWO_SIDED_TAIL.items():
        assert tails.two_sided_tail(lam, z) == pytest.approx(expected, rel=1e-10)


def test_two_sided_tail_strictness():
    # |X - 1| > 1 and |X - 1| >= 2 are the same event for integer counts
    assert tails.two_sided_tail(1, 1.0) == pytest.approx(
        ov.TWO_SIDED_PVALUE[(1, 3)], rel=1e-12
    )
    # at z = 0 only the observed mean itself is excluded
    assert tails.two_sided_tail(2, 0.0) == pytest.approx(
        1.0 - math.exp(tails.log_pmf(2, 2)), rel=1e-12
    )


def test_two_sided_tail_vanishes_beyond_support():
    assert tails.two_sided_tail(2, 1e6) == 0.0
    with pytest.raises(ValueError):
        tails.two_sided_tail(2, -0.5)


def test_two_sided_pvalue_pinned():
    for (lam, x), expected in ov.TWO_SIDED_PVALUE.items():
        assert tails.two_sided_pvalue(lam, x) == pytest.approx(expected, rel=1e-10)


def test_two_sided_pvalue_is_one_at_the_mean():
    assert tails.two_sided_pvalue(5, 5) == 1.0
    assert tails.log_two_sided_pvalue(5, 5) == 0.0


def test_two_sided_pvalue_maximal_at_mean():
    for lam in (2, 15):
        at_mean = tails.two_sided_pvalue(lam, lam)
        for x in grid_counts(lam):
            assert tails.two_sided_pvalue(lam, x) <= at_mean + 1e-15


def test_one_sided_pvalue_pinned():
    for (lam, x), expected in ov.ONE_SIDED_PVALUE.items():
        assert tails.one_sided_pvalue(lam, x) == pytest.approx(expected, rel=1e-10)
    assert tails.one_sided_pvalue(1, 0) == 1.0


# --- null CDF of the p-value ----------------------------------------------


def test_pvalue_null_cdf_pinned():
    for (lam, t), expected in ov.PVALUE_NULL_CDF.items():
        assert tails.pvalue_null_cdf(lam, t) == pytest.approx(expected, rel=1e-10)


def test_pvalue_null_cdf_super_uniform():
    ts = [0.001, 0.01] + [k / 20 for k in range(1, 20)] + [0.999]
    for lam in GRID_MEANS:
        for t in ts:
            assert tails.pvalue_null_cdf(lam, t) <= t + 1e-12, (lam, t)


def test_pvalue_null_cdf_edges():
    assert tails.pvalue_null_cdf(7, 0.0) == 0.0
    assert tails.pvalue_null_cdf(7, 1.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        tails.pvalue_null_cdf(7, 1.5)
    with pytest.raises(ValueError):
        tails.pvalue_null_cdf(7, -0.1)


def test_pvalue_support_matches_direct_evaluation():
    for lam in (1, 4, 15):
        xs, logg, logpmf = tails.pvalue_support(lam)
        assert xs[0] == 0 and xs[-1] == tails.support_cap(lam)
        for x in xs[:: max(1, len(xs) // 40)]:
            direct = tails.log_two_sided_pvalue(lam, int(x))
            assert logg[x] == pytest.approx(direct, abs=1e-12), (lam, x)
        assert np.all(np.exp(logpmf) > 0)


def test_support_cap_mass_rule():
    for lam in (1, 15, 200):
        cap = tails.support_cap(lam)
        assert math.exp(tails.survival_upper(lam, cap + 1)) < tails.SUPPORT_TAIL_MASS
        assert math.exp(tails.survival_upper(lam, cap)) >= tails.SUPPORT_TAIL_MASS


# --- analytic envelopes ----------------------------------------------------


def test_h_rate_values():
    assert tails.h_rate(1.0) == 0.0
    assert tails.h_rate(0.0) == 1.0
    assert tails.h_rate(math.e) == pytest.approx(1.0, rel=1e-12)
    assert tails.h_rate(2.0) == pytest.approx(2 * math.log(2) - 1, rel=1e-12)
    with pytest.raises(ValueError):
        tails.h_rate(-0.1)


def test_chernoff_upper_tail_pinned():
    lower, upper = tails.chernoff_upper_tail_bounds(4, 4)
    assert upper == 0.0
    assert lower <= tails.survival_upper(4, 4)

    lower, upper = tails.chernoff_upper_tail_bounds(4, 8)
    assert upper == pytest.approx(-4 * (2 * math.log(2) - 1), rel=1e-12)
    exact = ov.LOG_SURVIVAL_UPPER[(4, 8)]
    assert lower < exact < upper


def test_chernoff_lower_tail_floor_zero():
    # floor(x) = 0 degenerates the bound; P(X <= x) = pmf(0) exactly there
    lower, upper = tails.chernoff_lower_tail_bounds(5, 0.3)
    assert lower == -5.0
    exact = tails.survival_lower(5, 0)
    assert lower <= exact <= upper


def test_chernoff_envelope_on_grid():
    for lam in GRID_MEANS:
        for x in grid_counts(lam):
            if x >= lam:
                lower, upper = tails.chernoff_upper_tail_bounds(lam, x)
                exact = tails.survival_upper(lam, x)
            else:
                lower, upper = tails.chernoff_lower_tail_bounds(lam, x)
                exact = tails.survival_lower(lam, x)
            assert lower <= exact + 1e-12, (lam, x)
            assert exact <= upper + 1e-12, (lam, x)


def test_chernoff_domain_errors():
    with pytest.raises(ValueError):
        tails.chernoff_upper_tail_bounds(4, 3)
    with pytest.raises(ValueError):
        tails.chernoff_lower_tail_bounds(4, 5)


def test_bohman_pinned():
    assert tails.bohman_lower_bound(9, 9) == pytest.approx(0.5, rel=1e-14)
    exact = math.exp(tails.survival_upper(9, 9))
    assert exact == pytest.approx(
        math.exp(ov.LOG_SURVIVAL_UPPER[(9, 9)]), rel=1e-10
    )
    assert exact >= 0.5
    assert tails.bohman_lower_bound(1, 0) == pytest.approx(0.8413447460685429, rel=1e-12)


def test_bohman_bound_on_grid():
    for lam in (1, 5, 15, 50):
        for x in range(0, 3 * lam + 1):
            bound = tails.bohman_lower_bound(lam, x)
            assert bound <= math.exp(tails.survival_upper(lam, x)) + 1e-14, (lam, x)


def test_berry_esseen_gap_pinned():
    for lam, expected in ov.BERRY_GAP.items():
        assert tails.berry_esseen_gap(lam) == pytest.approx(expected, rel=1e-9)
    assert tails.berry_esseen_gap(1) * 1.0 <= 0.8
    assert tails.berry_esseen_gap(100) <= 0.08


def test_berry_esseen_gap_shrinks():
    g1 = tails.berry_esseen_gap(1)
    g2 = tails.berry_esseen_gap(100)
    g3 = tails.berry_esseen_gap(10**4)
    assert g3 < g2 < g1


def test_berry_esseen_envelope_on_grid():
    for lam in GRID_MEANS:
        assert tails.berry_esseen_gap(lam) * math.sqrt(lam) <= 0.8


def test_moderate_deviation_ratios():
    ratios = {}
    for lam, expected in ov.MODERATE_RATIO.items():
        x0 = lam + lam**0.75
        ratios[lam] = tails.survival_upper(lam, math.ceil(x0)) / math.sqrt(lam)
        assert ratios[lam] == pytest.approx(expected, abs=1e-8)
    gaps = [abs(ratios[lam] + 0.5) for lam in sorted(ratios)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.15
