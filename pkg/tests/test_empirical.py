import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import H2, T3
from substdim.bounds import ClassifyConfig, classify
from substdim.core import parse_substitution
from substdim.empirical import (
    DegenerateFit,
    EmpiricalConfig,
    SeparationTable,
    d_B_estimate,
    d_delta_estimate,
    default_nu_grid,
    distances_csv,
    empirical_ac,
    fit_loglog,
    ifs_checks,
    neighbourhood_radius,
    offset_base,
    pairwise_d1,
    sample_orbit,
    sep_table,
    van_der_corput,
)


def windows(n, seed, size=2):
    rng = np.random.default_rng(seed)
    return rng.integers(0, size, 2 * n)


# --- estimators --------------------------------------------------------------

def test_identical_windows():
    x = windows(100, 0)
    assert d_delta_estimate(x, x).value == 0.0
    assert d_B_estimate(x, x) == 0.0


def test_opposite_constant_windows():
    x, y = np.zeros(200, dtype=int), np.ones(200, dtype=int)
    assert d_delta_estimate(x, y).value == 1.0
    assert d_B_estimate(x, y) == 1.0


def test_d1_counts_forward_half_only():
    x = np.zeros(8, dtype=int)
    y = x.copy()
    y[:4] = 1  # backward half only
    assert d_delta_estimate(x, y).value == 0.0
    y[5] = 1
    assert d_delta_estimate(x, y).value == 0.25


def test_mismatched_radii():
    with pytest.raises(ValueError):
        d_delta_estimate(np.zeros(8), np.zeros(10))
    with pytest.raises(ValueError):
        d_B_estimate(np.zeros(8), np.zeros(10))


def test_neighbourhood_radius():
    assert neighbourhood_radius(1.0) == 0
    assert neighbourhood_radius(0.5) == 1
    assert neighbourhood_radius(0.3) == 1
    assert neighbourhood_radius(0.25) == 2


def test_small_delta_drops_edge_positions():
    n = 16
    x = np.zeros(2 * n, dtype=int)
    y = x.copy()
    y[2 * n - 1] = 1  # last symbol only
    est = d_delta_estimate(x, y, 0.5)
    # centres n .. 2n-2 keep their radius-1 neighbourhood inside the window
    assert est.value == pytest.approx(1 / (n - 1))


def test_dB_single_disagreement():
    n = 4
    x = np.zeros(2 * n, dtype=int)
    y = x.copy()
    y[n] = 1
    # distances to the disagreement at k = 0..3 are 0, 1, 2, 3
    assert d_B_estimate(x, y) == pytest.approx((1 + 0.5 + 0.25 + 0.125) / 4)


@settings(max_examples=50, deadline=None)
@given(st.integers(8, 200), st.integers(0, 10 ** 6), st.sampled_from([1.0, 0.5, 0.25]))
def test_pseudometric_at_finite_n(n, seed, delta):
    x, y, z = windows(n, seed), windows(n, seed + 1), windows(n, seed + 2)
    dxy = d_delta_estimate(x, y, delta).value
    assert dxy == d_delta_estimate(y, x, delta).value
    assert 0.0 <= dxy <= 1.0
    tol = 2 * (2 / n)
    assert dxy <= d_delta_estimate(x, z, delta).value + d_delta_estimate(z, y, delta).value + tol


@settings(max_examples=50, deadline=None)
@given(st.integers(8, 200), st.integers(0, 10 ** 6), st.sampled_from([1.0, 0.5, 0.25]))
def test_delta_times_density_below_dB(n, seed, delta):
    x, y = windows(n, seed), windows(n, seed + 7)
    assert delta * d_delta_estimate(x, y, delta).value <= d_B_estimate(x, y) + 2 / n


def test_limsup_proxy_at_least_average():
    x, y = windows(4096, 3), windows(4096, 4)
    est = d_delta_estimate(x, y)
    assert est.limsup_proxy >= est.value


def test_pairwise_d1_matches_direct():
    rng = np.random.default_rng(5)
    fw = rng.integers(0, 3, (7, 300))
    mat = pairwise_d1(fw, 3, chunk=64)
    for i in range(7):
        for j in range(7):
            assert mat[i, j] == pytest.approx(np.mean(fw[i] != fw[j]), abs=1e-12)


# --- sampling ----------------------------------------------------------------

def test_van_der_corput():
    assert [van_der_corput(i) for i in range(4)] == [0.0, 0.5, 0.25, 0.75]
    assert van_der_corput(1, 3) == pytest.approx(1 / 3)


def test_offset_base_avoids_length_primes():
    assert offset_base(2) == 3 and offset_base(4) == 3
    assert offset_base(3) == 2 and offset_base(6) == 5


def test_sample_eq_flagged(eq):
    s = sample_orbit(eq, 10, 256)
    assert len(s) == 2 and s.exhausted


def test_sample_pd_distinct_points(pd):
    s = sample_orbit(pd, 256, 1 << 16)
    assert len(s) == 256 and not s.exhausted
    d = pairwise_d1(s.forward, 2)
    assert (d[np.triu_indices(256, 1)] > 0).all()


def test_sample_tm(tm):
    s = sample_orbit(tm, 64, 1 << 12)
    assert len(s) == 64
    assert s.points.shape == (64, 1 << 13)


def test_sample_windows_are_orbit_factors(t3):
    s = sample_orbit(t3, 16, 512)
    for t, w in zip(s.offsets, s.points):
        assert np.array_equal(s.window(t), w)
    shifted = s.window(s.offsets[0] + 1)
    assert np.array_equal(shifted[:-1], s.points[0][1:])


# --- separation and fit ------------------------------------------------------

def test_default_grid():
    g = default_nu_grid()
    assert len(g) == 17  # 0.5 * 2^(-i/2), i = 0..16
    assert g[0] == 0.5 and g[-1] == pytest.approx(2 ** -9)
    assert all(b < a for a, b in zip(g, g[1:]))


def test_sep_table_monotone_and_bounded(pd):
    s = sample_orbit(pd, 128, 1 << 14)
    table = sep_table(s, 1.0, (1.0, *default_nu_grid()))
    assert table.counts[0] <= 2
    assert all(a <= b for a, b in zip(table.counts, table.counts[1:]))
    assert all(c >= 1 for c in table.counts)
    assert table.counts[-1] <= len(s)


def test_sep_table_small_nu_reaches_sample(pd):
    s = sample_orbit(pd, 64, 1 << 14)
    table = sep_table(s, 1.0, (0.5, 0.01, 1e-6))
    assert table.counts[-1] == 64


def test_sep_table_finite_subshift(eq):
    s = sample_orbit(eq, 10, 1024)
    assert max(sep_table(s).counts) <= 2


def test_sep_table_rejects_bad_grid(pd):
    s = sample_orbit(pd, 4, 64)
    with pytest.raises(ValueError):
        sep_table(s, 1.0, (0.1, 0.2))


def test_sep_table_csv(pd):
    s = sample_orbit(pd, 16, 1024)
    rows = list(csv.reader(io.StringIO(sep_table(s).to_csv())))
    assert rows[0] == ["nu", "count"]
    assert len(rows) == 1 + len(default_nu_grid())


def test_distances_csv(pd):
    s = sample_orbit(pd, 4, 256)
    rows = list(csv.reader(io.StringIO(distances_csv(s, [(0, 1), (2, 3)]))))
    assert rows[0] == ["pair_i", "pair_j", "d1", "dB"]
    assert float(rows[1][2]) <= 1.0


def test_fit_recovers_known_slope():
    grid = default_nu_grid()
    counts = tuple(max(1, min(512, round(0.25 * nu ** -1.5))) for nu in grid)
    slope, _, r2, _ = fit_loglog(SeparationTable(1.0, grid, counts), 512, 0.5)
    assert slope == pytest.approx(1.5, abs=0.1) and r2 > 0.95


def test_fit_degenerate():
    grid = default_nu_grid()
    with pytest.raises(DegenerateFit):
        fit_loglog(SeparationTable(1.0, grid, tuple(512 for _ in grid)), 512, 0.5)


def test_empirical_finite_slope_zero(eq):
    fit = empirical_ac(eq, EmpiricalConfig(window=4096, samples=32))
    assert fit.slope == 0.0


def test_empirical_tm_saturates(tm):
    with pytest.raises(DegenerateFit):
        empirical_ac(tm, EmpiricalConfig(window=4096, samples=128))


def test_empirical_t3_inside_rigorous_bounds(t3):
    bounds = classify(t3, ClassifyConfig(budget=24)).bounds
    fit = empirical_ac(t3, EmpiricalConfig(window=1 << 14, samples=512))
    assert bounds.lower - 0.5 <= fit.slope <= bounds.upper + 0.5


# --- IFS structure -----------------------------------------------------------

def test_ifs_pd(pd):
    rep = ifs_checks(pd, sample_orbit(pd, 64, 4096))
    assert not rep["degenerate"]
    assert rep["contraction"]["ok"]
    assert rep["contraction"]["lower_rate"] == rep["contraction"]["upper_rate"] == 0.5
    assert rep["contraction"]["ratio_range"] == [0.5, 0.5]
    assert rep["ssc"]["gap"] > 0 and rep["ssc"]["ok"]
    assert rep["attractor"]["ok"]


def test_ifs_eq_degenerate(eq):
    rep = ifs_checks(eq, sample_orbit(eq, 8, 256))
    assert rep["degenerate"]


@pytest.mark.parametrize("rules", [T3, H2])
def test_ifs_sandwich_three_letters(rules):
    theta = parse_substitution(rules)
    rep = ifs_checks(theta, sample_orbit(theta, 64, 4096))
    assert rep["contraction"]["ok"]
    lo, hi = rep["contraction"]["ratio_range"]
    assert rep["contraction"]["lower_rate"] - 1e-9 <= lo <= hi <= rep["contraction"]["upper_rate"] + 1e-9
