"""Distribution primitives against closed forms and brute-force oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ctdw import dwcore as dw


def support_grid(m_star, alpha, c, tail=1e-12):
    """Integer support out to the point where the analytic tail mass < tail."""
    hi = int(dw._tdw_quantile_core(1.0 - tail, m_star, alpha, c)) + 2
    return np.arange(c, hi + 1)


def moment_oracle(k, m_star, alpha, c):
    """Brute-force sum of y**k pmf(y), extended until the tail is negligible."""
    total = 0.0
    lo = c
    hi = int(dw._tdw_quantile_core(1.0 - 1e-9, m_star, alpha, c)) + 8
    for _ in range(60):
        y = np.arange(lo, hi + 1, dtype=float)
        total += float(np.sum(y**k * np.exp(dw.tdw_log_pmf(y, m_star, alpha, c))))
        sf = float(np.exp(dw._tdw_log_sf(hi, m_star, alpha, c)))
        if 2.0 * (2.0 * hi) ** k * sf < 1e-13 * total:
            return total
        lo, hi = hi + 1, hi * 2
    raise RuntimeError("oracle did not converge")


@st.composite
def tdw_params(draw):
    c = draw(st.sampled_from([0, 1, 2, 7]))
    alpha = draw(st.floats(0.3, 2.0))
    gap = draw(st.floats(0.15, 30.0))
    return c + gap, alpha, c


@st.composite
def ctdw_params(draw):
    c = draw(st.sampled_from([0, 1, 2, 7]))
    alpha = draw(st.floats(0.3, 1.2))
    gap = draw(st.floats(0.15, 30.0))
    # keep eta * alpha moderate so the heavy component's support stays summable
    eta = draw(st.floats(1.05, min(10.0, 2.5 / alpha)))
    delta = draw(st.floats(0.02, 0.98))
    return c + gap, alpha, eta, delta, c


# ---------------------------------------------------------------------------
# q parameterization
# ---------------------------------------------------------------------------


class TestMedianToQ:
    def test_unit_denominator_cases(self):
        assert dw.median_to_q(1, 1.0, 0) == pytest.approx(0.5, abs=1e-15)
        assert dw.median_to_q(2, 1.0, 1) == pytest.approx(0.5, abs=1e-15)

    def test_half_alpha_case(self):
        # denominator 3**2 - 1**2 = 8
        assert dw.median_to_q(3, 0.5, 1) == pytest.approx(0.5 ** (1 / 8), rel=1e-14)

    def test_median_consistency_oracle(self):
        # the implied q must put the summed mass through 0.5 at ceil(m*-1);
        # integer m* sits exactly on the boundary, hence the 1e-12 slack
        for m_star, alpha, c in [(3, 0.5, 1), (5.7, 1.3, 0), (9.2, 0.8, 2)]:
            med = math.ceil(m_star - 1.0)
            grid = np.arange(c, med + 1)
            csum = np.cumsum(np.exp(dw.tdw_log_pmf(grid, m_star, alpha, c)))
            assert csum[-1] >= 0.5 - 1e-12
            if med > c:
                assert csum[-2] < 0.5

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            dw.median_to_q(1.0, 1.0, 1)
        with pytest.raises(ValueError):
            dw.median_to_q(2.0, -1.0, 1)


# ---------------------------------------------------------------------------
# pmf / cdf / quantile
# ---------------------------------------------------------------------------


class TestTdwPmf:
    def test_geometric_point(self):
        assert dw.tdw_log_pmf(0, 1, 1.0, 0) == pytest.approx(math.log(0.5), rel=1e-14)

    def test_truncated_geometric_point(self):
        assert dw.tdw_log_pmf(1, 2, 1.0, 1) == pytest.approx(math.log(0.5), rel=1e-14)

    def test_formula_point_vs_cumulative_difference(self):
        q = 0.5**0.125
        expected = math.log(q**3 - q**8)
        assert dw.tdw_log_pmf(2, 3, 0.5, 1) == pytest.approx(expected, rel=1e-12)
        diff = dw.tdw_cdf(2, 3, 0.5, 1) - dw.tdw_cdf(1, 3, 0.5, 1)
        assert math.exp(expected) == pytest.approx(diff, rel=1e-10)

    def test_below_support_raises(self):
        with pytest.raises(ValueError):
            dw.tdw_log_pmf(0, 3, 0.5, 1)

    def test_log_pmf_is_nonpositive(self):
        y = support_grid(6.3, 1.4, 1)
        assert np.all(dw.tdw_log_pmf(y, 6.3, 1.4, 1) <= 0.0)

    def test_far_tail_stays_finite_in_log_space(self):
        val = dw.tdw_log_pmf(4000, 2.5, 1.0, 1)
        assert val < -1000
        assert np.isfinite(val)


class TestTdwCdf:
    def test_median_level_at_integer_m_star(self):
        assert dw.tdw_cdf(1, 2, 1.0, 1) == pytest.approx(0.5, abs=1e-12)

    def test_cdf_at_c_equals_pmf(self):
        for m_star, alpha, c in [(2.7, 0.9, 1), (4.1, 1.0, 0), (11.0, 1.7, 3)]:
            assert dw.tdw_cdf(c, m_star, alpha, c) == pytest.approx(
                float(dw.tdw_pmf(c, m_star, alpha, c)), rel=1e-12
            )

    def test_point_value_vs_summation_oracle(self):
        assert dw.tdw_cdf(10, 3, 0.5, 1) == pytest.approx(1 - 0.5**15, rel=1e-13)
        y = np.arange(1, 11)
        assert dw.tdw_cdf(10, 3, 0.5, 1) == pytest.approx(
            float(np.exp(dw.tdw_log_pmf(y, 3, 0.5, 1)).sum()), rel=1e-10
        )

    def test_monotone_to_one(self):
        y = support_grid(8.0, 1.2, 2)
        cdf = dw.tdw_cdf(y, 8.0, 1.2, 2)
        assert np.all(np.diff(cdf) >= 0)
        assert cdf[-1] > 1 - 1e-11


class TestTdwQuantile:
    def test_median(self):
        assert dw.tdw_quantile(0.5, 2, 1.0, 1) == 1
        assert dw.tdw_quantile(0.5, 7.2, 0.7, 1) == math.ceil(7.2 - 1)

    def test_just_below_median_level(self):
        assert dw.tdw_quantile(0.4999999, 2, 1.0, 1) == 1

    def test_upper_level_vs_scan_oracle(self):
        u, m_star, alpha, c = 0.99, 3.0, 0.5, 1
        got = int(dw.tdw_quantile(u, m_star, alpha, c))
        y = c
        while dw.tdw_cdf(y, m_star, alpha, c) < u:
            y += 1
        assert got == y == 7

    def test_domain(self):
        with pytest.raises(ValueError):
            dw.tdw_quantile(0.0, 2, 1.0, 1)
        with pytest.raises(ValueError):
            dw.tdw_quantile(1.0, 2, 1.0, 1)


class TestTdwSampling:
    def test_deterministic_replay(self):
        a = dw.tdw_sample(3.3, 0.8, 1, 1000, np.random.default_rng(np.random.Philox(key=5)))
        b = dw.tdw_sample(3.3, 0.8, 1, 1000, np.random.default_rng(np.random.Philox(key=5)))
        assert np.array_equal(a, b)

    def test_mass_at_median_within_three_standard_errors(self):
        rng = np.random.default_rng(np.random.Philox(key=11))
        s = dw.tdw_sample(2, 1.0, 1, 10**6, rng)
        se = math.sqrt(0.25 / 10**6)
        assert abs((s == 1).mean() - 0.5) < 3 * se

    def test_empirical_median(self):
        rng = np.random.default_rng(np.random.Philox(key=12))
        s = dw.tdw_sample(2.5, 0.8, 1, 10**6, rng)
        assert np.median(s) == math.ceil(2.5 - 1)


# ---------------------------------------------------------------------------
# contaminated mixture
# ---------------------------------------------------------------------------


class TestCtdw:
    def test_unit_eta_degeneracy(self):
        y = support_grid(4.2, 0.7, 1)
        mix = dw.ctdw_log_pmf(y, 4.2, 0.7, 1.0, 0.3, 1)
        single = dw.tdw_log_pmf(y, 4.2, 0.7, 1)
        np.testing.assert_allclose(mix, single, rtol=1e-12)

    def test_unit_eta_constructor_bypass(self):
        base = dw.TDWParams(4.2, 0.7, 1)
        with pytest.raises(ValueError):
            dw.CTDWParams(base=base, eta=1.0, delta=0.3)
        degen = dw.CTDWParams.degenerate_for_tests(base, delta=0.3)
        np.testing.assert_allclose(degen.log_pmf([1, 2, 5]), base.log_pmf([1, 2, 5]), rtol=1e-12)

    def test_mixture_point_from_component_evaluations(self):
        p1 = float(dw.tdw_pmf(1, 2, 1.0, 1))
        p2 = float(dw.tdw_pmf(1, 2, 2.0, 1))
        expected = math.log(0.5 * p1 + 0.5 * p2)
        assert dw.ctdw_log_pmf(1, 2, 1.0, 2.0, 0.5, 1) == pytest.approx(expected, rel=1e-12)

    def test_mixture_cdf_at_integer_median(self):
        # integer m* puts the shared component cdfs exactly at one half
        for eta, delta in [(2.0, 0.1), (5.0, 0.45), (10.0, 0.49)]:
            assert dw.ctdw_cdf(1, 2, 1.0, eta, delta, 1) == pytest.approx(0.5, abs=1e-12)

    def test_median_preserved_across_contamination(self):
        for eta in (1.5, 4.0, 20.0):
            for delta in (0.05, 0.25, 0.45):
                got = int(dw.ctdw_quantile(0.5, 6.7, 0.6, eta, delta, 1))
                assert got == math.ceil(6.7 - 1)

    def test_upper_tail_cdf_below_single_component(self):
        m_star, alpha, c = 5.4, 0.7, 1
        med = math.ceil(m_star - 1)
        hi = int(dw.tdw_quantile(0.999, m_star, alpha, c))
        y = np.arange(med, max(hi, med + 5))
        mix = dw.ctdw_cdf(y, m_star, alpha, 4.0, 0.4, c)
        single = dw.tdw_cdf(y, m_star, alpha, c)
        assert np.all(mix <= single + 1e-15)
        assert np.any(mix < single - 1e-6)

    def test_heavy_tail_sampling_exceeds_single_component_prediction(self):
        rng = np.random.default_rng(np.random.Philox(key=21))
        m_star, alpha, c = 4.0, 0.6, 1
        cut = int(dw.tdw_quantile(0.99, m_star, alpha, c))
        s = dw.ctdw_sample(m_star, alpha, 10.0, 0.45, c, 10**5, rng)
        tail_single = 1.0 - float(dw.tdw_cdf(cut, m_star, alpha, c))
        assert (s > cut).mean() > 2 * tail_single

    def test_sampling_matches_analytic_cdf(self):
        rng = np.random.default_rng(np.random.Philox(key=22))
        m_star, alpha, eta, delta, c = 3.0, 0.6, 5.0, 0.45, 1
        s = dw.ctdw_sample(m_star, alpha, eta, delta, c, 10**5, rng)
        for y in (1, 2, 5, 12):
            p = float(dw.ctdw_cdf(y, m_star, alpha, eta, delta, c))
            se = math.sqrt(p * (1 - p) / 10**5)
            assert abs((s <= y).mean() - p) < 4 * se


# ---------------------------------------------------------------------------
# moments and kurtosis
# ---------------------------------------------------------------------------


class TestMoments:
    def test_geometric_mean(self):
        assert dw.tdw_raw_moment(1, 1, 1.0, 0) == pytest.approx(1.0, rel=1e-10)

    def test_shifted_geometric_mean(self):
        assert dw.tdw_raw_moment(1, 2, 1.0, 1) == pytest.approx(2.0, rel=1e-10)

    def test_fourth_moment_vs_brute_force(self):
        got = dw.tdw_raw_moment(4, 3, 0.5, 1)
        assert got == pytest.approx(moment_oracle(4, 3, 0.5, 1), rel=1e-10)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    @pytest.mark.parametrize(
        "m_star,alpha,c",
        [(1.8, 0.5, 0), (4.0, 1.0, 1), (9.3, 1.5, 1), (22.0, 0.8, 2), (3.1, 1.2, 0)],
    )
    def test_series_vs_oracle_grid(self, k, m_star, alpha, c):
        got = dw.tdw_raw_moment(k, m_star, alpha, c)
        assert got == pytest.approx(moment_oracle(k, m_star, alpha, c), rel=1e-8)

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            dw.tdw_raw_moment(5, 3, 0.5, 1)


class TestKurtosis:
    def test_geometric_limit(self):
        assert abs(dw.tdw_kurtosis(500, 1.0, 1) - 9.0) < 0.1

    def test_light_tail_plateau_below_nine(self):
        values = [dw.tdw_kurtosis(m, 0.5, 1) for m in (50, 200, 500)]
        assert all(v < 9.0 for v in values)

    def test_heavy_tail_plateau_above_nine(self):
        values = [dw.tdw_kurtosis(m, 1.5, 1) for m in (50, 200, 500)]
        assert all(v > 9.0 for v in values)

    def test_matches_moment_assembly(self):
        m_star, alpha, c = 6.0, 0.8, 1
        m = [moment_oracle(k, m_star, alpha, c) for k in (1, 2, 3, 4)]
        var = m[1] - m[0] ** 2
        fourth = m[3] - 4 * m[0] * m[2] + 6 * m[0] ** 2 * m[1] - 3 * m[0] ** 4
        assert dw.tdw_kurtosis(m_star, alpha, c) == pytest.approx(fourth / var**2, rel=1e-8)


# ---------------------------------------------------------------------------
# truncated negative binomial
# ---------------------------------------------------------------------------


class TestTnb:
    def test_no_truncation_reduces_to_nb(self):
        y = np.arange(0, 40)
        ours = dw.tnb_pmf(y, 3.2, 1.7, 0)
        ref = stats.nbinom.pmf(y, 1.7, 1.7 / (1.7 + 3.2))
        np.testing.assert_allclose(ours, ref, rtol=1e-10)
        assert dw.tnb_truncated_mean(3.2, 1.7, 0) == pytest.approx(3.2, rel=1e-12)

    def test_truncation_at_one_closed_form(self):
        mu, a = 2.0, 1.5
        expected = mu / (1.0 - (a / (a + mu)) ** a)
        assert dw.tnb_truncated_mean(mu, a, 1) == pytest.approx(expected, rel=1e-12)

    def test_truncated_mean_vs_summation_oracle(self):
        mu, a, c = 2.0, 1.5, 3
        y = np.arange(c, 500)
        oracle = float(np.sum(y * dw.tnb_pmf(y, mu, a, c)))
        assert dw.tnb_truncated_mean(mu, a, c) == pytest.approx(oracle, rel=1e-10)

    def test_cdf_pmf_consistency(self):
        mu, a, c = 4.0, 0.8, 2
        y = np.arange(c, 60)
        csum = np.cumsum(dw.tnb_pmf(y, mu, a, c))
        np.testing.assert_allclose(dw.tnb_cdf(y, mu, a, c), csum, atol=1e-12)

    def test_quantile_inversion_and_sampling(self):
        mu, a, c = 5.0, 1.2, 1
        for u in (0.01, 0.3, 0.5, 0.9, 0.999):
            q = int(dw.tnb_quantile(u, mu, a, c))
            assert dw.tnb_cdf(q, mu, a, c) >= u
            assert q == c or dw.tnb_cdf(q - 1, mu, a, c) < u
        rng = np.random.default_rng(np.random.Philox(key=31))
        s = dw.tnb_sample(mu, a, c, 10**5, rng)
        assert s.min() >= c
        assert np.mean(s) == pytest.approx(dw.tnb_truncated_mean(mu, a, c), rel=0.02)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            dw.tnb_log_pmf(0, 2.0, 1.0, 1)
        with pytest.raises(ValueError):
            dw.tnb_log_pmf(1, -2.0, 1.0, 1)


# ---------------------------------------------------------------------------
# property-based invariants
# ---------------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(tdw_params())
def test_property_normalization(params):
    m_star, alpha, c = params
    y = support_grid(m_star, alpha, c)
    total = float(np.exp(dw.tdw_log_pmf(y, m_star, alpha, c)).sum())
    assert abs(total - 1.0) < 1e-9


@settings(max_examples=60, deadline=None)
@given(ctdw_params())
def test_property_mixture_normalization(params):
    m_star, alpha, eta, delta, c = params
    hi = max(
        int(dw._tdw_quantile_core(1 - 1e-12, m_star, alpha, c)),
        int(dw._tdw_quantile_core(1 - 1e-12, m_star, eta * alpha, c)),
    )
    y = np.arange(c, hi + 3)
    total = float(np.exp(dw.ctdw_log_pmf(y, m_star, alpha, eta, delta, c)).sum())
    assert abs(total - 1.0) < 1e-9


@settings(max_examples=60, deadline=None)
@given(tdw_params())
def test_property_cdf_pmf_consistency(params):
    m_star, alpha, c = params
    y = support_grid(m_star, alpha, c, tail=1e-9)
    pmf = np.exp(dw.tdw_log_pmf(y, m_star, alpha, c))
    cdf = dw.tdw_cdf(y, m_star, alpha, c)
    diff = np.diff(cdf)
    np.testing.assert_allclose(diff, pmf[1:], atol=1e-12)
    bulk = pmf[1:] > 1e-3
    if np.any(bulk):
        np.testing.assert_allclose(diff[bulk], pmf[1:][bulk], rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(tdw_params(), st.floats(0.001, 0.999))
def test_property_quantile_inversion(params, u):
    m_star, alpha, c = params
    q = int(dw.tdw_quantile(u, m_star, alpha, c))
    assert dw.tdw_cdf(q, m_star, alpha, c) >= u
    assert q == c or dw.tdw_cdf(q - 1, m_star, alpha, c) < u


@settings(max_examples=60, deadline=None)
@given(ctdw_params())
def test_property_median_preservation(params):
    m_star, alpha, eta, delta, c = params
    got = int(dw.ctdw_quantile(0.5, m_star, alpha, eta, delta, c))
    expected = math.ceil(m_star - 1.0)
    if abs(m_star - round(m_star)) > 1e-9:
        assert got == expected
    else:
        # knife-edge integer medians resolve within probability tolerance
        assert abs(dw.ctdw_cdf(got, m_star, alpha, eta, delta, c) - 0.5) < 1e-9 or got == expected


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 20.0), st.integers(0, 60))
def test_property_geometric_reduction(gap, y):
    pmf = float(dw.tdw_pmf(y, gap, 1.0, 0))
    q = float(dw.median_to_q(gap, 1.0, 0))
    assert pmf == pytest.approx((1 - q) * q**y, rel=1e-12)
