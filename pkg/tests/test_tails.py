import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arccover.tails import (
    TailExhaustedError,
    TailFunction,
    TailMoments,
    cf_estimate,
    karamata_ratio,
    moment_diagnostic,
    parse_tail,
    rv_limit_probe,
    tail_prefix_total,
)

FAMILIES = [
    TailFunction.constant(1),
    TailFunction.constant(2),
    TailFunction.geometric(0.5),
    TailFunction.log_power(0.0),
    TailFunction.log_power(1.0),
    TailFunction.log_power(-0.5),
    TailFunction.pure_power(-0.5),
    TailFunction.slow_log(),
]


def sample_radius_capped(tail, u, cap):
    # scalar oracle; quantiles beyond 2**258 are by definition above any cap here
    try:
        return min(tail.sample_radius(u), cap)
    except OverflowError:
        return cap


class TestEval:
    def test_const_radius_two(self):
        assert TailFunction.constant(2).value(2) == 1.0

    def test_pure_power_sixteen(self):
        assert TailFunction.pure_power(-0.5).value(16) == pytest.approx(0.25, abs=1e-15)

    def test_logpow_zero_is_one_over_r(self):
        assert TailFunction.log_power(0.0).value(10) == pytest.approx(0.1, abs=1e-15)

    def test_normalized_at_one(self):
        for tail in FAMILIES:
            assert tail.value(1) == 1.0

    @pytest.mark.parametrize("tail", FAMILIES, ids=lambda t: t.spec_string)
    def test_non_increasing_to_1e5(self, tail):
        vals = tail.values(np.arange(1, 10**5 + 1))
        assert np.all(np.diff(vals) <= 0.0)
        assert np.all((vals >= 0.0) & (vals <= 1.0))

    @pytest.mark.parametrize("b", [0.5, 1.0, 2.0, 3.0])
    def test_logpow_envelope_matches_running_min(self, b):
        # oracle: the recursive monotone envelope computed directly
        tail = TailFunction.log_power(b)
        upto = 10**4
        raw = np.minimum(np.log(np.arange(2.0, upto + 1)) ** b / np.arange(2.0, upto + 1), 1.0)
        envelope = np.minimum.accumulate(np.concatenate([[1.0], raw]))
        assert np.allclose(tail.values(np.arange(1, upto + 1)), envelope, rtol=0, atol=0)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            TailFunction.geometric(1.0)
        with pytest.raises(ValueError):
            TailFunction.pure_power(-1.5)
        with pytest.raises(ValueError):
            TailFunction.log_power(-2.0)
        with pytest.raises(ValueError):
            TailFunction.constant(0)
        with pytest.raises(ValueError):
            TailFunction.slow_log().value(0)


class TestParse:
    @pytest.mark.parametrize("spec", ["const:2", "geom:0.5", "logpow:1", "pow:-0.5", "slowlog"])
    def test_round_trip(self, spec):
        assert parse_tail(parse_tail(spec).spec_string) == parse_tail(spec)

    def test_case_sensitive(self):
        with pytest.raises(ValueError):
            parse_tail("Geom:0.5")
        with pytest.raises(ValueError):
            parse_tail("slowLog")


class TestSampling:
    def test_pure_power_quarter(self):
        # oracle by enumeration around the quantile
        f = TailFunction.pure_power(-0.5)
        assert f.value(15) >= 0.25 and f.value(16) >= 0.25 and f.value(17) < 0.25
        assert f.sample_radius(0.25) == 16

    def test_u_one_gives_one(self):
        assert TailFunction.geometric(0.5).sample_radius(1.0) == 1
        assert TailFunction.slow_log().sample_radius(1.0) == 1

    def test_const_one_always_one(self):
        f = TailFunction.constant(1)
        for u in (1e-9, 0.3, 1.0):
            assert f.sample_radius(u) == 1

    @pytest.mark.parametrize("tail", FAMILIES, ids=lambda t: t.spec_string)
    def test_vector_matches_scalar(self, tail):
        rng = np.random.default_rng(915)
        u = 1.0 - rng.random(400)
        cap = 2**40
        got = tail.sample_radii(u, cap=cap)
        want = np.array([sample_radius_capped(tail, float(x), cap) for x in u])
        assert np.array_equal(got, want)

    @given(st.floats(min_value=1e-6, max_value=1.0, exclude_min=False))
    @settings(max_examples=60, deadline=None)
    def test_inverse_transform_identity(self, u):
        # R >= r iff f(r) >= u, by construction
        f = TailFunction.geometric(0.3)
        r = f.sample_radius(u)
        assert f.value(r) >= u
        assert f.value(r + 1) < u

    @pytest.mark.slow
    @pytest.mark.parametrize("tail", FAMILIES, ids=lambda t: t.spec_string)
    def test_empirical_frequency(self, tail):
        m = 10**5
        rng = np.random.default_rng(99173)
        u = 1.0 - rng.random(m)
        radii = tail.sample_radii(u, cap=2**40)
        for r in (1, 2, 5, 10, 100):
            p = tail.value(r)
            freq = np.count_nonzero(radii >= r) / m
            sd = math.sqrt(max(p * (1 - p), 1e-12) / m)
            assert abs(freq - p) <= 4 * sd + 1e-12, (tail.spec_string, r, freq, p)


class TestMoments:
    def test_const_one_prefix(self):
        m = TailMoments(TailFunction.constant(1), 100)
        assert m.prefix_sum(1) == 1.0
        assert m.prefix_sum(77) == 1.0

    def test_const_two_prefix(self):
        assert TailMoments(TailFunction.constant(2), 10).prefix_sum(5) == 2.0

    def test_harmonic_prefix(self):
        # oracle: fsum of the harmonic series
        m = TailMoments(TailFunction.log_power(0.0), 10)
        assert m.prefix_sum(4) == pytest.approx(math.fsum(1.0 / k for k in (1, 2, 3, 4)), rel=1e-15)

    @pytest.mark.parametrize("tail", FAMILIES, ids=lambda t: t.spec_string)
    def test_prefix_matches_direct_summation(self, tail):
        n = 10**4
        m = TailMoments(tail, n)
        direct = math.fsum(tail.values(np.arange(1, n + 1)))
        assert m.prefix_sum(n) == pytest.approx(direct, rel=1e-12)
        k = 3517
        assert m.prefix_sum(k) == pytest.approx(math.fsum(tail.values(np.arange(1, k + 1))), rel=1e-12)

    @pytest.mark.slow
    def test_prefix_million_relative_error(self):
        tail = TailFunction.pure_power(-0.5)
        m = TailMoments(tail, 10**6)
        direct = math.fsum(tail.values(np.arange(1, 10**6 + 1)))
        assert abs(m.prefix_sum(10**6) - direct) / direct < 1e-9

    def test_g_examples(self):
        assert TailMoments(TailFunction.constant(2), 5).g_value(1) == 0.5
        assert TailMoments(TailFunction.constant(1), 10).g_value(7) == 1.0
        assert TailMoments(TailFunction.geometric(0.5), 5).g_value(2) == pytest.approx(0.75, abs=1e-15)

    def test_g_monotone_bounded(self):
        m = TailMoments(TailFunction.geometric(0.3), 2000)
        g = m.g
        assert np.all(np.diff(g) >= 0.0)
        assert g[-1] <= 1.0 + 1e-15
        assert m.g_value(1) == pytest.approx(1.0 / m.mu)

    def test_infinite_mean_signals(self):
        for fam in ("logpow:0.5", "pow:-0.5", "slowlog"):
            m = TailMoments(parse_tail(fam), 10)
            with pytest.raises(ValueError, match="infinite mean"):
                m.g_value(3)

    def test_out_of_rangeel(self):
        m = TailMoments(TailFunction.constant(1), 10)
        with pytest.raises(IndexError):
            m.prefix_sum(11)
        with pytest.raises(IndexError):
            m.prefix_sum(0)


class TestDiagnostics:
    def test_karamata_const_exhausted_is_zero(self):
        assert karamata_ratio(TailFunction.constant(1), 10) == 0.0

    @pytest.mark.slow
    def test_karamata_pure_power_error_shrinks(self):
        f = TailFunction.pure_power(-0.5)
        errs = [abs(karamata_ratio(f, x) - 0.5) for x in (10**3, 10**4, 10**5, 10**6)]
        assert all(a >= b for a, b in zip(errs, errs[1:]))
        assert errs[-1] < 1e-2

    @pytest.mark.slow
    def test_karamata_slowlog_trend(self):
        # frozen by direct summation: 0.8442 at 1e3, 0.9266 at 1e6; the analytic
        # limit 1 is approached like 1/ln x, far slower than 5e-2 at x=1e6
        f = TailFunction.slow_log()
        v3 = karamata_ratio(f, 10**3)
        v6 = karamata_ratio(f, 10**6)
        assert v3 == pytest.approx(0.844198, abs=1e-4)
        assert v6 == pytest.approx(0.926553, abs=1e-4)
        assert abs(v6 - 1.0) < abs(v3 - 1.0)

    def test_rv_probe_logpow(self):
        assert rv_limit_probe(TailFunction.log_power(0.0), 2.0, 10**6) == pytest.approx(0.5, abs=1e-6)

    def test_rv_probe_pure_power(self):
        assert rv_limit_probe(TailFunction.pure_power(-0.5), 4.0, 10**4) == pytest.approx(0.5, abs=1e-3)

    def test_rv_probe_slowlog_band(self):
        v = rv_limit_probe(TailFunction.slow_log(), 10.0, 10**6)
        assert 0.85 <= v <= 1.0

    def test_rv_probe_exhausted(self):
        with pytest.raises(TailExhaustedError):
            rv_limit_probe(TailFunction.constant(2), 2.0, 5)

    def test_moment_diagnostic_values(self):
        got = moment_diagnostic(TailFunction.geometric(0.5), 1.0, 100)
        want = 0.5**99 * 100.0**2 * math.log(100.0)
        assert got == pytest.approx(want, rel=1e-12)
        assert want == pytest.approx(7.27e-26, rel=0.01)
        assert moment_diagnostic(TailFunction.constant(3), 2.0, 10) == 0.0

    def test_moment_diagnostic_diverges_for_heavy(self):
        got = moment_diagnostic(TailFunction.log_power(0.0), 0.5, 10**6)
        assert got == pytest.approx(10**3 * math.log(10**6), rel=1e-6)

    @pytest.mark.slow
    def test_cf_estimates(self):
        assert cf_estimate(TailFunction.pure_power(-0.5), 10**6) == pytest.approx(2.0, abs=2e-2)
        # harmonic boundary case diverges like ln n + gamma
        assert cf_estimate(TailFunction.log_power(0.0), 10**4) == pytest.approx(9.7876, abs=1e-3)
        # slowly varying: frozen direct values, trend toward the analytic limit 1
        v3 = cf_estimate(TailFunction.slow_log(), 10**3)
        v6 = cf_estimate(TailFunction.slow_log(), 10**6)
        assert v6 == pytest.approx(1.079269, abs=1e-4)
        assert abs(v6 - 1.0) < abs(v3 - 1.0)

    def test_cf_exhausted(self):
        with pytest.raises(TailExhaustedError):
            cf_estimate(TailFunction.constant(1), 10)

    def test_prefix_total_closed_forms(self):
        # geometric prefix has an exact closed form to cross-check the summation
        q = 0.25
        tail = TailFunction.geometric(q)
        direct = math.fsum(tail.values(np.arange(1, 201)))
        assert tail_prefix_total(tail, 200) == pytest.approx(direct, rel=1e-14)
        assert tail_prefix_total(tail, 200) == pytest.approx((1 - q**200) / (1 - q), rel=1e-14)
