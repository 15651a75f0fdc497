import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from emcel import DomainError, besq_hit_zero_law, bm_exit_interval_law, cev_absorption_law, cev_to_besq


@pytest.mark.parametrize("p,delta", [(0.5, 0.0), (0.0, 1.0), (0.25, 2 - 4 / 3), (-1.0, 1.5)])
def test_dimension(p, delta):
    assert cev_to_besq(p).delta == pytest.approx(delta, rel=1e-15)


@given(p=st.floats(-3.0, 0.95), y=st.floats(1e-3, 1e3))
def test_scale_map_round_trip(p, y):
    tr = cev_to_besq(p)
    assert tr.s(tr.s_inverse(y)) == pytest.approx(y, rel=1e-12)


def test_half_maps_to_quadruple():
    tr = cev_to_besq(0.5)
    assert tr.s_inverse(1.0) == pytest.approx(4.0)
    assert tr.s_inverse(0.5) == pytest.approx(2.0)


def test_p_at_least_one():
    with pytest.raises(DomainError):
        cev_to_besq(1.0)
    with pytest.raises(DomainError):
        besq_hit_zero_law(2.0, 1.0)
    with pytest.raises(DomainError):
        cev_absorption_law(0.5, 0.0)


class TestCevHalf:
    law = cev_absorption_law(0.5, 1.0)

    def test_exponential_form(self):
        t = np.array([0.1, 0.5, 1.0, 2.0, 10.0])
        assert np.allclose(self.law.cdf(t), np.exp(-2.0 / t), rtol=1e-13)

    def test_values(self):
        assert self.law.cdf(2.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
        assert self.law.ppf(0.5) == pytest.approx(2.0 / math.log(2.0), rel=1e-12)
        assert self.law.cdf(0.0) == 0.0
        assert self.law.cdf(math.inf) == 1.0

    def test_besq_zero(self):
        law = besq_hit_zero_law(0.0, 2.0)
        assert law.cdf(1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
        assert cev_absorption_law(0.5, 0.5).cdf(1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)


def test_brownian_reflection():
    # p = 0: Brownian motion absorbed at 0, P(H <= t) = erfc(y0 / sqrt(2t))
    y0 = 0.7
    law = cev_absorption_law(0.0, y0)
    for t in np.geomspace(0.01, 100.0, 40):
        want = float(mpmath.erfc(mpmath.mpf(y0) / mpmath.sqrt(2 * mpmath.mpf(t))))
        assert law.cdf(t) == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("p", [-1.0, 0.0, 0.25, 0.5, 0.75])
def test_cdf_monotone(p):
    law = cev_absorption_law(p, 1.0)
    c = law.cdf(np.geomspace(1e-3, 1e4, 400))
    assert np.all(np.diff(c) >= 0.0)
    assert 0.0 <= c[0] and c[-1] <= 1.0


@pytest.mark.parametrize("p", [0.0, 0.25, 0.5])
def test_quantile_round_trip(p):
    law = cev_absorption_law(p, 1.0)
    u = np.array([0.05, 0.3, 0.5, 0.9])
    assert np.allclose(law.cdf(law.ppf(u)), u, rtol=1e-10)


def test_sample_matches_cdf():
    law = cev_absorption_law(0.5, 1.0)
    x = law.sample(20_000, np.random.default_rng(0))
    assert np.all(np.isfinite(x))
    assert abs(np.mean(x <= 2.0) - math.exp(-1)) < 0.015


class TestBrownianExit:
    def test_exit_side(self):
        assert bm_exit_interval_law(0.5, 0.0, 2.0).p_lower == pytest.approx(0.75)

    def test_mean_from_series(self):
        ex = bm_exit_interval_law(0.5, 0.0, 2.0)
        mean, _ = integrate.quad(lambda t: 1.0 - ex.law.cdf(t), 0.0, math.inf, limit=200)
        assert mean == pytest.approx(0.75, rel=1e-8)
        assert ex.law.mean == 0.75

    def test_short_times(self):
        law = bm_exit_interval_law(1.0, 0.0, 2.0).law
        assert law.cdf(1e-6) == pytest.approx(0.0, abs=1e-12)
        c = law.cdf(np.geomspace(1e-8, 50.0, 300))
        assert np.all(np.diff(c) >= -1e-14)
        assert c[-1] == pytest.approx(1.0, abs=1e-10)

    def test_wide_interval_is_one_sided(self):
        # with the upper end far away, the law is close to that of the hitting time of a
        ex = bm_exit_interval_law(0.5, 0.0, 1000.0)
        one_sided = cev_absorption_law(0.0, 0.5)
        for t in (0.1, 1.0, 10.0):
            assert ex.law.cdf(t) == pytest.approx(one_sided.cdf(t), abs=1e-3)

    def test_bad_interval(self):
        with pytest.raises(DomainError):
            bm_exit_interval_law(3.0, 0.0, 2.0)
        with pytest.raises(DomainError):
            bm_exit_interval_law(0.5, 0.0, math.inf)
