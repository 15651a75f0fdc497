import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from emcel import (
    ChainPath,
    CustomScheme,
    DomainError,
    EMCELScheme,
    ExtendedTime,
    SchemeIntegrityError,
    brownian_speed_measure,
    extended_time_distance,
    hitting_time,
    path_value,
    simulate_chain,
    sticky_brownian_speed_measure,
)
from emcel import _kernels, _rng
from emcel.chain import INFINITE, boundary_times, n_steps_for
from emcel.scalefactors import cev_emcel, cev_truncated, WeakEulerCEVScheme

LOG4 = 2 * math.log(2)


def _schemes():
    return {
        "emcel": (cev_emcel(0.5), 1.0),
        "emcel_q": (cev_emcel(0.25), 1.0),
        "weak_euler": (WeakEulerCEVScheme.for_cev(0.5), 1.0),
        "truncated": (cev_truncated(0.5), 1.0),
        "interval": (EMCELScheme(brownian_speed_measure(0.0, 2.0)), 1.0),
        "sticky": (EMCELScheme(sticky_brownian_speed_measure([(0.0, 2.0)])), 0.0),
    }


@pytest.mark.parametrize("name", list(_schemes()))
def test_single_path_matches_batch(name):
    scheme, y0 = _schemes()[name]
    h, T = 0.01, 3.0
    seeds = _rng.derive_seeds(77, 60)
    status, steps, final = _kernels.simulate_batch(scheme, y0, h, n_steps_for(T, h), seeds)
    for i, seed in enumerate(seeds):
        path = simulate_chain(scheme, y0, h, T, int(seed))
        assert path.values[-1] == final[i]
        if path.absorbed_at is not None:
            side, k = path.absorbed_at
            assert status[i] == (_kernels.LOWER if side == "lower" else _kernels.UPPER)
            assert steps[i] == k
        elif path.frozen_at is not None:
            assert status[i] == _kernels.FROZEN
        else:
            assert status[i] == _kernels.CENSORED


def test_reproducible():
    s = cev_emcel(0.5)
    a = simulate_chain(s, 1.0, 0.01, 2.0, 5)
    b = simulate_chain(s, 1.0, 0.01, 2.0, 5)
    assert np.array_equal(a.values, b.values)
    c = simulate_chain(s, 1.0, 0.01, 2.0, 6)
    assert not np.array_equal(a.values[:50], c.values[:50])


def test_one_step_absorption_frequency():
    # from y = l_h / 2 the clamp sends the chain to 0 with probability 1/2
    h = 0.01
    s = cev_emcel(0.5)
    y0 = h / LOG4 / 2
    n = 4000
    hits = 0
    for seed in _rng.derive_seeds(3, n):
        path = simulate_chain(s, y0, h, h, int(seed))
        assert path.values[1] in (0.0, 2 * y0)
        hits += path.values[1] == 0.0
    assert abs(hits / n - 0.5) < 4 * math.sqrt(0.25 / n)


def test_upward_frequency():
    s = EMCELScheme(brownian_speed_measure())
    path = simulate_chain(s, 0.0, 1e-4, 2.0, 11)
    up = np.diff(path.values) > 0
    assert abs(up.mean() - 0.5) < 4 * math.sqrt(0.25 / up.size)


def test_zero_scheme_freezes():
    s = CustomScheme(brownian_speed_measure(), fn=lambda h, y: 0.0)
    path = simulate_chain(s, 0.3, 0.1, 5.0, 1)
    assert path.frozen_at == 0 and path.finished
    assert np.array_equal(path.values, [0.3])
    assert path_value(path, 100.0) == 0.3
    hl, hr = path.exit_times()
    assert hl.is_infinite and hr.is_infinite


def test_escape_is_reported():
    s = CustomScheme(brownian_speed_measure(0.0, 1.0), fn=lambda h, y: 2.0)
    with pytest.raises(SchemeIntegrityError):
        simulate_chain(s, 0.5, 0.1, 1.0, 1)


def test_brownian_interval_ends_at_boundary():
    s = EMCELScheme(brownian_speed_measure(0.0, 1.0))
    path = simulate_chain(s, 0.5, 0.01, 100.0, 2)
    assert path.absorbed_at is not None
    assert path.values[-1] in (0.0, 1.0)


def test_step_count():
    assert n_steps_for(1.0, 0.1) == 10
    assert n_steps_for(1.05, 0.1) == 11
    assert n_steps_for(0.05, 0.1) == 1
    with pytest.raises(DomainError):
        n_steps_for(0.0, 0.1)


def test_max_steps_guard():
    with pytest.raises(DomainError):
        simulate_chain(cev_emcel(0.5), 1.0, 1e-3, 10.0, 1, max_steps=100)


def test_y0_on_boundary():
    with pytest.raises(DomainError):
        simulate_chain(cev_emcel(0.5), 0.0, 0.01, 1.0, 1)


def _path(values, h=1.0, finished=False, lower=-math.inf, upper=math.inf):
    return ChainPath(h, values[0], np.array(values, dtype=float), ("lower", len(values) - 1) if finished else None,
                     None, lower, upper)


class TestInterpolation:
    def test_linear(self):
        p = _path([0.0, 1.0, -1.0], h=0.5)
        assert path_value(p, 0.25) == 0.5
        assert path_value(p, 0.75) == 0.0
        assert path_value(p, 1.0) == -1.0

    def test_beyond_horizon(self):
        p = _path([0.0, 1.0])
        with pytest.raises(DomainError):
            path_value(p, 1.5)
        with pytest.raises(DomainError):
            path_value(p, -0.1)

    def test_constant_after_absorption(self):
        p = _path([1.0, 0.0], finished=True, lower=0.0)
        assert path_value(p, 7.0) == 0.0


class TestHittingTime:
    def test_midpoint_crossing(self):
        assert hitting_time(_path([0.0, 1.0]), 0.5) == ExtendedTime(0.5)

    def test_hit_at_start(self):
        assert hitting_time(_path([0.5, 1.0]), 0.5) == ExtendedTime(0.0)

    def test_grid_hit(self):
        assert hitting_time(_path([0.0, 1.0, 2.0], h=0.1), 1.0).value == pytest.approx(0.1)

    def test_censored(self):
        t = hitting_time(_path([0.0, 1.0], h=0.1), 5.0)
        assert t.censored and t.value == pytest.approx(0.1)

    def test_never_after_finish(self):
        p = _path([1.0, 0.0], finished=True, lower=0.0, upper=math.inf)
        assert hitting_time(p, 3.0) is INFINITE
        assert hitting_time(p, math.inf) is INFINITE

    def test_out_of_closure(self):
        with pytest.raises(DomainError):
            hitting_time(_path([1.0, 2.0], lower=0.0), -1.0)

    @given(v0=st.floats(-5, 5), v1=st.floats(-5, 5), u=st.floats(0.0, 1.0))
    def test_crossing_is_consistent(self, v0, v1, u):
        if v0 == v1:
            return
        b = v0 + u * (v1 - v0)
        if not min(v0, v1) <= b <= max(v0, v1):
            return
        t = hitting_time(_path([v0, v1]), b)
        assert not t.censored
        assert 0.0 <= t.value <= 1.0
        assert path_value(_path([v0, v1]), t.value) == pytest.approx(b, abs=1e-12)


class TestDistance:
    def test_examples(self):
        assert extended_time_distance(0.0, math.inf) == 1.0
        assert extended_time_distance(1.0, 3.0) == pytest.approx(0.25)
        assert extended_time_distance(INFINITE, INFINITE) == 0.0

    def test_censored_rejected(self):
        with pytest.raises(DomainError):
            extended_time_distance(ExtendedTime(1.0, censored=True), 1.0)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            ExtendedTime(-1.0)

    @given(s=st.floats(0, 1e6), t=st.floats(0, 1e6), u=st.floats(0, 1e6))
    def test_metric(self, s, t, u):
        d = extended_time_distance
        assert d(s, t) == d(t, s)
        assert 0.0 <= d(s, t) <= 1.0
        assert d(s, u) <= d(s, t) + d(t, u) + 1e-15


def test_boundary_times_codes():
    status = np.array([_kernels.CENSORED, _kernels.LOWER, _kernels.UPPER, _kernels.FROZEN])
    steps = np.array([10, 3, 4, 2])
    lo, up = boundary_times(status, steps, 0.5, 5.0)
    assert math.isnan(lo[0]) and math.isnan(up[0])
    assert lo[1] == 1.5 and up[1] == math.inf
    assert lo[2] == math.inf and up[2] == 2.0
    assert lo[3] == math.inf and up[3] == math.inf
