import json
import math

import pytest

from emcel import (
    CustomScheme,
    DomainError,
    EMCELScheme,
    TrendPolicy,
    WeakEulerCEVScheme,
    brownian_speed_measure,
    check_condition_A,
    check_condition_B,
    check_condition_D,
)
from emcel.conditions import CSV_COLUMNS, fit_power_bound
from emcel.scalefactors import cev_emcel, cev_truncated

HS = [0.1, 0.01, 0.001, 1e-4]
K = (0.5, 2.0)


def _verdicts(scheme):
    a = check_condition_A(scheme, K, HS, 101).verdicts["A"]
    b = check_condition_B(scheme, K, HS, 101).verdicts
    d = check_condition_D(scheme, HS, 101).verdicts["D"]
    return a, b["B(i)"], b["B(ii)"], d


@pytest.mark.parametrize(
    "name,expected",
    [
        ("emcel", (True, True, True, True)),
        ("weak_euler", (True, True, True, False)),
        ("truncated", (True, False, True, False)),
        ("sqrt_h", (True, True, True, True)),
    ],
)
def test_verdict_table(name, expected):
    scheme = {
        "emcel": lambda: cev_emcel(0.5),
        "weak_euler": lambda: WeakEulerCEVScheme.for_cev(0.5),
        "truncated": lambda: cev_truncated(0.5),
        "sqrt_h": lambda: CustomScheme(brownian_speed_measure(), fn=lambda h, y: math.sqrt(h)),
    }[name]()
    assert _verdicts(scheme) == expected


@pytest.mark.parametrize("p", [-1.0, 0.0, 0.25, 0.75])
def test_emcel_passes_everywhere(p):
    assert _verdicts(cev_emcel(p)) == (True, True, True, True)


def test_implications():
    for scheme in (cev_emcel(0.5), WeakEulerCEVScheme.for_cev(0.5), cev_truncated(0.5)):
        a, bi, bii, d = _verdicts(scheme)
        if d:
            assert bi and bii
        if bi and bii:
            assert a


def test_weak_euler_ratios():
    rep = check_condition_B(WeakEulerCEVScheme.for_cev(0.5), K, HS, 101)
    assert rep.fitted["B"] == pytest.approx(2 * math.log(2), rel=1e-6)
    assert rep.fitted["gamma"] == 1.0
    d = check_condition_D(WeakEulerCEVScheme.for_cev(0.5), HS, 101)
    for row in d.rows:
        assert d.deviation_sup(row) / row.h == pytest.approx(2 * math.log(2) - 1, rel=1e-3)


def test_truncated_inf_is_zero():
    rep = check_condition_B(cev_truncated(0.5), K, HS, 101)
    for h in HS:
        assert rep.alpha_ratio(h) == 0.0


def test_grid_refinement_is_monotone():
    # grids with n and 2n - 1 points are nested, so sups grow and infs shrink
    s = WeakEulerCEVScheme.for_cev(0.5)
    coarse = check_condition_B(s, K, HS, 51)
    fine = check_condition_B(s, K, HS, 101)
    for c, f in zip(coarse.rows, fine.rows):
        assert f.sup_Ih >= c.sup_Ih
        assert f.inf_Ih <= c.inf_Ih
        assert f.sup_K >= c.sup_K
        assert f.n_Ih >= c.n_Ih
    ca = check_condition_A(s, K, HS, 51)
    fa = check_condition_A(s, K, HS, 101)
    for c, f in zip(ca.rows, fa.rows):
        assert f.deviation_K >= c.deviation_K


def test_K_outside_interior():
    with pytest.raises(DomainError):
        check_condition_A(cev_emcel(0.5), (0.0, 1.0), HS, 11)
    with pytest.raises(DomainError):
        check_condition_A(cev_emcel(0.5), (2.0, 1.0), HS, 11)


def test_bad_h_sequence():
    with pytest.raises(DomainError):
        check_condition_A(cev_emcel(0.5), K, [0.1, 0.2], 11)


def test_report_serialises():
    rep = check_condition_D(cev_emcel(0.5), HS, 21)
    text = json.dumps(rep.to_json())
    assert "verdicts" in text
    assert all(len(row) == len(CSV_COLUMNS) for row in rep.table())
    assert any("grid" in n for n in rep.notes)


def test_trend_policy():
    pol = TrendPolicy()
    assert pol.tends_to_zero([0.5, 0.1, 0.01, 0.001])
    assert not pol.tends_to_zero([0.39, 0.39, 0.39, 0.39])
    assert pol.tends_to_zero([0.0, 0.0, 0.0])


def test_power_fit():
    fit = fit_power_bound(HS, [3 * h for h in HS])
    assert fit["B"] == pytest.approx(3.0)
    assert fit["gamma"] == pytest.approx(1.0)


def test_brownian_interval():
    s = EMCELScheme(brownian_speed_measure(0.0, 2.0))
    assert _verdicts_interval(s) == (True, True)


def _verdicts_interval(s):
    return (
        check_condition_A(s, (0.5, 1.5), HS, 51).verdicts["A"],
        check_condition_D(s, HS, 51).verdicts["D"],
    )
