from dataclasses import replace

import numpy as np
import pytest

from pdccoupling import closed_form as cf
from pdccoupling.optimize import (
    BracketInvalid,
    NoInteriorOptimum,
    golden_section,
    optimize_waist,
    optimum_curve,
)

PUMP = (150.0, 200.0, 400.0, 600.0)


def brute_force(target, config, g, lo=5.0, hi=2000.0, n=100_000):
    xs = np.linspace(lo, hi, n)
    v = np.array([cf.evaluate(target, config, replace(g, w_o2=x)).value for x in xs])
    return xs[int(np.argmax(v))]


@pytest.mark.parametrize("target,wp", [("chi_M", 150.0), ("chi_P3", 400.0)])
def test_matches_brute_force_grid(weak, target, wp):
    config, g = weak
    g = replace(g, w_p=wp)
    r = optimize_waist(target, "w_o2", (5, 2000), config, g)
    assert abs(r.optimum_value - brute_force(target, config, g)) <= 0.02


def test_golden_section_tolerance():
    x, fx = golden_section(lambda t: -(t - 3.21) ** 2, 0.0, 10.0, tol=1e-6)
    assert x == pytest.approx(3.21, abs=1e-6)
    assert fx == pytest.approx(0.0, abs=1e-11)


def test_record_invariants(weak):
    config, g = weak
    r = optimize_waist("chi_M", "w_o2", (5, 2000), config, g)
    assert 5 <= r.optimum_value <= 2000
    for edge in r.bracket:
        assert r.efficiency_at_optimum >= cf.evaluate("chi_M", config, replace(g, w_o2=edge)).value - 1e-12
    assert r.interior and r.unimodal
    assert "w_o2" not in r.fixed and r.fixed["w_p"] == g.w_p


def test_deterministic(weak):
    config, g = weak
    a = optimize_waist("chi_P3", "w_o2", (5, 2000), config, g)
    b = optimize_waist("chi_P3", "w_o2", (5, 2000), config, g)
    assert a == b


def test_bad_bracket(weak):
    config, g = weak
    with pytest.raises(BracketInvalid):
        optimize_waist("chi_M", "w_o2", (300, 300), config, g)
    with pytest.raises(BracketInvalid):
        optimize_waist("chi_M", "w_o2", (400, 300), config, g)


def test_monotone_target_flagged(weak):
    config, g = weak
    r = optimize_waist("eta_P3", "w_o2", (5, 2000), config, g)
    assert not r.interior
    assert r.optimum_value == 2000
    with pytest.raises(NoInteriorOptimum):
        optimize_waist("eta_P3", "w_o2", (5, 2000), config, g, require_interior=True)


def test_plateau_resolves_to_smallest_waist(weak):
    config, g = weak
    # the thin free-space efficiency does not depend on w_o2 at all
    r = optimize_waist("eps_P", "w_o2", (5, 2000), config, g, "thin_crystal")
    assert r.optimum_value == 5
    assert not r.interior


def test_gap_shrinks_with_pump_waist(weak):
    config, g = weak
    for w1 in (250.0, 400.0):
        gg = replace(g, w_o1=w1)
        gaps = {}
        for target in ("chi_M", "chi_P3"):
            recs = optimum_curve(target, "w_o2", (5, 2000), "w_p", PUMP, config, gg)
            gaps[target] = [abs(r.optimum_value - w1) for r in recs]
            assert np.all(np.diff(gaps[target]) < 0)
        assert all(m <= p for m, p in zip(gaps["chi_M"], gaps["chi_P3"]))


def test_strong_walkoff_overshoots(liio3):
    # with LiIO3-sized walk-off the optimum passes w_o1 and the gap grows again
    config, g = liio3
    recs = optimum_curve("chi_M", "w_o2", (5, 2000), "w_p", PUMP, config, g)
    signed = [r.optimum_value - g.w_o1 for r in recs]
    assert signed[0] < 0 < signed[-1]
    assert not np.all(np.diff(np.abs(signed)) < 0)


def test_flat_curve_for_tied_thin_waists():
    g = cf.BeamGeometry(1.0, 1.0, 1.0)
    v = [cf.chi_M_thin(replace(g, w_p=w, w_o1=w, w_o2=w)).value for w in (10, 100, 1000)]
    assert v == pytest.approx([8 / 9] * 3, rel=1e-14)


def test_single_point_curve_equals_optimize(weak):
    config, g = weak
    [rec] = optimum_curve("chi_M", "w_o2", (5, 2000), "w_p", [g.w_p], config, g)
    assert rec == optimize_waist("chi_M", "w_o2", (5, 2000), config, g)


def test_curve_records_failures(weak):
    config, g = weak
    recs = optimum_curve("chi_M", "w_o2", (5, 2000), "w_p", [-10.0, 200.0], config, g)
    assert recs[0].error.startswith("NonPositiveWaist")
    assert np.isnan(recs[0].optimum_value)
    assert recs[1].error is None and recs[1].interior
