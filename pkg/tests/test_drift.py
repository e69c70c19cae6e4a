import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcclt.chains import (Density1D, IncrementDistribution, hardcore_chain, reflected_random_walk, rw_mhg,
                          signed_geometric_chain)
from mcclt.chains.metropolis import normal_target, uniform_increment
from mcclt.drift import (DriftSpec, cardinality_exp, check_geometric_drift, check_polynomial_drift, delta_V,
                         evaluate_grid, exp_abs, fit_level_set, fit_small_set, inverse_sqrt_target, power,
                         signed_geometric_feasibility)
from mcclt.exact import build_finite, tv_decay

SG_GRID = list(range(-50, 51))


def sg_delta(theta, a, x):
    # closed form: PV - V for V = a^|x|
    if x == 0:
        return a - 1.0
    return theta * a ** (abs(x) + 1) + (1 - theta) - a ** abs(x)


def rw_delta(q, x):
    # reflected walk, V = (x + 1)^2
    if x == 0:
        return q * 4 + (1 - q) - 1
    return q * (x + 2) ** 2 + (1 - q) * x ** 2 - (x + 1) ** 2


def test_signed_geometric_delta_exact():
    c = signed_geometric_chain(0.25)
    V = exp_abs(2.0)
    assert delta_V(c, V, 1).delta == pytest.approx(-0.25, abs=1e-15)
    for x in (-7, 0, 3, 20):
        assert delta_V(c, V, x).delta == pytest.approx(sg_delta(0.25, 2.0, x), rel=1e-14)


def test_appendix_certificate():
    c = signed_geometric_chain(0.25)
    r = check_geometric_drift(c, DriftSpec(exp_abs(2.0), C=[0]), SG_GRID)
    assert r.certified and r.verdict == "certified-on-grid"
    assert r.d == pytest.approx(0.125, abs=1e-12)
    assert r.b == pytest.approx(1.125, abs=1e-12)
    assert r.C == [0]


@pytest.mark.parametrize("a,witnesses", [(1.5, [-1, 1]), (1.9, [-3, -2, -1, 1, 2, 3])])
def test_half_theta_is_infeasible(a, witnesses):
    r = check_geometric_drift(signed_geometric_chain(0.5), DriftSpec(exp_abs(a), C=[0]), SG_GRID)
    assert not r.certified and r.verdict == "violated"
    assert sorted(r.witnesses) == witnesses
    assert not signed_geometric_feasibility(0.5, a)["a_feasible"]


def test_feasibility_interval():
    f = signed_geometric_feasibility(0.25)
    assert f["family_feasible"] and f["feasible_a_interval"] == [1.0, 3.0]
    assert signed_geometric_feasibility(0.25, 2.0)["a_feasible"]
    assert not signed_geometric_feasibility(0.25, 3.5)["a_feasible"]
    assert not signed_geometric_feasibility(0.6)["family_feasible"]


def test_fixed_constants_violation_and_certification():
    c = signed_geometric_chain(0.25)
    ok = check_geometric_drift(c, DriftSpec(exp_abs(2.0), C=[0], d=0.1, b=2.0), SG_GRID)
    assert ok.certified and ok.d == 0.1
    bad = check_geometric_drift(c, DriftSpec(exp_abs(2.0), C=[0], d=0.2, b=2.0), SG_GRID)
    assert not bad.certified and sorted(bad.witnesses) == [-1, 1]


@settings(max_examples=25, deadline=None)
@given(st.sets(st.integers(-5, 5), max_size=6))
def test_enlarging_C_keeps_certificate(extra):
    c = signed_geometric_chain(0.25)
    base = DriftSpec(exp_abs(2.0), C=[0], d=0.125, b=1.125)
    assert check_geometric_drift(c, base, SG_GRID).certified
    bigger = DriftSpec(exp_abs(2.0), C=sorted({0} | extra), d=0.125, b=1.125)
    assert check_geometric_drift(c, bigger, SG_GRID).certified


def test_delta_symmetry_signed_geometric():
    c = signed_geometric_chain(0.3)
    V = exp_abs(1.7)
    for x in range(1, 30):
        assert delta_V(c, V, x).delta == delta_V(c, V, -x).delta


def test_polynomial_drift_reflected_walk():
    c = reflected_random_walk(IncrementDistribution.two_point(0.25))
    for x in (0, 1, 5, 100):
        assert delta_V(c, power(2.0), x).delta == pytest.approx(rw_delta(0.25, x), abs=1e-12)
    r = check_polynomial_drift(c, DriftSpec(power(2.0), "polynomial", 0.5, C=[0]), range(0, 101))
    assert r.certified and r.C == [0]
    assert r.d == pytest.approx(0.5, abs=1e-12) and r.b == pytest.approx(1.25, abs=1e-12)
    assert r.implied_order == 1.0


def test_fit_small_set_examples():
    c = signed_geometric_chain(0.25)
    assert fit_small_set(c, exp_abs(2.0), SG_GRID, 0.125) == [0]
    rw = reflected_random_walk(IncrementDistribution.two_point(0.25))
    assert fit_small_set(rw, power(2.0), range(0, 101), 0.5, kappa=0.5) == [0]
    C0 = fit_small_set(c, exp_abs(2.0), SG_GRID, 0.0)
    assert C0 == [x for x in SG_GRID if sg_delta(0.25, 2.0, x) >= 0]
    with pytest.warns(UserWarning):
        fit_small_set(c, exp_abs(2.0), SG_GRID, 10.0)


def test_fit_level_set():
    c = signed_geometric_chain(0.25)
    vals = evaluate_grid(c, exp_abs(2.0), SG_GRID)
    v_star, C = fit_level_set(vals)
    assert v_star == 1.0 and C == [0]


def test_monte_carlo_agrees_with_exact():
    c = signed_geometric_chain(0.25)
    V = exp_abs(2.0)
    hits = 0
    grid = list(range(-10, 11))
    for seed in range(3):
        for i, x in enumerate(grid):
            mc = delta_V(c, V, x, "monte-carlo", 20_000, seed, i)
            hits += abs(mc.delta - sg_delta(0.25, 2.0, x)) <= mc.error
    assert hits >= 0.95 * 3 * len(grid)


def test_monte_carlo_budget_floor():
    with pytest.raises(ValueError):
        delta_V(signed_geometric_chain(0.25), exp_abs(2.0), 1, "monte-carlo", 100)


def test_overflow_is_reported():
    with pytest.raises(ValueError, match="overflow"):
        delta_V(signed_geometric_chain(0.25), exp_abs(2.0), 2000)


def test_quadrature_delta():
    inc = IncrementDistribution.normal(-1.0, 1.0)
    c = reflected_random_walk(inc)
    V = power(2.0)
    # far from 0 the reflection is negligible: E(x+W+1)^2 - (x+1)^2 = -2(x+1) + 2
    d = delta_V(c, V, 30.0, "quadrature")
    assert d.delta == pytest.approx(-2 * 31 + 2, abs=1e-6)


def test_rw_mhg_inverse_sqrt_drift_sign():
    target = normal_target()
    c = rw_mhg(target, uniform_increment(1.0))
    V = inverse_sqrt_target(target, math.sqrt(target((0.0,))))
    assert V((0.0,)) == pytest.approx(1.0)
    far = delta_V(c, V, (4.0,), "monte-carlo", 20_000, 0, 0)
    assert far.delta + far.error < 0


def test_cardinality_exp_on_points():
    V = cardinality_exp(2.0)
    assert V(((0.0, 0.0),) * 3) == 8.0
    with pytest.raises(ValueError):
        cardinality_exp(0.5)


def test_finite_analysis_delta(hardcore22):
    V = lambda x: 1.0 + int(x).bit_count()
    d = delta_V(hardcore22, V, 0)
    # from the empty grid, one white site is added w.p. p = 1/2
    assert d.delta == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValueError):
        delta_V(hardcore22, V, 0, "monte-carlo")


def test_certified_finite_chain_decays_geometrically():
    a = build_finite(signed_geometric_chain(0.25), 20)
    r = check_geometric_drift(a, DriftSpec(exp_abs(2.0), C=[-20, 0, 20]), a.states)
    assert r.certified
    assert tv_decay(a, 0, 60).rate < 1 - 1e-6


def test_report_rows_and_summary():
    r = check_geometric_drift(signed_geometric_chain(0.25), DriftSpec(exp_abs(2.0), C=[0]), [-1, 0, 1])
    rows = list(r.rows())
    state, V, PV, dV, rhs, slack, in_C = rows[1]
    assert (state, V, PV, dV, in_C) == (0, 1.0, 2.0, 1.0, 1)
    assert rhs == pytest.approx(-0.125 + 1.125) and slack == pytest.approx(rhs - dV)
    s = r.summary()
    assert s["verdict"] == "certified-on-grid" and s["grid_size"] == 3 and s["implied_polynomial_order"] is None
