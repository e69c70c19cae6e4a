import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcclt.chains import (Box, Density1D, HardCoreConfig, HierarchicalModelSpec, IncrementDistribution, LinearRates,
                          gamma_gibbs, hardcore_chain, hardcore_enumerate, hierarchical_gibbs, independence_sampler,
                          point_process_mhg, reflected_random_walk, rw_mhg, signed_geometric_chain,
                          signed_geometric_pi)
from mcclt.chains.discretize import (gamma_gibbs_on_grid, independence_on_grid, point_process_cardinality_chain,
                                     rw_on_grid)
from mcclt.chains.gibbs import rate_ratio, synthetic_hierarchical_data
from mcclt.chains.hardcore import Grid, proper_configurations
from mcclt.chains.metropolis import (check_local_stability, down_acceptance, independence_acceptance,
                                     normal_target, patterns_equal, poisson_density, strauss_density,
                                     uniform_increment, up_acceptance)
from mcclt.kernel import simulate
from mcclt.rng import rng_stream

# independent sets of the n x n grid graph (hard-square counts)
HARD_SQUARE_COUNTS = {1: 2, 2: 7, 3: 63, 4: 1234}


@pytest.mark.parametrize("n,count", HARD_SQUARE_COUNTS.items())
def test_hardcore_counts(n, count):
    assert len(proper_configurations(n, n)) == count


def test_hardcore_2x2_enumeration():
    en = hardcore_enumerate(2, 2)
    assert en.count == 7
    assert en.expected_white == pytest.approx(8 / 7, abs=1e-15)
    rows = list(en.csv_rows())
    assert [r[0] for r in rows] == list(range(7))
    assert sum(r[2] for r in rows) == pytest.approx(1.0)


def test_hardcore_config_validation():
    assert HardCoreConfig.from_rows([[1, 0], [0, 1]]).white_count == 2
    with pytest.raises(ValueError):
        HardCoreConfig.from_rows([[1, 1], [0, 0]])
    with pytest.raises(ValueError):
        HardCoreConfig.from_rows([[1, 0], [1, 0]])
    assert HardCoreConfig.from_rows([[0, 1], [1, 0]]).rows() == [[0, 1], [1, 0]]


def test_hardcore_enumeration_cap():
    with pytest.raises(ValueError):
        proper_configurations(5, 5)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.floats(0.05, 0.95), st.integers(0, 2**31))
def test_hardcore_step_preserves_properness(n1, n2, p, seed):
    c = hardcore_chain(n1, n2, p)
    g = Grid(n1, n2)
    assert all(g.is_proper(x) for x in simulate(c, 0, 300, seed).states)


@pytest.mark.parametrize("p", [0.3, 0.5, 0.8])
def test_hardcore_kernel_rows_stochastic(p):
    c = hardcore_chain(2, 3, p)
    for x in c.states:
        row = c.kernel_row(x)
        assert math.fsum(row.values()) == pytest.approx(1.0, abs=1e-15)
        assert set(row) <= set(c.states)


@pytest.mark.parametrize("theta", [0.25, 0.5, 0.75])
def test_signed_geometric_pi_closed_form_normalized(theta):
    total = signed_geometric_pi(theta, 0) + 2 * sum(signed_geometric_pi(theta, x) for x in range(1, 400))
    assert total == pytest.approx(1.0, abs=1e-12)
    assert signed_geometric_pi(theta, 0) == (1 - theta) / (2 - theta)


def test_signed_geometric_truncation():
    tk = signed_geometric_chain(0.5).truncate(4)
    assert tk.states == list(range(-4, 5))
    assert tk.row(4) == {4: 0.5, 0: 0.5}
    assert tk.tail_bound == 0.5 ** 4
    with pytest.raises(ValueError):
        signed_geometric_chain(1.0)


def test_reflected_walk_requires_negative_drift():
    with pytest.raises(ValueError):
        reflected_random_walk(IncrementDistribution.two_point(0.5))
    with pytest.raises(ValueError):
        reflected_random_walk(IncrementDistribution.normal(0.1))


def test_reflected_walk_quadrature_expectation():
    inc = IncrementDistribution.normal(-0.5, 1.0)
    c = reflected_random_walk(inc)
    # E max(x + W, 0) for W ~ N(m, 1): closed form (x+m) Phi(x+m) + phi(x+m)
    from scipy.stats import norm
    for x in (0.0, 1.0, 3.0):
        m = x - 0.5
        val, err = c.expectation(x, lambda y: y)
        assert val == pytest.approx(m * norm.cdf(m) + norm.pdf(m), abs=1e-8)
        assert err < 1e-7


def test_reflected_walk_stays_nonnegative():
    c = reflected_random_walk(IncrementDistribution.shifted_exponential(1.0, 2.0))
    assert min(simulate(c, 0.0, 2000, 1).states) >= 0.0
    with pytest.raises(ValueError):
        simulate(c, -1.0, 10, 1)


def test_increment_moments():
    inc = IncrementDistribution.two_point(0.25)
    assert inc.mean == -0.5 and inc.positive_part_moment(3) == 0.25
    exp = IncrementDistribution.shifted_exponential(2.0, 1.0)
    assert exp.mean == pytest.approx(-0.5)
    # E[(W+)^1] for W = E - 1, E ~ Exp(2): e^{-2}/2
    assert exp.positive_part_moment(1) == pytest.approx(math.exp(-2) / 2, rel=1e-7)


def test_gamma_gibbs_validation_and_support():
    rates = LinearRates((1.0, 2.0))
    c = gamma_gibbs(2.0, 1.0, [1.0, 0.5], [2.0, 3.0], rates)
    states = simulate(c, c.default_initial, 500, 4).states
    assert all(len(s) == 3 and min(s) > 0 for s in states)
    with pytest.raises(ValueError):
        gamma_gibbs(2.0, -1.0, [1.0], [2.0], LinearRates((1.0,)))
    bad = gamma_gibbs(2.0, 1.0, [1.0], [2.0], lambda x: np.array([-1.0]))
    with pytest.raises(ValueError):
        simulate(bad, (1.0, 1.0), 1, 0)
    with pytest.raises(ValueError):
        LinearRates((0.0,))


def test_gamma_rate_ratio_bounds():
    rates = LinearRates((0.5,))
    b = [2.0]
    xs = np.linspace(0.01, 1e4, 500)
    ratios = np.array([rate_ratio(rates, b, x)[0] for x in xs])
    assert ratios.min() >= rates.ratio_infimum(b)[0] - 1e-15
    assert rates.ratio_lower_bound(b)[0] <= rates.ratio_infimum(b)[0]


def _spec():
    return HierarchicalModelSpec(synthetic_hierarchical_data(3, 5, 0), 2.0, 1.0, 1.0, 1.0, 0.0, 1.0)


def test_hierarchical_spec_derived_quantities():
    s = _spec()
    assert s.K == 3 and s.M == 15 and s.m_min == s.m_max == 5
    assert s.grand_mean == pytest.approx(float(np.mean(s.ybar)))
    with pytest.raises(ValueError):
        HierarchicalModelSpec(((1.0, 2.0), (1.0, 2.0)), 2, 1, 1, 1, 0, 1)
    with pytest.raises(ValueError):
        HierarchicalModelSpec(((1.0,), (1.0, 2.0), (3.0, 4.0)), 2, 1, 1, 1, 0, 1)


def test_hierarchical_gibbs_runs_with_positive_precisions():
    c = hierarchical_gibbs(_spec())
    for s in simulate(c, c.default_initial, 300, 2).states:
        assert len(s) == 6 and s[4] > 0 and s[5] > 0
    with pytest.raises(ValueError):
        simulate(c, (0.0, 0.0, 0.0, 0.0, -1.0, 1.0), 5, 2)


def test_independence_acceptance():
    t, q = Density1D("exponential", rate=1.0), Density1D("exponential", rate=0.5)
    assert independence_acceptance(t.pdf, q.pdf, 1.0, 1.0) == 1.0
    # moving further out is accepted w.p. exp(-(y - x)/2)
    assert independence_acceptance(t.pdf, q.pdf, 1.0, 3.0) == pytest.approx(math.exp(-1.0))
    u = Density1D("uniform", low=0.0, high=1.0)
    with pytest.raises(ValueError):
        independence_acceptance(t.pdf, u.pdf, 0.5, 2.0)


def test_independence_sampler_chain():
    t, q = Density1D("exponential", rate=1.0), Density1D("exponential", rate=0.5)
    c = independence_sampler(t.pdf, q.pdf, q.sample)
    xs = [s[0] for s in simulate(c, (1.0,), 20_000, 1).states]
    assert np.mean(xs) == pytest.approx(1.0, abs=0.06)
    assert c.detailed_balance_declared


def test_rw_mhg_normal_target():
    c = rw_mhg(normal_target(), uniform_increment(2.0))
    xs = np.array([s[0] for s in simulate(c, (0.0,), 40_000, 2).states])
    assert abs(xs.mean()) < 0.1 and xs.var() == pytest.approx(1.0, abs=0.15)
    with pytest.raises(ValueError):
        Density1D("cauchy")


def test_point_process_moves():
    box = Box((0.0, 0.0), (2.0, 1.0))
    assert box.volume == 2.0
    dens = poisson_density(3.0)
    # Poisson(beta) process: acceptance of a birth is min(1, |S| beta / (n+1))
    assert up_acceptance(dens, box.volume, (), (0.5, 0.5)) == 1.0
    assert up_acceptance(dens, box.volume, ((0.1, 0.1),) * 9, (0.5, 0.5)) == pytest.approx(0.6)
    assert down_acceptance(dens, box.volume, ((0.1, 0.1),), 0) == pytest.approx(1 / 6)
    c = point_process_mhg(box, dens, 3.0)
    counts = [len(x) for x in simulate(c, (), 40_000, 3).states]
    assert np.mean(counts) == pytest.approx(6.0, abs=0.4)


def test_strauss_density_local_stability():
    box = Box((0.0, 0.0), (1.0, 1.0))
    dens = strauss_density(5.0, 0.5, 0.2)
    assert dens(((0.0, 0.0), (0.1, 0.0))) == pytest.approx(25 * 0.5)
    assert check_local_stability(dens, box, 5.0, rng_stream(0))
    assert not check_local_stability(dens, box, 1.0, rng_stream(0))
    with pytest.raises(ValueError):
        strauss_density(1.0, 1.5, 0.1)


def test_point_patterns_equal_up_to_permutation():
    a = ((0.1, 0.2), (0.3, 0.4))
    assert patterns_equal(a, a[::-1])
    assert not patterns_equal(a, a[:1])


def test_discretized_chains_are_stochastic():
    grid = np.arange(0.025, 10, 0.05)
    t, q = Density1D("exponential", rate=1.0), Density1D("exponential", rate=0.5)
    for _, P in (independence_on_grid(t.pdf, q.pdf, grid), rw_on_grid(Density1D("normal").pdf, grid - 5)):
        assert np.allclose(P.sum(axis=1), 1.0) and P.min() >= 0
    _, P, _, Px = gamma_gibbs_on_grid(2, 1, 1, 2, 1, np.linspace(0, 8, 11), np.linspace(0, 8, 11))
    assert np.allclose(P.sum(axis=1), 1.0) and np.allclose(Px.sum(axis=1), 1.0)
    assert P.min() > 0
    _, P = point_process_cardinality_chain(1.0, lambda n: 2.0 ** n, 20)
    assert np.allclose(P.sum(axis=1), 1.0)
