import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcclt.chains import hardcore_chain, signed_geometric_chain
from mcclt.kernel import (FUNCTIONALS, StateKind, ergodic_average, resolve_functional, simulate, simulate_values,
                          trajectory_values)
from mcclt.rng import rng_stream


def test_stream_is_reproducible():
    a, b = rng_stream(7, 3), rng_stream(7, 3)
    assert [a.uniform() for _ in range(10_000)] == [b.uniform() for _ in range(10_000)]


def test_streams_differ_by_id_and_seed():
    base = [rng_stream(7, 0).uniform() for _ in range(5)]
    assert base != [rng_stream(7, 1).uniform() for _ in range(5)]
    assert base != [rng_stream(8, 0).uniform() for _ in range(5)]


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        rng_stream(-1)


@given(st.integers(1, 50))
def test_integer_draws_in_range(k):
    r = rng_stream(0)
    assert all(0 <= r.integer(k) < k for _ in range(200))


def test_simulate_deterministic_and_length():
    c = signed_geometric_chain(0.5)
    t1 = simulate(c, 0, 500, seed=11)
    t2 = simulate(c, 0, 500, seed=11)
    assert t1.states == t2.states
    assert len(t1) == 500 and t1.final_state == t1.states[-1]


def test_simulate_values_matches_full_trajectory():
    c = hardcore_chain(2, 2, 0.5)
    full = simulate(c, 0, 2000, seed=3)
    folded = simulate_values(c, 0, 2000, "white-count", seed=3)
    np.testing.assert_array_equal(trajectory_values(full, "white-count"), folded.values)
    assert ergodic_average(full, "white-count") == ergodic_average(folded, "white-count")


def test_simulate_rejects_bad_inputs():
    c = hardcore_chain(2, 2, 0.5)
    with pytest.raises(ValueError):
        simulate(c, 0, 0, seed=1)
    with pytest.raises(ValueError):
        simulate(c, 0b11, 10, seed=1)  # adjacent whites


def test_folded_trajectory_refuses_other_functional():
    t = simulate_values(signed_geometric_chain(0.5), 0, 100, "indicator-zero", seed=1)
    with pytest.raises(ValueError):
        trajectory_values(t, "abs")


def test_ergodic_average_constant():
    t = simulate_values(signed_geometric_chain(0.3), 0, 1000, "const:2.5", seed=2)
    assert ergodic_average(t, "const:2.5") == 2.5


def test_functional_registry():
    assert resolve_functional("coord:1", StateKind.VECTOR)((1.0, 4.0)) == 4.0
    assert FUNCTIONALS.get("white-count")(0b1001) == 2.0
    with pytest.raises(KeyError):
        FUNCTIONALS.get("nope")
    with pytest.raises(ValueError):
        FUNCTIONALS.get("white-count", StateKind.LATTICE)
    with pytest.raises(ValueError):
        FUNCTIONALS.register("abs", abs, [StateKind.LATTICE])


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.95), st.integers(0, 10**6))
def test_signed_geometric_moves_are_legal(theta, seed):
    c = signed_geometric_chain(theta)
    t = simulate(c, 0, 200, seed)
    prev = 0
    for x in t.states:
        assert x in c.kernel_row(prev)
        prev = x


def test_exact_table_requires_finite_chain():
    with pytest.raises(ValueError):
        signed_geometric_chain(0.5).exact_table()


def test_ergodic_average_uses_compensated_sum():
    t = simulate_values(signed_geometric_chain(0.5), 0, 10_000, "indicator-zero", seed=5)
    assert ergodic_average(t, "indicator-zero") == math.fsum(t.values.tolist()) / 10_000
