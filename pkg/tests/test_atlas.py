import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from discdrift.atlas import (
    FirstOrderModel,
    _ranks_into,
    atlas_model,
    occupation_deviation,
    rank,
    simulate_market,
)
from discdrift.errors import ParameterError
from discdrift.noise import MARKET_STREAM, stream


def test_atlas_parameters():
    m = atlas_model(3, 0.1, 0.09, [3.4, 4.1, 5.7])
    assert np.allclose(m.rates_by_rank(), [0.0, 0.0, 0.3], atol=1e-15)
    assert math.isclose(m.growth[0] + m.growth[1], -0.2) and abs(sum(m.growth)) < 1e-15
    one = atlas_model(1, 0.25, 0.1, [0.0])
    assert one.rates_by_rank().tolist() == [0.25]
    with pytest.raises(ParameterError):
        atlas_model(3, 0.0, 0.1, [1, 2, 3])
    with pytest.raises(ParameterError):
        atlas_model(3, 0.1, -0.1, [1, 2, 3])
    with pytest.raises(ParameterError):
        atlas_model(3, 0.1, 0.1, [1, 2])
    with pytest.raises(ParameterError):
        FirstOrderModel(0.0, (0.1, -0.1), (1.0, 1.0), (0.0, 0.0))


def test_rank_examples():
    assert rank([3.4, 4.1, 5.7]).tolist() == [3, 2, 1]
    assert rank([1.0, 1.0, 0.0]).tolist() == [1, 2, 3]
    assert rank([9.0, 5.0, 2.0, -1.0]).tolist() == [1, 2, 3, 4]


def _rank_oracle(y):
    order = sorted(range(len(y)), key=lambda i: (-y[i], i))
    r = [0] * len(y)
    for pos, i in enumerate(order):
        r[i] = pos + 1
    return r


@given(st.lists(st.sampled_from([-1.0, 0.0, 0.5, 2.0, 3.0]) | st.floats(-10, 10), min_size=1, max_size=7))
def test_rank_matches_sort_oracle(y):
    r = rank(y)
    assert r.tolist() == _rank_oracle(y)
    assert sorted(r.tolist()) == list(range(1, len(y) + 1))
    cols = np.asarray(y)[:, None]
    assert (_ranks_into(cols, np.empty(cols.shape, dtype=np.int64))[:, 0] + 1).tolist() == r.tolist()


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=6, unique=True), st.randoms())
def test_rank_permutation_equivariance(y, rnd):
    perm = list(range(len(y)))
    rnd.shuffle(perm)
    y = np.asarray(y)
    assert np.array_equal(rank(y[perm]), rank(y)[perm])


def test_occupation_deviation_examples():
    assert np.all(occupation_deviation(np.full((3, 3), 1 / 3)) == 0)
    dev = occupation_deviation(np.eye(3))
    brute = [sum((np.eye(3)[i, k] - 1 / 3) ** 2 for k in range(3)) for i in range(3)]
    assert np.allclose(dev, brute) and np.allclose(dev, 2 / 3)


def test_occupation_is_doubly_stochastic():
    m = atlas_model(3, 0.1, 0.09, [3.4, 4.1, 5.7])
    occ = simulate_market(m, 2.0, 2.0**-6, replications=5, seed=1)
    assert np.allclose(occ.rates.sum(axis=0), 1.0, rtol=0, atol=1e-14)
    assert np.allclose(occ.rates.sum(axis=1), 1.0, rtol=0, atol=1e-14)
    # counts are multiples of 1/(steps * M)
    assert np.allclose(occ.rates * 128 * 5, np.round(occ.rates * 128 * 5))


def test_euler_update_against_scalar_oracle():
    m = atlas_model(3, 0.1, 0.5, [0.0, 0.05, -0.05])
    dt, steps = 2.0**-5, 64
    occ = simulate_market(m, steps * dt, dt, replications=2, seed=9, chunk=10, keep_terminal=True)
    counts = np.zeros((3, 3))
    for rep in range(2):
        z = [stream(9, MARKET_STREAM, rep, firm).standard_normal(steps) for firm in range(3)]
        y = [0.0, 0.05, -0.05]
        for k in range(steps):
            r = _rank_oracle(y)
            y = [y[i] + m.rates_by_rank()[r[i] - 1] * dt + m.sigmas[r[i] - 1] * math.sqrt(dt) * z[i][k]
                 for i in range(3)]
            for i, ri in enumerate(_rank_oracle(y)):
                counts[i, ri - 1] += 1
        assert np.allclose(occ.terminal_log_caps[rep], y, rtol=0, atol=1e-12)
    assert np.array_equal(occ.rates, counts / (steps * 2))


def test_chunk_and_thread_invariance():
    m = atlas_model(3, 0.1, 0.09, [1.2, 3.5, 10.8])
    a = simulate_market(m, 1.0, 2.0**-7, replications=7, seed=3, chunk=512, keep_terminal=True)
    b = simulate_market(m, 1.0, 2.0**-7, replications=7, seed=3, chunk=5, threads=3, keep_terminal=True)
    assert np.array_equal(a.rates, b.rates)
    assert np.array_equal(a.terminal_log_caps, b.terminal_log_caps)


def test_single_firm_always_first():
    occ = simulate_market(atlas_model(1, 0.1, 0.1, [0.0]), 1.0, 0.125, replications=3)
    assert occ.rates.tolist() == [[1.0]]


def test_non_integer_grid_rejected():
    with pytest.raises(ParameterError):
        simulate_market(atlas_model(2, 0.1, 0.1, [0, 1]), 1.0, 0.3)


def test_spread_and_ladder_at_reduced_scale():
    dt = 2.0**-6
    near = atlas_model(3, 0.1, 0.09, [3.4, 4.1, 5.7])
    far = atlas_model(3, 0.1, 0.09, [1.2, 3.5, 10.8])
    dev_near = occupation_deviation(simulate_market(near, 100.0, dt, replications=50, seed=2))
    dev_far = occupation_deviation(simulate_market(far, 100.0, dt, replications=50, seed=2))
    assert np.all(dev_far > dev_near)
    ladder = [occupation_deviation(simulate_market(near, t, dt, replications=50, seed=2)).sum()
              for t in (100.0, 250.0, 500.0)]
    assert ladder[0] > ladder[1] > ladder[2]


def test_step_size_insensitivity_within_monte_carlo_error():
    m = atlas_model(3, 0.1, 0.09, [3.4, 4.1, 5.7])
    coarse = simulate_market(m, 50.0, 2.0**-5, replications=100, seed=1).rates
    fine = simulate_market(m, 50.0, 2.0**-8, replications=100, seed=1).rates
    # independent noise, so only agreement within sampling error is testable here
    assert np.max(np.abs(coarse - fine)) < 0.03
