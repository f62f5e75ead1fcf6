import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from discdrift.errors import ParameterError
from discdrift.noise import coarsen, coarsen_arrays, generate, generate_block, stream


def test_generate_shapes_and_determinism():
    a = generate(1, 0, 14, 1.0)
    b = generate(1, 0, 14, 1.0)
    assert a.increments.shape == a.bridge_integrals.shape == (2**14,)
    assert a.fine_step == 2.0**-14
    assert np.array_equal(a.increments, b.increments)
    assert np.array_equal(a.bridge_integrals, b.bridge_integrals)
    assert not a.increments.flags.writeable


def test_replications_and_seeds_are_distinct_streams():
    base = generate(1, 0, 8, 1.0).increments
    assert not np.array_equal(base, generate(1, 1, 8, 1.0).increments)
    assert not np.array_equal(base, generate(2, 0, 8, 1.0).increments)


def test_block_rows_match_single_paths():
    inc, bri = generate_block(7, 3, 6, 6, 2.0)
    for row, rep in enumerate(range(3, 6)):
        path = generate(7, rep, 6, 2.0)
        assert np.array_equal(inc[row], path.increments)
        assert np.array_equal(bri[row], path.bridge_integrals)


def test_increments_do_not_depend_on_bridge_draws():
    with_bridge, _ = generate_block(3, 0, 4, 7, 1.0, bridge=True)
    without, none = generate_block(3, 0, 4, 7, 1.0, bridge=False)
    assert none is None
    assert np.array_equal(with_bridge, without)


def test_increment_variance():
    dt = 2.0**-4
    # 2^20 steps of size 2^-4 in one path
    dw = generate(11, 0, 20, 2.0**16).increments
    sq = dw**2
    se = sq.std(ddof=1) / math.sqrt(sq.size)
    assert abs(sq.mean() - dt) < 3 * se


def _covariance_oracle(samples, substeps, rng):
    # simulate W on a fine sub-grid of [0, 1] and integrate it with the trapezoid rule
    h = 1.0 / substeps
    w = np.cumsum(math.sqrt(h) * rng.standard_normal((samples, substeps)), axis=1)
    w = np.concatenate([np.zeros((samples, 1)), w], axis=1)
    integral = h * (w[:, 1:-1].sum(axis=1) + 0.5 * w[:, -1])
    return w[:, -1], integral


def test_increment_integral_covariance_at_unit_step():
    path = generate(5, 0, 20, 2.0**20)
    dw, ii = path.increments, path.bridge_integrals
    oracle_dw, oracle_ii = _covariance_oracle(200_000, 64, np.random.default_rng(0))
    expected = {
        "var_dw": (oracle_dw**2).mean(),
        "cov": (oracle_dw * oracle_ii).mean(),
        "var_int": (oracle_ii**2).mean(),
    }
    # the oracle itself should land on the Ito covariance [[1, 1/2], [1/2, 1/3]]
    for key, exact in (("var_dw", 1.0), ("cov", 0.5), ("var_int", 1.0 / 3.0)):
        assert abs(expected[key] - exact) < 0.01
    for prod, exact in ((dw * dw, 1.0), (dw * ii, 0.5), (ii * ii, 1.0 / 3.0)):
        se = prod.std(ddof=1) / math.sqrt(prod.size)
        assert abs(prod.mean() - exact) < 3 * se
    assert abs(ii.mean()) < 3 * ii.std() / math.sqrt(ii.size)


def test_coarsen_identity_and_pairs():
    path = generate(1, 0, 10, 1.0)
    inc, ii = coarsen(path, 10)
    assert inc is path.increments and ii is path.bridge_integrals
    inc9, _ = coarsen(path, 9)
    assert np.array_equal(inc9, path.increments[0::2] + path.increments[1::2])


def test_coarsen_conserves_total_increment():
    path = generate(2, 0, 12, 1.0)
    total = np.cumsum(path.increments)[-1]
    for e in range(0, 12):
        inc, _ = coarsen(path, e)
        assert math.isclose(inc.sum(), total, rel_tol=0, abs_tol=1e-12)
    one, _ = coarsen(path, 0)
    assert one[0] == total


def test_coarse_integrals_match_trapezoid_quadrature():
    path = generate(4, 0, 10, 1.0)
    w = np.concatenate([[0.0], np.cumsum(path.increments)])
    factor = 2**4
    inc, ii = coarsen(path, 6)
    h = path.fine_step
    for k in range(len(inc)):
        seg = w[k * factor:(k + 1) * factor + 1] - w[k * factor]
        oracle = h * (seg[1:-1].sum() + 0.5 * (seg[0] + seg[-1]))
        assert math.isclose(ii[k], oracle, rel_tol=1e-9, abs_tol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2**32))
def test_coarsening_composes(fine, seed):
    path = generate(seed, 0, fine, 1.0)
    direct, _ = coarsen(path, fine - 2)
    half, _ = coarsen_arrays(np.asarray(path.increments), path.fine_step, 2, integrals=False)
    twice, _ = coarsen_arrays(half, 2 * path.fine_step, 2, integrals=False)
    assert np.allclose(direct, twice, rtol=0, atol=1e-12)


def test_invalid_arguments():
    path = generate(1, 0, 4, 1.0)
    with pytest.raises(ParameterError):
        coarsen(path, 5)
    with pytest.raises(ParameterError):
        coarsen(path, -1)
    with pytest.raises(ParameterError):
        generate(1, 0, 0, 1.0)
    with pytest.raises(ParameterError):
        generate(1, 0, 4, -1.0)
    with pytest.raises(ParameterError):
        generate(1, -1, 4, 1.0)
    with pytest.raises(ParameterError):
        stream(2**64)
    stream(2**64 - 1)
