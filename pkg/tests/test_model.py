import numpy as np
import pytest
from hypothesis import given, strategies as st

from discdrift.errors import ParameterError
from discdrift.model import (
    CATALOG,
    Direction,
    PiecewiseDrift,
    SdeSpec,
    catalog,
    classify,
    evaluate,
    region_index,
)

SIGN = PiecewiseDrift((0.0,), (-1.0, 1.0))


def test_evaluate_examples():
    assert evaluate(SIGN, -0.5) == -1.0
    assert evaluate(CATALOG["elementary_minus34"], 1.4) == 4.0
    assert evaluate(CATALOG["elementary_minus34"], 1.3999999) == -3.0


def test_region_index_convention():
    assert region_index(SIGN, 0.0) == 2
    assert region_index(SIGN, -1e-12) == 1
    flat = PiecewiseDrift((), (2.5,))
    assert region_index(flat, -1e300) == region_index(flat, 1e300) == 1
    assert list(region_index(SIGN, np.array([-1.0, 0.0, 1.0]))) == [1, 2, 2]


def _brute_force(bps, vals, x):
    for b, v in zip(bps, vals):
        if x < b:
            return v
    return vals[-1]


@given(
    st.lists(st.floats(-100, 100), min_size=0, max_size=5, unique=True),
    st.data(),
)
def test_evaluate_matches_linear_scan(bps, data):
    bps = sorted(bps)
    vals = data.draw(st.lists(st.floats(-50, 50), min_size=len(bps) + 1, max_size=len(bps) + 1))
    drift = PiecewiseDrift(tuple(bps), tuple(vals))
    xs = data.draw(st.lists(st.one_of(st.floats(-200, 200), st.sampled_from(bps or [0.0])), min_size=1))
    for x in xs:
        assert drift(x) == _brute_force(bps, vals, x)
    assert np.array_equal(drift(np.array(xs)), [_brute_force(bps, vals, x) for x in xs])


def test_validation():
    with pytest.raises(ParameterError):
        PiecewiseDrift((0.0,), (1.0,))
    with pytest.raises(ParameterError):
        PiecewiseDrift((1.0, 0.0), (1.0, 2.0, 3.0))
    with pytest.raises(ParameterError):
        PiecewiseDrift((0.0, 0.0), (1.0, 2.0, 3.0))
    with pytest.raises(ParameterError):
        PiecewiseDrift((float("nan"),), (1.0, 2.0))
    with pytest.raises(ParameterError):
        SdeSpec(SIGN, sigma=0.0)
    with pytest.raises(ParameterError):
        SdeSpec(SIGN, horizon=-1.0)


def test_classify():
    assert classify(CATALOG["minusSign"]).kind is Direction.INWARD
    assert classify(CATALOG["minusSign"]).point == 0.0
    out = classify(CATALOG["elementary_minus34"])
    assert out.kind is Direction.OUTWARD and out.point == 1.4
    assert classify(PiecewiseDrift((), (1.0,))).kind is Direction.NEITHER
    assert classify(PiecewiseDrift((0.0, 1.0), (1.0, -1.0, 1.0))).kind is Direction.NEITHER
    assert classify(PiecewiseDrift((0.0,), (0.0, 1.0))).kind is Direction.NEITHER


def test_catalog_entries():
    assert len(CATALOG) == 8
    ten = catalog("10sign").drift
    assert ten.breakpoints == (0.0,) and ten.values == (-10.0, 10.0)
    el = catalog("elementary1minus0.6", xi=1.4)
    assert el.drift.breakpoints == (1.4,) and el.drift.values == (1.0, -0.6)
    assert el.initial_value == 1.4 and el.sigma == 1.0 and el.horizon == 1.0
    assert classify(catalog("sign").drift) == classify(SIGN)
    assert classify(SIGN).kind is Direction.OUTWARD
    for name, drift in CATALOG.items():
        expected = Direction.INWARD if drift.values[0] > 0 else Direction.OUTWARD
        assert classify(drift).kind is expected, name
    with pytest.raises(KeyError):
        catalog("nope")


def test_negate_flips_direction():
    assert classify(CATALOG["sign"].negate()).kind is Direction.INWARD
    assert CATALOG["sign"].negate() == CATALOG["minusSign"]
