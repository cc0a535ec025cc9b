import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sslstm.errors import LengthMismatch, ZeroDenominator
from sslstm.metrics import all_metrics, mae, mape, r2, rmse


def test_identical_series():
    y = [1.0, 2.0, 5.0]
    assert rmse(y, y) == mae(y, y) == mape(y, y) == 0.0
    assert r2(y, y) == 1.0


def test_hand_computed_errors():
    y, yhat = [1, 2, 3], [1, 2, 4]
    assert rmse(y, yhat) == math.sqrt(1 / 3)
    assert mae(y, yhat) == 1 / 3
    assert mape(y, yhat) == 1 / 9


def test_r2_can_exceed_one():
    assert r2([1, 2, 3], [0, 2, 4]) == 4.0


def test_errors():
    with pytest.raises(LengthMismatch):
        rmse([1, 2], [1])
    with pytest.raises(LengthMismatch):
        mae([], [])
    with pytest.raises(ZeroDenominator):
        mape([0, 1], [1, 1])
    with pytest.raises(ZeroDenominator):
        r2([2, 2, 2], [1, 2, 3])


def test_all_metrics_marks_undefined_as_none():
    m = all_metrics([0.0, 1.0, 2.0], [0.5, 1.0, 2.0])
    assert m["MAPE"] is None and m["R2"] is not None
    assert list(m) == ["RMSE", "MAPE", "MAE", "R2"]


# values below 1e-100 are flushed to zero so squared errors never go subnormal
value = st.floats(-1e3, 1e3).map(lambda v: 0.0 if abs(v) < 1e-100 else v)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(value, value), min_size=1, max_size=40))
def test_power_mean_ordering(pairs):
    y, yhat = np.array(pairs).T
    assert 0 <= mae(y, yhat) <= rmse(y, yhat) * (1 + 1e-12) + 1e-300
    assert (rmse(y, yhat) == 0) == bool(np.all(y == yhat))
