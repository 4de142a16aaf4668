import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadshape import curves
from loadshape.curves import DayType
from loadshape.errors import (
    AllZeroError,
    NegativeValueError,
    NonFiniteError,
    NotADivisorError,
    WrongLengthError,
)


def reinsch(y, lam):
    """Natural cubic smoothing spline at unit-spaced knots, solved directly."""
    n = y.size
    Q = np.zeros((n, n - 2))
    R = np.zeros((n - 2, n - 2))
    for j in range(n - 2):
        Q[j, j], Q[j + 1, j], Q[j + 2, j] = 1.0, -2.0, 1.0
        R[j, j] = 2.0 / 3.0
        if j + 1 < n - 2:
            R[j, j + 1] = R[j + 1, j] = 1.0 / 6.0
    K = Q @ np.linalg.solve(R, Q.T)
    return np.linalg.solve(np.eye(n) + lam * K, y)


def test_validate_rejects_bad_input():
    with pytest.raises(WrongLengthError):
        curves.check_values(np.ones(23))
    with pytest.raises(NegativeValueError):
        curves.check_values(np.r_[-1.0, np.ones(23)])
    with pytest.raises(NonFiniteError):
        curves.check_values(np.r_[np.nan, np.ones(23)])
    with pytest.raises(AllZeroError):
        curves.check_values(np.zeros(24))
    assert curves.check_values(np.zeros(24), allow_zero=True).sum() == 0


def test_curve_is_readonly_and_typed():
    c = curves.validate_curve(np.ones(24), "h1", dt.date(2021, 6, 12))
    assert c.day_type is DayType.WEEKEND
    assert c.curve_id == "h1:2021-06-12"
    with pytest.raises(ValueError):
        c.values[0] = 3.0


def test_smoothing_zero_is_identity():
    x = np.random.default_rng(0).uniform(0, 3, 24)
    c = curves.validate_curve(x, "h", dt.date(2021, 6, 7))
    np.testing.assert_array_equal(curves.smooth_spline(c, 0.0).values, x)


@pytest.mark.parametrize("s", [0.1, 0.5, 0.9, 1.0])
def test_constant_curve_survives_smoothing(s):
    np.testing.assert_allclose(curves.smooth_values(np.full(24, 1.7), s), 1.7, atol=1e-9)


@pytest.mark.parametrize("s", [0.2, 0.5, 0.8])
def test_impulse_matches_reinsch_oracle(s):
    y = np.zeros(24)
    y[11] = 5.0
    lam = curves.smoothing_to_lambda(s)
    expected = np.clip(reinsch(y, lam), 0.0, None)
    np.testing.assert_allclose(curves.smooth_values(y, s), expected, atol=1e-8)


def test_smoothing_range():
    with pytest.raises(ValueError):
        curves.smoothing_to_lambda(1.5)


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=24, max_size=24).filter(lambda v: sum(v) > 0))
@settings(max_examples=50, deadline=None)
def test_normalize_sums_to_one(v):
    assert curves.normalize(np.array(v)).sum() == pytest.approx(1.0)


def test_period_matrix_normalizes_each_slice():
    values = np.arange(1, 49, dtype=float).reshape(2, 24)
    P = curves.period_matrix(values, 3, 2)
    assert P.shape == (2, 8)
    np.testing.assert_allclose(P.sum(axis=1), 1.0)
    np.testing.assert_allclose(P[0] * values[0, 8:16].sum(), values[0, 8:16])


def test_split_periods_requires_divisor():
    with pytest.raises(NotADivisorError):
        curves.split_periods(np.ones(24), 5)
    parts = curves.split_periods(np.arange(24.0), 4)
    assert [p.size for p in parts] == [6] * 4
