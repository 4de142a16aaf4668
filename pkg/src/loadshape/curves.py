"""Load-curve data model: validation, smoothing, normalization and period slicing.

A load curve is one household-day of 24 hourly energy readings (kWh). All
functions here are pure and return fresh arrays.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.interpolate import make_smoothing_spline

from .errors import (
    AllZeroError,
    NegativeValueError,
    NonFiniteError,
    NotADivisorError,
    WrongLengthError,
)

HOURS = 24
VALID_PERIOD_COUNTS = (1, 2, 3, 4, 6, 8, 12, 24)


class DayType(str, Enum):
    WEEKDAY = "weekday"
    WEEKEND = "weekend"

    @classmethod
    def from_date(cls, date: dt.date) -> "DayType":
        return cls.WEEKEND if date.weekday() >= 5 else cls.WEEKDAY


@dataclass(frozen=True)
class LoadCurve:
    household_id: str
    date: dt.date
    values: np.ndarray = field(repr=False)
    day_type: DayType = DayType.WEEKDAY

    @property
    def curve_id(self) -> str:
        return f"{self.household_id}:{self.date.isoformat()}"

    def with_values(self, values: np.ndarray) -> "LoadCurve":
        return LoadCurve(self.household_id, self.date, _readonly(values), self.day_type)


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def check_values(raw: Sequence[float], *, allow_zero: bool = False) -> np.ndarray:
    """Validate 24 hourly readings and return them as a float array."""
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 1 or arr.size != HOURS:
        raise WrongLengthError(f"expected {HOURS} hourly values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("load curve contains NaN or infinite values")
    if np.any(arr < 0):
        raise NegativeValueError("load curve contains negative values")
    if not allow_zero and not np.any(arr > 0):
        raise AllZeroError("load curve is all zero")
    return arr


def validate_curve(
    raw: Sequence[float],
    household_id: str = "",
    date: dt.date | None = None,
    day_type: DayType | str | None = None,
) -> LoadCurve:
    """Build a :class:`LoadCurve` from raw readings, enforcing the data contract.

    ``day_type`` defaults to the type implied by ``date`` (Saturday and Sunday
    are weekend days).

    Raises
    ------
    WrongLengthError, NonFiniteError, NegativeValueError, AllZeroError
    """
    arr = check_values(raw)
    if date is None:
        date = dt.date(1970, 1, 1)
    if day_type is None:
        day_type = DayType.from_date(date)
    return LoadCurve(str(household_id), date, _readonly(arr), DayType(day_type))


def smoothing_to_lambda(smoothing: float) -> float:
    """Map the user-facing smoothing level in [0, 1] onto the spline penalty weight."""
    if not 0.0 <= smoothing <= 1.0:
        raise ValueError(f"smoothing must lie in [0, 1], got {smoothing}")
    if smoothing == 1.0:
        return np.inf
    return smoothing / (1.0 - smoothing)


def smooth_values(values: np.ndarray, smoothing: float) -> np.ndarray:
    lam = smoothing_to_lambda(smoothing)
    values = np.asarray(values, dtype=float)
    if lam == 0.0:
        return values.copy()
    hours = np.arange(values.size, dtype=float)
    if np.isinf(lam):
        # Infinite penalty leaves only the least-squares line.
        fitted = np.polynomial.Polynomial.fit(hours, values, 1)(hours)
    else:
        fitted = make_smoothing_spline(hours, values, lam=lam)(hours)
    return np.clip(fitted, 0.0, None)


def smooth_spline(curve: LoadCurve, smoothing: float = 0.0) -> LoadCurve:
    """Fit a natural cubic smoothing spline through the hourly points.

    The spline minimizes the residual sum of squares plus ``lam`` times the
    integrated squared second derivative, with ``lam = s / (1 - s)``
    (``s = 1`` gives the least-squares straight line). A
    smoothing level of 0 returns the readings unchanged; negative spline
    values are clamped to zero.
    """
    return curve.with_values(smooth_values(curve.values, smoothing))


def normalize_values(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    total = arr.sum()
    if not total > 0:
        raise AllZeroError("cannot normalize a curve whose values sum to zero")
    return arr / total


def normalize(curve: LoadCurve | np.ndarray) -> np.ndarray:
    """Scale a curve (or slice) so its values sum to one."""
    values = curve.values if isinstance(curve, LoadCurve) else curve
    return normalize_values(values)


def check_period_count(n_periods: int, length: int = HOURS) -> int:
    if n_periods < 1 or length % n_periods:
        raise NotADivisorError(f"n_p={n_periods} does not divide {length}")
    return length // n_periods


def split_periods(curve: LoadCurve | np.ndarray, n_periods: int) -> list[np.ndarray]:
    """Split a curve into ``n_periods`` contiguous equal-length slices, in order."""
    values = np.asarray(curve.values if isinstance(curve, LoadCurve) else curve, dtype=float)
    width = check_period_count(n_periods, values.size)
    return [values[i * width:(i + 1) * width].copy() for i in range(n_periods)]


def stack(curves: Sequence[LoadCurve]) -> np.ndarray:
    """Stack curve values into an (N, 24) array."""
    if not curves:
        return np.empty((0, HOURS))
    return np.vstack([c.values for c in curves])


def period_matrix(values: np.ndarray, n_periods: int, period: int, normalized: bool = True) -> np.ndarray:
    """Return the ``period``-th (1-based) slice of every row of ``values``.

    With ``normalized`` each slice is rescaled to sum to one independently.
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    width = check_period_count(n_periods, values.shape[1])
    if not 1 <= period <= n_periods:
        raise ValueError(f"period must be in 1..{n_periods}, got {period}")
    block = values[:, (period - 1) * width:period * width]
    if not normalized:
        return block.copy()
    sums = block.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        raise AllZeroError("a period slice sums to zero and cannot be normalized")
    return block / sums
