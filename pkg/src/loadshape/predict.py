"""Markov shape-based next-day load prediction.

Each day is cut into ``n_p`` periods and every period slice is encoded by the
index of its nearest (DTW) prototype. For period ``p`` the next cluster is
modelled conditionally on the context

    (a[d, 1], ..., a[d, p-1], a[d-1, p], ..., a[d-1, n_p])

i.e. the periods already seen today followed by the remaining periods of
yesterday. Predicted prototypes are rescaled to energy units by a least
squares fit against past forecasts. Cluster indices are 1-based.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import cluster as clustering
from . import dtw
from .curves import DayType, LoadCurve, check_period_count, normalize_values, period_matrix
from .errors import (
    AllZeroError,
    InsufficientHistoryError,
    NoHistoryError,
    ZeroActualError,
)

Context = tuple[int, ...]


def dp_enc(slice_values, prototypes) -> int:
    """Index (1-based) of the prototype nearest, under DTW, to the normalized slice."""
    prototypes = np.atleast_2d(np.asarray(prototypes, dtype=float))
    if prototypes.shape[0] == 0:
        raise ValueError("no prototypes supplied")
    try:
        x = normalize_values(slice_values)
    except AllZeroError as exc:
        raise AllZeroError("cannot encode an all-zero slice") from exc
    dist = dtw.cross_distances(x[None, :], prototypes)[0]
    return int(np.argmin(dist)) + 1


def encode_days(values, prototypes: Sequence[np.ndarray]) -> np.ndarray:
    """Encode every period of every day; returns a (D, n_p) array of 1-based indices."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n_periods = len(prototypes)
    out = np.empty((values.shape[0], n_periods), dtype=int)
    for p in range(1, n_periods + 1):
        slices = period_matrix(values, n_periods, p)
        dist = dtw.cross_distances(slices, prototypes[p - 1])
        out[:, p - 1] = np.argmin(dist, axis=1) + 1
    return out


def context_of(encoded: np.ndarray, day: int, period: int) -> Context:
    """Conditioning tuple for ``period`` (1-based) of row ``day`` (0-based, >= 1)."""
    return tuple(int(a) for a in encoded[day, :period - 1]) + tuple(
        int(a) for a in encoded[day - 1, period - 1:])


@dataclass(frozen=True)
class TransitionModel:
    """Empirical conditional distribution of one period's cluster given its context.

    ``counts`` maps each observed context to outcome counts over clusters
    1..K; probabilities are plain count ratios. ``fallback`` holds outcome
    counts used when a context was never observed.
    """

    period: int
    k: int
    n_periods: int
    counts: dict[Context, np.ndarray]
    fallback: np.ndarray
    day_type: DayType | None = None
    majority: int = 1

    @property
    def probabilities(self) -> dict[Context, np.ndarray]:
        return {g: c / c.sum() for g, c in self.counts.items()}

    def distribution(self, context: Context) -> np.ndarray | None:
        counts = self.counts.get(tuple(context))
        if counts is None:
            counts = self.fallback
        if counts.sum() == 0:
            return None
        return counts / counts.sum()

    def predict(self, context: Context) -> int:
        """Most probable next cluster; ties go to the lowest index."""
        probs = self.distribution(context)
        if probs is None:
            return self.majority
        return int(np.argmax(probs)) + 1


def estimate_transitions(
    contexts: Sequence[Context],
    outcomes: Sequence[int],
    k: int,
    period: int,
    n_periods: int,
    fallback: Sequence[int] | None = None,
    day_type: DayType | None = None,
) -> TransitionModel:
    """Count-ratio transition model from explicit (context, outcome) observations.

    ``fallback`` lists extra cluster observations used for unseen contexts;
    it defaults to the observed outcomes.
    """
    counts: dict[Context, np.ndarray] = {}
    for g, a in zip(contexts, outcomes):
        if not 1 <= a <= k:
            raise ValueError(f"cluster index {a} outside 1..{k}")
        counts.setdefault(tuple(int(v) for v in g), np.zeros(k, dtype=np.int64))[a - 1] += 1
    pool = np.asarray(list(outcomes) if fallback is None else list(fallback), dtype=int)
    marginal = np.bincount(pool - 1, minlength=k)[:k]
    every = np.concatenate([np.asarray(outcomes, dtype=int), pool])
    majority = int(np.argmax(np.bincount(every - 1, minlength=k))) + 1 if every.size else 1
    return TransitionModel(period, k, n_periods, dict(sorted(counts.items())), marginal, day_type, majority)


def p_transition(
    encoded,
    period: int,
    k: int,
    day_types: Sequence[DayType] | None = None,
    day_type: DayType | None = None,
    include: Sequence[bool] | None = None,
) -> TransitionModel:
    """Transition model for ``period`` from a run of consecutive encoded days.

    Only days whose predecessor is also present contribute. With
    ``day_type`` set, only target days of that type are counted. ``include``
    masks out days (e.g. a held-out day) together with the transitions
    touching them.
    """
    encoded = np.atleast_2d(np.asarray(encoded, dtype=int))
    n_days, n_periods = encoded.shape
    if n_days < 2:
        raise InsufficientHistoryError("at least two encoded days are required")
    mask = np.ones(n_days, bool) if include is None else np.asarray(include, bool)
    contexts, outcomes, seen = [], [], []
    for d in range(n_days):
        if not mask[d]:
            continue
        if day_type is None or day_types is None or day_types[d] == day_type:
            seen.append(int(encoded[d, period - 1]))
            if d >= 1 and mask[d - 1]:
                contexts.append(context_of(encoded, d, period))
                outcomes.append(int(encoded[d, period - 1]))
    if not seen:
        seen = [int(a) for a in encoded[mask, period - 1]]
    return estimate_transitions(contexts, outcomes, k, period, n_periods, fallback=seen, day_type=day_type)


def predict_encoding(models: Sequence[TransitionModel], previous: Sequence[int]) -> tuple[int, ...]:
    """Predict tomorrow's per-period clusters period by period from today's encoding."""
    n_periods = len(models)
    rows = np.zeros((2, n_periods), dtype=int)
    rows[0] = previous
    for p in range(1, n_periods + 1):
        rows[1, p - 1] = models[p - 1].predict(context_of(rows, 1, p))
    return tuple(int(a) for a in rows[1])


def build_models(
    encoded: np.ndarray,
    k: int,
    day_types: Sequence[DayType] | None = None,
    target_type: DayType | None = None,
    include: Sequence[bool] | None = None,
) -> list[TransitionModel]:
    n_periods = encoded.shape[1]
    split = day_types is not None and target_type is not None
    return [p_transition(encoded, p, k, day_types if split else None,
                         target_type if split else None, include)
            for p in range(1, n_periods + 1)]


@dataclass(frozen=True)
class ShapeForecast:
    indices: tuple[int, ...]
    shapes: list[np.ndarray]
    encoded: np.ndarray
    models: list[TransitionModel]

    @property
    def curve(self) -> np.ndarray:
        return np.concatenate(self.shapes)


def _period_prototypes(prototypes) -> list[np.ndarray]:
    protos = [np.atleast_2d(np.asarray(P, dtype=float)) for P in prototypes]
    if not protos:
        raise ValueError("no prototypes supplied")
    k = {P.shape[0] for P in protos}
    if len(k) != 1:
        raise ValueError("every period needs the same number of prototypes")
    return protos


def shape_predict(
    history,
    prototypes,
    day_types: Sequence[DayType] | None = None,
    target_type: DayType | None = None,
) -> ShapeForecast:
    """Predict the next day's per-period prototypes from ``D >= 2`` days of history.

    With ``day_types`` and ``target_type`` the transition counts only use
    target days of the forecast's day type.
    """
    history = np.atleast_2d(np.asarray(history, dtype=float))
    if history.shape[0] < 2:
        raise InsufficientHistoryError("shape prediction needs at least two days of history")
    protos = _period_prototypes(prototypes)
    k = protos[0].shape[0]
    encoded = encode_days(history, protos)
    models = build_models(encoded, k, day_types, target_type)
    indices = predict_encoding(models, encoded[-1])
    shapes = [protos[p][a - 1].copy() for p, a in enumerate(indices)]
    return ShapeForecast(indices, shapes, encoded, models)


def scale_forecast(shape, past_shapes, past_actuals, beta: float = 1.0) -> tuple[float, np.ndarray]:
    """Least-squares scale for a predicted shape from past (shape, actual) pairs.

    Pairs are ordered oldest first; the pair ``i`` of ``M`` gets weight
    ``beta ** (M - 1 - i)``, so ``beta = 1`` is the unweighted fit.
    Returns ``(alpha, alpha * shape)``.
    """
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    S = np.atleast_2d(np.asarray(past_shapes, dtype=float))
    X = np.atleast_2d(np.asarray(past_actuals, dtype=float))
    if S.size == 0 or S.shape[0] == 0:
        raise NoHistoryError("no past forecasts to fit the scale against")
    if S.shape != X.shape:
        raise ValueError("past shapes and actuals must align")
    w = beta ** np.arange(S.shape[0] - 1, -1, -1, dtype=float)
    # Day-ordered sums of plain dot products: beta = 1 is the unweighted formula bit for bit.
    num = sum(float(wi) * float(s @ x) for wi, s, x in zip(w, S, X))
    den = sum(float(wi) * float(s @ s) for wi, s in zip(w, S))
    if den == 0:
        raise NoHistoryError("past forecast shapes are all zero")
    alpha = num / den
    return alpha, alpha * np.asarray(shape, dtype=float)


def scale_naive(shape, past_actuals) -> tuple[float, np.ndarray]:
    """Scale a shape so its total equals the mean total of past slices."""
    X = np.atleast_2d(np.asarray(past_actuals, dtype=float))
    if X.shape[0] == 0 or X.size == 0:
        raise NoHistoryError("no past load to scale against")
    shape = np.asarray(shape, dtype=float)
    total = shape.sum()
    if total == 0:
        raise AllZeroError("predicted shape sums to zero")
    alpha = X.sum() / (X.shape[0] * total)
    return float(alpha), alpha * shape


def dtwe(pred, actual) -> float:
    """Normalized DTW error ``sqrt(DTW(pred, actual) / ||actual||^2)``."""
    actual = np.asarray(actual, dtype=float)
    ref = float(actual @ actual)
    if ref == 0:
        raise ZeroActualError("actual curve is all zero")
    return float(np.sqrt(dtw.dtw_distance(pred, actual) / ref))


@dataclass(frozen=True)
class Forecast:
    indices: tuple[int, ...]
    shapes: list[np.ndarray]
    alphas: list[float]
    values: np.ndarray
    method: str = "markov"
    scaling: str = "fit"


def _width(history: np.ndarray, n_periods: int) -> int:
    return check_period_count(n_periods, history.shape[1])


def _scaled(indices, shapes, history, pairs, n_periods, beta) -> Forecast:
    width = _width(history, n_periods)
    alphas, parts = [], []
    for p in range(n_periods):
        cols = slice(p * width, (p + 1) * width)
        if pairs:
            S = np.vstack([s[p] for s, _ in pairs])
            X = np.vstack([x[cols] for _, x in pairs])
            alpha, part = scale_forecast(shapes[p], S, X, beta)
        else:
            alpha, part = scale_naive(shapes[p], history[:, cols])
        alphas.append(alpha)
        parts.append(part)
    return Forecast(tuple(indices), list(shapes), alphas, np.concatenate(parts),
                    scaling="fit" if pairs else "naive")


def forecast_next_day(
    history,
    prototypes,
    day_types: Sequence[DayType] | None = None,
    target_type: DayType | None = None,
    beta: float = 1.0,
) -> Forecast:
    """Shape prediction plus scaling for the day after ``history``.

    Past forecasts are replayed day by day (each from the history before
    it), and the scale is fitted to those (shape, actual) pairs; without any
    past forecast the naive mean-total scale is used.
    """
    history = np.atleast_2d(np.asarray(history, dtype=float))
    protos = _period_prototypes(prototypes)
    shape = shape_predict(history, protos, day_types, target_type)
    k = protos[0].shape[0]
    pairs = []
    for d in range(2, history.shape[0]):
        types = day_types[:d] if day_types is not None else None
        target = day_types[d] if day_types is not None and target_type is not None else None
        models = build_models(shape.encoded[:d], k, types, target)
        idx = predict_encoding(models, shape.encoded[d - 1])
        pairs.append(([protos[p][a - 1] for p, a in enumerate(idx)], history[d]))
    return _scaled(shape.indices, shape.shapes, history, pairs, len(protos), beta)


def persistence_forecast(history) -> np.ndarray:
    """Naive baseline: tomorrow repeats today."""
    history = np.atleast_2d(np.asarray(history, dtype=float))
    if history.shape[0] == 0:
        raise NoHistoryError("no history to persist")
    return history[-1].copy()


# Leave-one-out model selection ----------------------------------------------------

@dataclass
class Household:
    household_id: str
    values: np.ndarray
    day_types: list[DayType]


def group_households(curves: Sequence[LoadCurve]) -> list[Household]:
    """Group curves by household, ordered by date."""
    by_house: dict[str, list[LoadCurve]] = {}
    for c in curves:
        by_house.setdefault(c.household_id, []).append(c)
    out = []
    for hid in sorted(by_house):
        days = sorted(by_house[hid], key=lambda c: c.date)
        out.append(Household(hid, np.vstack([c.values for c in days]), [c.day_type for c in days]))
    return out


def loo_dtwe(house: Household, protos: list[np.ndarray], split_day_type: bool = True) -> list[tuple[float, DayType]]:
    """Leave-one-day-out DTWE for every day that has a predecessor.

    For held-out day ``t`` the Markov models use the other days only, the
    context is the actual encoding of day ``t - 1``, and the scale is fitted
    to in-sample forecasts of the remaining days.
    """
    values = house.values
    n_days = values.shape[0]
    if n_days < 3:
        raise InsufficientHistoryError("leave-one-out needs at least three days per household")
    k = protos[0].shape[0]
    n_periods = len(protos)
    encoded = encode_days(values, protos)
    types = house.day_types if split_day_type else None
    results = []
    for t in range(1, n_days):
        include = np.ones(n_days, bool)
        include[t] = False
        cache: dict = {}

        def models_for(day_type):
            key = day_type if types is not None else None
            if key not in cache:
                cache[key] = build_models(encoded, k, types, key, include)
            return cache[key]

        idx = predict_encoding(models_for(house.day_types[t]), encoded[t - 1])
        shapes = [protos[p][a - 1] for p, a in enumerate(idx)]
        pairs = []
        for d in range(1, n_days):
            if include[d] and include[d - 1]:
                past = predict_encoding(models_for(house.day_types[d]), encoded[d - 1])
                pairs.append(([protos[p][a - 1] for p, a in enumerate(past)], values[d]))
        train = values[include]
        forecast = _scaled(idx, shapes, train, pairs, n_periods, 1.0)
        results.append((dtwe(forecast.values, values[t]), house.day_types[t]))
    return results


@dataclass(frozen=True)
class SelectionRow:
    k: int
    n_periods: int
    mean_dtwe: float
    weekday_dtwe: float | None = None
    weekend_dtwe: float | None = None
    folds: int = 0


def cluster_periods(values, k: int, n_periods: int, seed: int | None = 0, restarts: int = 1,
                    max_iter: int = 100, distances: list[np.ndarray] | None = None,
                    metric: str = "dtw", curve_ids=None) -> list[clustering.ClusterModel]:
    """Cluster each period's normalized slices separately (one model per period)."""
    models = []
    for p in range(1, n_periods + 1):
        X = period_matrix(values, n_periods, p)
        kwargs = dict(seed=seed, restarts=restarts, max_iter=max_iter, curve_ids=curve_ids,
                      period=p, n_periods=n_periods)
        if metric == "dtw":
            kwargs["distances"] = distances[p - 1] if distances is not None else None
        models.append(clustering.cluster_curves(X, k, metric, **kwargs))
    return models


def model_select(
    curves: Sequence[LoadCurve],
    k_grid: Sequence[int],
    np_grid: Sequence[int],
    seed: int | None = 0,
    restarts: int = 1,
    split_day_type: bool | None = None,
    progress=None,
) -> list[SelectionRow]:
    """Mean leave-one-out DTWE for every (K, n_p) pair.

    Prototypes are fitted once per pair on all supplied curves. Day-type
    split models are used when the data contain both weekdays and weekends
    (unless ``split_day_type`` says otherwise), and the per-type means are
    reported alongside the overall mean.
    """
    houses = group_households(curves)
    if not houses:
        raise ValueError("no households supplied")
    for h in houses:
        if h.values.shape[0] < 3:
            raise InsufficientHistoryError(f"household {h.household_id} has fewer than 3 days")
    values = np.vstack([h.values for h in houses])
    both_types = len({t for h in houses for t in h.day_types}) == 2
    split = both_types if split_day_type is None else split_day_type
    rows = []
    for n_periods in np_grid:
        distances = [dtw.pairwise_distances(period_matrix(values, n_periods, p))
                     for p in range(1, n_periods + 1)]
        for k in k_grid:
            models = cluster_periods(values, k, n_periods, seed, restarts, distances=distances)
            protos = [m.prototypes for m in models]
            errors = [r for h in houses for r in loo_dtwe(h, protos, split)]
            overall = float(np.mean([e for e, _ in errors]))
            by_type = {t: [e for e, tt in errors if tt == t] for t in DayType}
            rows.append(SelectionRow(
                k=k,
                n_periods=n_periods,
                mean_dtwe=overall,
                weekday_dtwe=float(np.mean(by_type[DayType.WEEKDAY])) if both_types and by_type[DayType.WEEKDAY] else None,
                weekend_dtwe=float(np.mean(by_type[DayType.WEEKEND])) if both_types and by_type[DayType.WEEKEND] else None,
                folds=len(errors),
            ))
            if progress is not None:
                progress(rows[-1])
    return sorted(rows, key=lambda r: (r.k, r.n_periods))
