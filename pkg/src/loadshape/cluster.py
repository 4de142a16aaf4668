"""K-medoids clustering under DTW, a Euclidean K-means baseline and cluster quality."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dtw
from .errors import EmptyInputError, KTooLargeError, SingleCurveError

METRICS = ("dtw", "euclidean")


@dataclass(frozen=True)
class ClusterModel:
    """Prototypes and assignments for one period of the day.

    ``labels`` are 1-based cluster indices aligned with ``curve_ids``.
    ``medoids`` holds the row index of each prototype in the training data
    (``None`` for centroid models). ``wc_history`` records the within-cluster
    sum after every assignment/update sweep of the winning run.
    """

    metric: str
    k: int
    prototypes: np.ndarray
    labels: np.ndarray
    curve_ids: list[str] = field(default_factory=list)
    period: int = 1
    n_periods: int = 1
    seed: int | None = None
    medoids: list[int] | None = None
    wc_history: list[float] = field(default_factory=list)

    @property
    def assignments(self) -> dict[str, int]:
        return {cid: int(lab) for cid, lab in zip(self.curve_ids, self.labels)}


@dataclass(frozen=True)
class QualityReport:
    wc: float
    wb: float
    wcbcr: float | None
    entropies: dict[str, float] = field(default_factory=dict)

    @property
    def wcbcr_defined(self) -> bool:
        return self.wcbcr is not None

    @property
    def mean_entropy(self) -> float:
        return float(np.mean(list(self.entropies.values()))) if self.entropies else math.nan


def distance_matrix(X, metric: str = "dtw") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if metric == "dtw":
        return dtw.pairwise_distances(X)
    if metric == "euclidean":
        sq = np.einsum("ij,ij->i", X, X)
        D = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
        return np.maximum(D, 0.0)
    raise ValueError(f"unknown metric {metric!r}")


def cross_distance(X, P, metric: str = "dtw") -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if metric == "dtw":
        return dtw.cross_distances(X, P)
    if metric == "euclidean":
        return ((X[:, None, :] - P[None, :, :]) ** 2).sum(axis=2)
    raise ValueError(f"unknown metric {metric!r}")


def _check_inputs(X, k: int) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInputError("no curves to cluster")
    if k < 1:
        raise ValueError("K must be at least 1")
    _, first = np.unique(X, axis=0, return_index=True)
    distinct = np.sort(first)
    if k > distinct.size:
        raise KTooLargeError(f"K={k} exceeds the {distinct.size} distinct curves")
    return X, distinct


def _restart_rngs(seed: int | None, restarts: int) -> list[np.random.Generator]:
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    children = np.random.SeedSequence(seed).spawn(restarts)
    return [np.random.default_rng(c) for c in children]


def _pam(D: np.ndarray, init: np.ndarray, max_iter: int):
    n = D.shape[0]
    k = init.size
    rows = np.arange(n)
    medoids = init.copy()
    labels = np.argmin(D[:, medoids], axis=1)
    history = [float(D[rows, medoids[labels]].sum())]
    for _ in range(max_iter):
        # Empty clusters take the curve farthest from its current medoid.
        for c in range(k):
            if not np.any(labels == c):
                far = int(np.argmax(D[rows, medoids[labels]]))
                medoids[c] = far
                labels[far] = c
        for c in range(k):
            members = np.flatnonzero(labels == c)
            cost = D[np.ix_(members, members)].sum(axis=0)
            medoids[c] = members[int(np.argmin(cost))]
        history.append(float(D[rows, medoids[labels]].sum()))
        new_labels = np.argmin(D[:, medoids], axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        history.append(float(D[rows, medoids[labels]].sum()))
    return medoids, labels, history[-1], history


def kmedoids_dtw(
    curves,
    k: int,
    seed: int | None = 0,
    max_iter: int = 100,
    restarts: int = 1,
    curve_ids: Sequence[str] | None = None,
    distances: np.ndarray | None = None,
    metric: str = "dtw",
    period: int = 1,
    n_periods: int = 1,
) -> ClusterModel:
    """Partition curves around K medoids under DTW (or any cached metric).

    Each run starts from K distinct curves drawn uniformly at random and
    alternates nearest-medoid assignment with the medoid update that
    minimizes summed distance inside each cluster, until assignments stop
    changing or ``max_iter`` sweeps have run. The run with lowest final
    within-cluster sum wins; ties keep the earliest restart.

    ``distances`` may supply a precomputed (N, N) matrix so that sweeps over
    several K reuse one DTW computation.
    """
    X, distinct = _check_inputs(curves, k)
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    D = distance_matrix(X, metric) if distances is None else np.asarray(distances)
    best = None
    for rng in _restart_rngs(seed, restarts):
        init = np.sort(rng.choice(distinct, size=k, replace=False))
        run = _pam(D, init, max_iter)
        if best is None or run[2] < best[2]:
            best = run
    medoids, labels, _, history = best
    ids = list(curve_ids) if curve_ids is not None else [str(i) for i in range(X.shape[0])]
    return ClusterModel(
        metric=metric,
        k=k,
        prototypes=X[medoids].copy(),
        labels=labels + 1,
        curve_ids=ids,
        period=period,
        n_periods=n_periods,
        seed=seed,
        medoids=[int(m) for m in medoids],
        wc_history=history,
    )


def _lloyd(X: np.ndarray, init: np.ndarray, max_iter: int):
    centroids = X[init].copy()
    k = init.size
    labels = None
    history = []
    for _ in range(max_iter):
        dist = cross_distance(X, centroids, "euclidean")
        new_labels = np.argmin(dist, axis=1)
        for c in range(k):
            if not np.any(new_labels == c):
                far = int(np.argmax(dist[np.arange(len(X)), new_labels]))
                new_labels[far] = c
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centroids = np.vstack([X[labels == c].mean(axis=0) for c in range(k)])
        history.append(float(cross_distance(X, centroids, "euclidean")[np.arange(len(X)), labels].sum()))
    wc = float(cross_distance(X, centroids, "euclidean")[np.arange(len(X)), labels].sum())
    return centroids, labels, wc, history


def kmeans_euclidean(
    curves,
    k: int,
    seed: int | None = 0,
    max_iter: int = 100,
    restarts: int = 1,
    curve_ids: Sequence[str] | None = None,
    period: int = 1,
    n_periods: int = 1,
) -> ClusterModel:
    """Lloyd K-means with squared Euclidean distance and mean centroids."""
    X, distinct = _check_inputs(curves, k)
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    best = None
    for rng in _restart_rngs(seed, restarts):
        init = np.sort(rng.choice(distinct, size=k, replace=False))
        run = _lloyd(X, init, max_iter)
        if best is None or run[2] < best[2]:
            best = run
    centroids, labels, _, history = best
    ids = list(curve_ids) if curve_ids is not None else [str(i) for i in range(X.shape[0])]
    return ClusterModel(
        metric="euclidean",
        k=k,
        prototypes=centroids,
        labels=labels + 1,
        curve_ids=ids,
        period=period,
        n_periods=n_periods,
        seed=seed,
        wc_history=history,
    )


def cluster_curves(curves, k: int, metric: str = "dtw", **kwargs) -> ClusterModel:
    if metric == "dtw":
        return kmedoids_dtw(curves, k, **kwargs)
    if metric == "euclidean":
        kwargs.pop("distances", None)
        return kmeans_euclidean(curves, k, **kwargs)
    raise ValueError(f"unknown metric {metric!r}")


def household_entropy(labels: Sequence[int], k: int | None = None) -> float:
    """Base-M entropy of one household's cluster histogram over its M curves.

    0 means every curve falls in one cluster; 1 means every curve has its own.
    """
    labels = np.asarray(labels, dtype=int)
    m = labels.size
    if m < 2:
        raise SingleCurveError("entropy needs at least two curves per household")
    _, counts = np.unique(labels, return_counts=True)
    p = counts / m
    return float(max(0.0, -np.sum(p * np.log(p)) / np.log(m)))


def quality(
    model: ClusterModel,
    curves,
    households: Sequence[str] | None = None,
    metric: str | None = None,
) -> QualityReport:
    """Within-cluster sum, between-prototype sum, their ratio and household entropies.

    ``metric`` defaults to the model's own metric; pass ``"dtw"`` to score a
    Euclidean model with DTW. ``WCBCR`` is ``None`` when WB is zero (K=1).
    """
    metric = metric or model.metric
    X = np.asarray(curves, dtype=float)
    labels = np.asarray(model.labels) - 1
    dist = cross_distance(X, model.prototypes, metric)
    wc = float(dist[np.arange(X.shape[0]), labels].sum())
    P = distance_matrix(model.prototypes, metric)
    wb = float(P[np.triu_indices(model.k, 1)].sum())
    wcbcr = wc / wb if wb > 0 else None
    entropies = {}
    if households is not None:
        by_house: dict[str, list[int]] = {}
        for h, lab in zip(households, model.labels):
            by_house.setdefault(h, []).append(int(lab))
        entropies = {h: household_entropy(labs, model.k) for h, labs in sorted(by_house.items())
                     if len(labs) >= 2}
    return QualityReport(wc=wc, wb=wb, wcbcr=wcbcr, entropies=entropies)
