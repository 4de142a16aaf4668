"""Constrained dynamic time warping with a symmetric five-step pattern.

Every step advances at least one index by one and the other by at most three,
so a point of one series is matched to at most two extra neighbours of the
other. Local cost is the squared difference ``(a - b) ** 2``.

Admissible steps ``(di, dj)`` and the local costs they add, in tie-break order:

    (1, 1)  d(i, j)
    (2, 1)  d(i-1, j) + d(i, j)
    (1, 2)  d(i, j-1) + d(i, j)
    (3, 1)  d(i-2, j) + d(i-1, j) + d(i, j)
    (1, 3)  d(i, j-2) + d(i, j-1) + d(i, j)

Indices in this module are 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import LengthMismatchError, TooLongError, TooShortError

# TBB in this image is too old for numba; OpenMP avoids the probe warning.
nb.config.THREADING_LAYER = "omp"

STEPS = ((1, 1), (2, 1), (1, 2), (3, 1), (1, 3))
MIN_LENGTH = 4
BRUTEFORCE_MAX_LENGTH = 8


@nb.njit(cache=True)
def _step_cost(C, x, y, i, j, k):
    # Returns +inf when step k would leave the grid or start from an unreachable cell.
    if k == 0:
        if i < 1 or j < 1:
            return np.inf
        return C[i - 1, j - 1] + (x[i] - y[j]) ** 2
    if k == 1:
        if i < 2 or j < 1:
            return np.inf
        return C[i - 2, j - 1] + (x[i - 1] - y[j]) ** 2 + (x[i] - y[j]) ** 2
    if k == 2:
        if i < 1 or j < 2:
            return np.inf
        return C[i - 1, j - 2] + (x[i] - y[j - 1]) ** 2 + (x[i] - y[j]) ** 2
    if k == 3:
        if i < 3 or j < 1:
            return np.inf
        return (C[i - 3, j - 1] + (x[i - 2] - y[j]) ** 2
                + (x[i - 1] - y[j]) ** 2 + (x[i] - y[j]) ** 2)
    if i < 1 or j < 3:
        return np.inf
    return (C[i - 1, j - 3] + (x[i] - y[j - 2]) ** 2
            + (x[i] - y[j - 1]) ** 2 + (x[i] - y[j]) ** 2)


@nb.njit(cache=True)
def _accumulate(x, y):
    n = x.shape[0]
    m = y.shape[0]
    C = np.full((n, m), np.inf)
    C[0, 0] = (x[0] - y[0]) ** 2
    for i in range(n):
        for j in range(m):
            if i == 0 and j == 0:
                continue
            best = np.inf
            for k in range(5):
                c = _step_cost(C, x, y, i, j, k)
                if c < best:
                    best = c
            C[i, j] = best
    return C


@nb.njit(cache=True)
def _distance(x, y):
    return _accumulate(x, y)[x.shape[0] - 1, y.shape[0] - 1]


@nb.njit(cache=True, parallel=True)
def _pairwise(X):
    n = X.shape[0]
    out = np.zeros((n, n))
    for i in nb.prange(n):
        for j in range(i + 1, n):
            out[i, j] = _distance(X[i], X[j])
    for i in range(n):
        for j in range(i + 1, n):
            out[j, i] = out[i, j]
    return out


@nb.njit(cache=True, parallel=True)
def _cross(X, Y):
    out = np.empty((X.shape[0], Y.shape[0]))
    for i in nb.prange(X.shape[0]):
        for j in range(Y.shape[0]):
            out[i, j] = _distance(X[i], Y[j])
    return out


def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.ascontiguousarray(x, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or x.size != y.size:
        raise LengthMismatchError(f"sequences must have equal length, got {x.size} and {y.size}")
    if x.size < MIN_LENGTH:
        raise TooShortError(f"sequences must have at least {MIN_LENGTH} samples, got {x.size}")
    return x, y


def accumulated_cost(x, y) -> np.ndarray:
    """Return the accumulated cost matrix; unreachable cells hold ``inf``."""
    x, y = _check_pair(x, y)
    return _accumulate(x, y)


def dtw_distance(x, y) -> float:
    """Minimal summed squared-difference cost over all admissible warp paths.

    Raises
    ------
    LengthMismatchError
        If the sequences differ in length.
    TooShortError
        If the sequences have fewer than 4 samples.
    """
    x, y = _check_pair(x, y)
    return float(_distance(x, y))


@dataclass(frozen=True)
class WarpPath:
    """An optimal alignment.

    ``anchors`` are the grid cells visited step by step (consecutive anchors
    differ by one of :data:`STEPS`); ``pairs`` is the full alignment including
    the intermediate cells each multi-cost step matches.
    """

    anchors: list[tuple[int, int]]
    pairs: list[tuple[int, int]]

    @property
    def steps(self) -> list[tuple[int, int]]:
        return [(b[0] - a[0], b[1] - a[1]) for a, b in zip(self.anchors, self.anchors[1:])]

    def cost(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return float(sum((x[i] - y[j]) ** 2 for i, j in self.pairs))


def _step_cells(i: int, j: int, step: tuple[int, int]) -> list[tuple[int, int]]:
    di, dj = step
    if di >= dj:
        return [(i - k, j) for k in range(di - 1, -1, -1)]
    return [(i, j - k) for k in range(dj - 1, -1, -1)]


def dtw_path(x, y) -> WarpPath:
    """Backtrack an optimal warp path.

    At each cell the first step (in :data:`STEPS` order) reproducing the
    accumulated cost is taken, so ties prefer the diagonal.
    """
    x, y = _check_pair(x, y)
    C = _accumulate(x, y)
    i, j = x.size - 1, y.size - 1
    anchors = [(i, j)]
    pairs: list[tuple[int, int]] = []
    while (i, j) != (0, 0):
        target = C[i, j]
        for k, step in enumerate(STEPS):
            if _step_cost(C, x, y, i, j, k) == target:
                break
        else:  # pragma: no cover - C is built from the same candidates
            raise RuntimeError("backtracking failed")
        pairs = _step_cells(i, j, step) + pairs
        i, j = i - step[0], j - step[1]
        anchors.insert(0, (i, j))
    return WarpPath(anchors=anchors, pairs=[(0, 0)] + pairs)


def dtw_bruteforce(x, y) -> float:
    """Exhaustive minimum over every admissible path; test oracle for short inputs.

    Costs are accumulated forward in the same order as the recursion, so the
    result is bit-identical to :func:`dtw_distance`.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size > BRUTEFORCE_MAX_LENGTH or y.size > BRUTEFORCE_MAX_LENGTH:
        raise TooLongError(f"brute force is limited to {BRUTEFORCE_MAX_LENGTH} samples")
    x, y = _check_pair(x, y)
    n, m = x.size, y.size
    best = np.inf

    def walk(i: int, j: int, acc: float) -> None:
        nonlocal best
        if (i, j) == (n - 1, m - 1):
            best = min(best, acc)
            return
        for step in STEPS:
            ni, nj = i + step[0], j + step[1]
            if ni >= n or nj >= m:
                continue
            total = acc
            for a, b in _step_cells(ni, nj, step):
                total = total + (x[a] - y[b]) ** 2
            walk(ni, nj, total)

    walk(0, 0, (x[0] - y[0]) ** 2)
    return float(best)


def pairwise_distances(X) -> np.ndarray:
    """Symmetric (N, N) DTW distance matrix over the rows of ``X``."""
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D array of sequences")
    if X.shape[0] and X.shape[1] < MIN_LENGTH:
        raise TooShortError(f"sequences must have at least {MIN_LENGTH} samples")
    return _pairwise(X)


def cross_distances(X, Y) -> np.ndarray:
    """(N, M) DTW distances between the rows of ``X`` and the rows of ``Y``."""
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    Y = np.ascontiguousarray(np.atleast_2d(Y), dtype=float)
    if X.shape[1] != Y.shape[1]:
        raise LengthMismatchError("sequences must have equal length")
    if X.shape[1] < MIN_LENGTH:
        raise TooShortError(f"sequences must have at least {MIN_LENGTH} samples")
    return _cross(X, Y)
