"""Power level decomposition (PLD) of load curves.

A PLD matrix ``A`` (24 x J) holds, for every hour and device power level, the
device-hours spent at that level, so that ``A @ (alpha * p) == x``. The
minimum-Frobenius-norm solution has the rank-one closed form
``x p^T / (alpha ||p||^2)``; this module provides it, the distances it
induces, the relative-error bounds for predicted PLD matrices, the CDFs of
those bounds when the unknown perturbation is a Gaussian random matrix, and a
sparse (L1-regularized) alternative.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import dtw
from .errors import (
    AssumptionViolatedError,
    NoConvergenceError,
    ShapeMismatchError,
    ZeroDenominatorError,
)

CALIBRATION_SAMPLES = 10_000
CALIBRATION_SEED = 20_160_101


@dataclass(frozen=True)
class PowerVector:
    """Device power levels ``p`` (kW) and a positive unit scale ``alpha``."""

    p: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).ravel()
        if p.size < 1 or not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise ValueError("power levels must be a non-empty vector of positive numbers")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError("alpha must be a positive number")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def scaled(self) -> np.ndarray:
        return self.alpha * self.p

    @property
    def norm_sq(self) -> float:
        """Squared 2-norm of the scaled power vector."""
        return float(self.scaled @ self.scaled)

    def __len__(self) -> int:
        return self.p.size


@dataclass(frozen=True)
class PLDMatrix:
    A: np.ndarray
    power: PowerVector

    def energy(self) -> np.ndarray:
        """Hourly energy implied by the matrix, ``A @ (alpha * p)``."""
        return self.A @ self.power.scaled


def _as_curve(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("load curve must be finite")
    return x


def pld_estimate(x, pv: PowerVector) -> PLDMatrix:
    """Minimum-Frobenius-norm usage matrix satisfying ``A @ (alpha p) = x``."""
    x = _as_curve(x)
    A = np.outer(x, pv.p) / (pv.alpha * float(pv.p @ pv.p))
    return PLDMatrix(A, pv)


def _check_same_shape(A, B) -> tuple[np.ndarray, np.ndarray]:
    A = np.asarray(getattr(A, "A", A), dtype=float)
    B = np.asarray(getattr(B, "A", B), dtype=float)
    if A.shape != B.shape:
        raise ShapeMismatchError(f"PLD matrices differ in shape: {A.shape} vs {B.shape}")
    return A, B


def pld_frob_dist(A_x, A_y) -> float:
    """Frobenius distance between two PLD matrices."""
    A, B = _check_same_shape(A_x, A_y)
    return float(np.linalg.norm(A - B))


def pld_dtw_dist(A_x, A_y) -> float:
    """Sum over power levels of the DTW distance between matching columns."""
    A, B = _check_same_shape(A_x, A_y)
    return float(sum(dtw.dtw_distance(A[:, j], B[:, j]) for j in range(A.shape[1])))


def pld_prediction_error(A_hat, A_tilde) -> float:
    """Relative Frobenius error ``||A_hat - A_tilde||_F / ||A_tilde||_F``."""
    A, B = _check_same_shape(A_hat, A_tilde)
    denom = np.linalg.norm(B)
    if denom == 0:
        raise ZeroDenominatorError("reference PLD matrix is zero")
    return float(np.linalg.norm(A - B) / denom)


def pld_error_bounds(x, x_hat, pv: PowerVector, sigma1_sq: float, rank: int) -> tuple[float, float]:
    """Lower and upper bounds on the relative PLD prediction error.

    ``sigma1_sq`` is the squared largest singular value of the perturbation
    separating the true usage matrix from the estimate, and ``rank`` its rank.
    """
    if sigma1_sq < 0:
        raise ValueError("sigma1_sq must be non-negative")
    if rank < 1:
        raise ValueError("rank must be at least 1")
    x = _as_curve(x)
    x_hat = _as_curve(x_hat)
    err = float((x_hat - x) @ (x_hat - x))
    ref = float(x @ x)
    q = pv.norm_sq
    lower = np.sqrt((err + q * sigma1_sq) / (ref + q * rank * sigma1_sq))
    upper = np.sqrt((err + q * rank * sigma1_sq) / (ref + q * sigma1_sq))
    return float(lower), float(upper)


def sample_perturbation(rng: np.random.Generator, rows: int, p, rank: int) -> np.ndarray:
    """Gaussian matrix projected onto the null space of ``p`` and truncated to ``rank``.

    The projection caps the attainable rank at ``len(p) - 1``; a larger
    request returns the full projected matrix.
    """
    p = np.asarray(p, dtype=float)
    G = rng.standard_normal((rows, p.size))
    H = G - np.outer(G @ p, p) / (p @ p)
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    r = min(rank, p.size - 1, rows)
    return (U[:, :r] * s[:r]) @ Vt[:r]


# Largest eigenvalue of a Wishart matrix ---------------------------------------

def largest_eigenvalue_samples(rows: int, cols: int, n: int, seed) -> np.ndarray:
    """Largest eigenvalues of ``H^T H`` for ``n`` standard Gaussian ``rows x cols`` draws."""
    rng = np.random.default_rng(seed)
    out = np.empty(n)
    batch = 2000
    for start in range(0, n, batch):
        H = rng.standard_normal((min(batch, n - start), rows, cols))
        W = np.einsum("bij,bik->bjk", H, H) if rows >= cols else np.einsum("bji,bki->bjk", H, H)
        out[start:start + H.shape[0]] = np.linalg.eigvalsh(W)[:, -1]
    return out


@dataclass(frozen=True)
class Sigma1SqLaw:
    """Shifted gamma approximation to the law of the largest Wishart eigenvalue.

    The centred and scaled largest eigenvalue approaches the order-1
    Tracy-Widom law, whose shape is well matched by a shifted gamma
    distribution; here shape, scale and shift are fitted directly to the
    mean, variance and skewness of seeded Monte-Carlo samples.
    """

    shape: float
    scale: float
    shift: float

    @classmethod
    def fit(cls, samples) -> "Sigma1SqLaw":
        samples = np.asarray(samples, dtype=float)
        mean = samples.mean()
        sd = samples.std(ddof=1)
        skew = stats.skew(samples, bias=False)
        if not skew > 0:
            raise ValueError("largest-eigenvalue samples must be right-skewed")
        shape = 4.0 / skew ** 2
        scale = sd / np.sqrt(shape)
        return cls(float(shape), float(scale), float(mean - shape * scale))

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = stats.gamma.cdf(t - self.shift, self.shape, scale=self.scale)
        return np.where(t < 0, 0.0, out)


@functools.lru_cache(maxsize=None)
def sigma1sq_law(rows: int, cols: int, n_samples: int = CALIBRATION_SAMPLES,
                 seed: int = CALIBRATION_SEED) -> Sigma1SqLaw:
    """Calibrated (and cached) law of sigma_1^2 for a ``rows x cols`` Gaussian matrix."""
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be positive")
    return Sigma1SqLaw.fit(largest_eigenvalue_samples(rows, cols, n_samples, (seed, rows, cols)))


def sigma1sq_cdf(t, rows: int, cols: int):
    """CDF of the largest eigenvalue of ``H^T H`` for Gaussian ``H`` (rows x cols)."""
    out = sigma1sq_law(rows, cols).cdf(t)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BoundDistribution:
    """Everything needed to evaluate the CDFs of the PLD error bounds."""

    rank: int
    law: Sigma1SqLaw
    x_norm_sq: float
    err_norm_sq: float
    p_norm_sq: float

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if min(self.x_norm_sq, self.err_norm_sq, self.p_norm_sq) < 0:
            raise ValueError("norms must be non-negative")

    @classmethod
    def from_curves(cls, x, x_hat, pv: PowerVector, rank: int | None = None,
                    rows: int | None = None) -> "BoundDistribution":
        x = _as_curve(x)
        x_hat = _as_curve(x_hat)
        rows = rows or x.size
        rank = rank or min(rows, len(pv))
        return cls(
            rank=int(rank),
            law=sigma1sq_law(rows, len(pv)),
            x_norm_sq=float(x @ x),
            err_norm_sq=float((x - x_hat) @ (x - x_hat)),
            p_norm_sq=pv.norm_sq,
        )

    def check_assumption(self) -> None:
        if self.x_norm_sq == 0:
            raise AssumptionViolatedError("actual curve is zero")
        ratio = self.err_norm_sq / self.x_norm_sq
        if not 1.0 / self.rank <= ratio <= self.rank:
            raise AssumptionViolatedError(
                f"squared error ratio {ratio:.4g} outside [1/R_H, R_H] = [{1 / self.rank:.4g}, {self.rank}]")


def bound_cdf_upper(t, bd: BoundDistribution):
    """P(upper bound <= t) when sigma_1^2 follows ``bd.law``."""
    bd.check_assumption()
    t = np.asarray(t, dtype=float)
    t2 = t * t
    R = bd.rank
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (t2 * bd.x_norm_sq - bd.err_norm_sq) / (bd.p_norm_sq * (R - t2))
        inner = bd.law.cdf(np.where(t2 < R, s, 0.0))
    out = np.where(t2 >= R, 1.0, inner)
    out = np.where(t < 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def bound_cdf_lower(t, bd: BoundDistribution):
    """P(lower bound <= t) when sigma_1^2 follows ``bd.law``."""
    bd.check_assumption()
    t = np.asarray(t, dtype=float)
    t2 = t * t
    R = bd.rank
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (bd.err_norm_sq - t2 * bd.x_norm_sq) / (bd.p_norm_sq * (t2 * R - 1.0))
        inner = 1.0 - bd.law.cdf(np.where(t2 * R > 1.0, s, 0.0))
    out = np.where(t2 * R <= 1.0, 0.0, inner)
    out = np.where(t < 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


# Sparse estimate ----------------------------------------------------------------

def soft_threshold(v, tau: float):
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def _sparse_row(target: float, w: np.ndarray, tau: float, tol: float) -> np.ndarray:
    if target == 0:
        return np.zeros_like(w)
    sign = 1.0 if target > 0 else -1.0
    target = abs(target)

    def supplied(nu):
        return float(w @ soft_threshold(nu * w, tau))

    lo, hi = 0.0, 1.0
    for _ in range(1000):
        if supplied(hi) >= target:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise NoConvergenceError("could not bracket the dual variable")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if supplied(mid) < target:
            lo = mid
        else:
            hi = mid
    # Polish: the constraint is linear in nu on the final active set.
    # Written so the tau terms cancel exactly, not via nu * w - tau (large tau).
    active = hi * w > tau
    wa = w[active]
    a = np.zeros_like(w)
    a[active] = (target * wa + tau * (wa * wa.sum() - wa @ wa)) / (wa @ wa)
    if abs(w @ a - target) > tol:
        raise NoConvergenceError(f"row residual {abs(w @ a - target):.3g} exceeds {tol:g}")
    return sign * a


def sparse_pld(x, pv: PowerVector, frob: float = 1.0, l1: float = 0.0, tol: float = 1e-10) -> PLDMatrix:
    """Usage matrix minimizing ``frob * ||A||_F^2 + l1 * ||A||_1`` subject to ``A @ (alpha p) = x``.

    The squared Frobenius term makes the problem separable by rows. Each row
    is ``soft_threshold(nu * alpha * p, l1 / (2 * frob))`` with the scalar
    ``nu`` found by bisection on the (monotone) energy constraint. Larger
    ``l1`` relative to ``frob`` yields sparser rows.
    """
    if not frob > 0:
        raise ValueError("frob weight must be positive")
    if l1 < 0:
        raise ValueError("l1 weight must be non-negative")
    x = _as_curve(x)
    w = pv.scaled
    tau = l1 / (2.0 * frob)
    A = np.vstack([_sparse_row(float(xi), w, tau, tol) for xi in x])
    return PLDMatrix(A, pv)
