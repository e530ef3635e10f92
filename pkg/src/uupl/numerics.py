"""Shared numerical primitives.

Standard-normal functions, binary entropy, the RBF kernel and its covariance
matrix, SPD linear solves, and the sample-correlation accuracy metric. All
functions are pure and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError
from scipy.special import erfc, log_ndtr

from .exceptions import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    UndefinedCorrelationError,
)

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

DEFAULT_JITTER = 1e-6


@dataclass(frozen=True)
class KernelConfig:
    """RBF kernel settings: length-scale parameter and diagonal jitter."""

    gamma: float
    jitter: float = DEFAULT_JITTER

    def __post_init__(self):
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be a positive real, got {self.gamma}")
        if not (np.isfinite(self.jitter) and self.jitter >= 0):
            raise ValueError(f"jitter must be non-negative, got {self.jitter}")


def std_normal_cdf(z):
    """Standard-normal CDF via the complementary error function.

    Accurate to better than 1e-12 absolute error over the real line.
    """
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("std_normal_cdf requires finite input")
    out = 0.5 * erfc(-z / _SQRT2)
    return float(out) if out.ndim == 0 else out


def std_normal_pdf(z):
    """Standard-normal density."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("std_normal_pdf requires finite input")
    out = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    return float(out) if out.ndim == 0 else out


def log_std_normal_cdf(z):
    """ln Phi(z), safe in the deep lower tail (no log(0) underflow)."""
    z = np.asarray(z, dtype=float)
    out = log_ndtr(z)
    return float(out) if out.ndim == 0 else out


def cdf_pdf_ratio(z):
    """phi(z) / Phi(z), computed in log space so the lower tail stays finite."""
    z = np.asarray(z, dtype=float)
    log_pdf = -0.5 * z * z - 0.5 * np.log(2.0 * np.pi)
    out = np.exp(log_pdf - log_ndtr(z))
    return float(out) if out.ndim == 0 else out


def binary_entropy(p):
    """Entropy in bits of a Bernoulli(p), with the 0*log0 = 0 convention."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("binary_entropy requires p in [0, 1]")
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0) - np.where(
            q > 0, q * np.log2(np.where(q > 0, q, 1.0)), 0.0
        )
    return float(h) if h.ndim == 0 else h


def rbf_kernel(x1, x2, cfg: KernelConfig) -> float:
    """exp(-gamma * ||x1 - x2||^2) for two feature points."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x1.shape != x2.shape:
        raise DimensionMismatchError(
            f"feature dimensions differ: {x1.shape} vs {x2.shape}"
        )
    d = x1 - x2
    return float(np.exp(-cfg.gamma * np.dot(d, d)))


def rbf_matrix(a: np.ndarray, b: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Kernel cross-matrix between two point sets, no jitter."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(
            f"feature dimensions differ: {a.shape[1]} vs {b.shape[1]}"
        )
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * a @ b.T
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-cfg.gamma * sq)


def build_covariance(points, cfg: KernelConfig) -> np.ndarray:
    """Dense kernel matrix over unique points, with jitter on the diagonal.

    The result is symmetric, has diagonal exactly 1 + jitter, and is positive
    definite for any point set once jitter > 0.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("build_covariance requires at least one point")
    K = rbf_matrix(pts, pts, cfg)
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, 1.0 + cfg.jitter)
    return K


def solve_spd(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve A X = B for symmetric positive definite A via Cholesky."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"A must be square, got {A.shape}")
    if B.shape[0] != A.shape[0]:
        raise DimensionMismatchError(
            f"incompatible shapes: A {A.shape}, B {B.shape}"
        )
    if not np.allclose(A, A.T, atol=1e-10):
        raise NotPositiveDefiniteError("matrix is not symmetric")
    try:
        c = cho_factor(A, lower=True, check_finite=False)
    except (LinAlgError, np.linalg.LinAlgError) as exc:
        raise NotPositiveDefiniteError(f"Cholesky failed: {exc}") from exc
    return cho_solve(c, B, check_finite=False)


def spd_inverse(A: np.ndarray) -> np.ndarray:
    """Symmetric inverse of an SPD matrix via a Cholesky identity solve."""
    inv = solve_spd(A, np.eye(A.shape[0]))
    return 0.5 * (inv + inv.T)


def sample_correlation(f_pred, f_gt) -> float:
    """Pearson sample correlation between two equal-length vectors."""
    a = np.asarray(f_pred, dtype=float).ravel()
    b = np.asarray(f_gt, dtype=float).ravel()
    if a.shape != b.shape or a.size < 2:
        raise DimensionMismatchError(
            f"vectors must share a length >= 2, got {a.shape} and {b.shape}"
        )
    da = a - a.mean()
    db = b - b.mean()
    na = np.sqrt(np.dot(da, da))
    nb = np.sqrt(np.dot(db, db))
    if na == 0.0 or nb == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant vector")
    r = float(np.dot(da, db) / (na * nb))
    return min(1.0, max(-1.0, r))


def median_heuristic_gamma(points, max_points: int = 512) -> float:
    """0.5 / median pairwise squared distance over a reference point set.

    Large sets are thinned to `max_points` by even striding so the result
    stays deterministic and the pairwise matrix small.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = pts.shape[0]
    if n < 2:
        raise ValueError("median heuristic needs at least two points")
    if n > max_points:
        idx = np.linspace(0, n - 1, max_points).astype(int)
        pts = pts[idx]
        n = max_points
    sq = (
        np.sum(pts * pts, axis=1)[:, None]
        + np.sum(pts * pts, axis=1)[None, :]
        - 2.0 * pts @ pts.T
    )
    iu = np.triu_indices(n, k=1)
    med = float(np.median(sq[iu]))
    if med <= 0:
        raise ValueError("all points coincide; median distance is zero")
    return 0.5 / med
