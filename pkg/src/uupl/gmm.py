"""Confidence-weighted mixture density and predictive-covariance scaling.

Every answered comparison drops one Gaussian bump on each of its two points,
weighted by how confident the answer was. The resulting density G(x) >= 1
divides the GP predictive covariance, so regions backed by many confident
answers get small variance and untouched regions keep the prior's.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import Domain
from .exceptions import DimensionMismatchError
from .preference import PreferenceDataset, PredictiveDistribution

#: default per-level bump weights, decreasing with uncertainty
DEFAULT_WEIGHTS = {1: 1.0, 2: 0.6, 3: 0.3, 4: 0.1}

#: default bandwidth as a fraction of each dimension's domain extent
DEFAULT_BANDWIDTH_FRACTION = 0.1


def _validate_weights(weights: dict) -> dict:
    w = {int(k): float(v) for k, v in weights.items()}
    if sorted(w) != [1, 2, 3, 4]:
        raise ValueError(f"weights must cover levels 1..4, got {sorted(w)}")
    if not (w[1] > w[2] > w[3] > w[4] > 0):
        raise ValueError(f"weights must be strictly decreasing and positive: {w}")
    return w


@dataclass(frozen=True)
class GmmModel:
    """Mixture over all observed query points of a dataset snapshot.

    `sigma` is a per-dimension bandwidth vector; the component density is the
    product of 1D normals, i.e. isotropic once features are normalized by
    their domain extents.
    """

    centers: np.ndarray          # (2 * n_pairs, dim)
    center_weights: np.ndarray   # (2 * n_pairs,)
    sigma: np.ndarray            # (dim,)
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))

    def __post_init__(self):
        object.__setattr__(self, "centers", np.atleast_2d(np.asarray(self.centers, float)))
        object.__setattr__(self, "center_weights", np.asarray(self.center_weights, float))
        sig = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if np.any(sig <= 0):
            raise ValueError(f"bandwidth must be positive, got {sig}")
        object.__setattr__(self, "sigma", sig)
        object.__setattr__(self, "weights", _validate_weights(self.weights))

    @property
    def n_components(self) -> int:
        return 0 if self.centers.size == 0 else self.centers.shape[0]


def build_gmm(
    dataset: PreferenceDataset,
    sigma,
    weights: dict | None = None,
) -> GmmModel:
    """Mixture with one component per pair member, weighted by answer level."""
    w = _validate_weights(weights or DEFAULT_WEIGHTS)
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    if dataset.pairs:
        if sigma.shape[0] == 1 and dataset.dim > 1:
            sigma = np.repeat(sigma, dataset.dim)
        if sigma.shape[0] != dataset.dim:
            raise DimensionMismatchError(
                f"bandwidth has {sigma.shape[0]} entries for dim {dataset.dim}"
            )
        centers = np.vstack(
            [
                dataset.points[[p.winner_idx, p.loser_idx], :]
                for p in dataset.pairs
            ]
        )
        cw = np.repeat([w[p.level] for p in dataset.pairs], 2).astype(float)
    else:
        centers = np.zeros((0, sigma.shape[0]))
        cw = np.zeros(0)
    return GmmModel(centers, cw, sigma, w)


def bandwidth_for_domain(
    domain: Domain, fraction: float = DEFAULT_BANDWIDTH_FRACTION
) -> np.ndarray:
    """Per-dimension bandwidth: a fixed fraction of each extent."""
    if fraction <= 0:
        raise ValueError("bandwidth fraction must be positive")
    return fraction * domain.extents


def gmm_density(model: GmmModel, x) -> float:
    """G(x) = 1 + sum of weighted component densities; exactly 1 with no data."""
    return float(gmm_density_batch(model, np.atleast_1d(np.asarray(x, float))[None, :])[0])


def gmm_density_batch(model: GmmModel, X) -> np.ndarray:
    """G evaluated at each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if model.n_components == 0:
        return np.ones(X.shape[0])
    if X.shape[1] != model.centers.shape[1]:
        raise DimensionMismatchError(
            f"points have dim {X.shape[1]}, mixture has {model.centers.shape[1]}"
        )
    sig = model.sigma
    norm = float(np.prod(1.0 / (sig * np.sqrt(2.0 * np.pi))))
    # (m, c) squared Mahalanobis distances under the diagonal bandwidth
    diff = X[:, None, :] - model.centers[None, :, :]
    expo = -0.5 * np.sum((diff / sig[None, None, :]) ** 2, axis=2)
    dens = norm * np.exp(expo)
    return 1.0 + dens @ model.center_weights


@dataclass(frozen=True)
class ScaledPrediction:
    """Predictive pair distribution after density scaling."""

    mu: np.ndarray
    sigma_prime: np.ndarray
    g1: float
    g2: float


def scale_covariance(
    pred: PredictiveDistribution, g1: float, g2: float
) -> ScaledPrediction:
    """Divide the covariance by the densities: var_i / g_i^2, cov / (g1 g2)."""
    if g1 < 1.0 or g2 < 1.0:
        raise ValueError(f"density values must be >= 1, got g1={g1}, g2={g2}")
    s = np.array(
        [
            [pred.sigma[0, 0] / (g1 * g1), pred.sigma[0, 1] / (g1 * g2)],
            [pred.sigma[1, 0] / (g1 * g2), pred.sigma[1, 1] / (g2 * g2)],
        ]
    )
    s = 0.5 * (s + s.T)
    return ScaledPrediction(pred.mu.copy(), s, float(g1), float(g2))


def scaled_marginal_variance(
    model: GmmModel, X, variances: np.ndarray
) -> np.ndarray:
    """Per-point variance divided by G(x)^2; clamps round-off negatives to 0."""
    g = gmm_density_batch(model, X)
    return np.maximum(np.asarray(variances, dtype=float) / (g * g), 0.0)
