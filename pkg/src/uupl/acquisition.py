"""Active query selection and the adaptive stopping rule.

Candidate pairs are scored by the expected information gain of the answer:
the entropy of the predicted choice under the joint (probit + posterior)
noise, minus the expected conditional entropy term. Both use the
density-scaled covariance, so human confidence shapes where the next
question lands.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Domain
from .exceptions import DomainError
from .gmm import GmmModel, gmm_density_batch
from .numerics import binary_entropy, std_normal_cdf
from .preference import PosteriorState, predict_pair_batch

_PI_LN2 = np.pi * np.log(2.0)


@dataclass(frozen=True)
class AcquisitionConfig:
    """Selection-time settings.

    `u_acq` is the probit scale assumed for the not-yet-given answer; the
    level is unknown before the human responds, so a configurable
    middle-of-road scale stands in (the "confident" factor by default).
    """

    u_acq: float
    pool_size: int = 200
    rng_seed: int = 0
    candidate_source: str = "uniform"  # "uniform" | "grid"
    grid_points_per_dim: int = 161

    def __post_init__(self):
        if self.u_acq <= 0:
            raise ValueError(f"u_acq must be positive, got {self.u_acq}")
        if self.pool_size < 1:
            raise ValueError(f"pool_size must be >= 1, got {self.pool_size}")
        if self.candidate_source not in ("uniform", "grid"):
            raise ValueError(f"unknown candidate_source {self.candidate_source!r}")


def pair_score(mu, sigma_prime, u_acq: float) -> float:
    """Information-gain score of one candidate pair.

    g is the variance of the predicted reward difference under the scaled
    covariance; the score is h(Phi(gap / sqrt(u^2 + g))) minus the expected
    conditional entropy correction, which is 0 when g = 0 and approaches 1
    as g dominates.
    """
    mu = np.asarray(mu, dtype=float)
    s = np.asarray(sigma_prime, dtype=float)
    g = float(max(s[0, 0] + s[1, 1] - 2.0 * s[0, 1], 0.0))
    return _score_from_parts(mu[0] - mu[1], g, u_acq)


def _score_from_parts(gap, g, u_acq):
    u2 = u_acq * u_acq
    p = std_normal_cdf(gap / np.sqrt(u2 + g))
    h = binary_entropy(p)
    m = (
        np.sqrt(_PI_LN2 * u2)
        * np.exp(-(gap * gap) / (_PI_LN2 * u2 + 2.0 * g))
        / np.sqrt(_PI_LN2 * u2 + 2.0 * g)
    )
    return float(h - m) if np.ndim(gap) == 0 else h - m


def score_candidates(
    state: PosteriorState,
    gmm: GmmModel,
    A: np.ndarray,
    B: np.ndarray,
    u_acq: float,
):
    """Scores and difference-variances g for candidate pairs (rows of A, B)."""
    mu_a, mu_b, var_a, var_b, cov = predict_pair_batch(state, A, B)
    ga = gmm_density_batch(gmm, A)
    gb = gmm_density_batch(gmm, B)
    var_a = var_a / (ga * ga)
    var_b = var_b / (gb * gb)
    cov = cov / (ga * gb)
    g = np.maximum(var_a + var_b - 2.0 * cov, 0.0)
    scores = _score_from_parts(mu_a - mu_b, g, u_acq)
    return scores, g


def _draw_candidates(domain: Domain, cfg: AcquisitionConfig, rng):
    if cfg.candidate_source == "grid":
        pts = domain.grid(cfg.grid_points_per_dim)
        ia = rng.integers(0, len(pts), size=cfg.pool_size)
        ib = rng.integers(0, len(pts), size=cfg.pool_size)
        same = ia == ib
        while np.any(same):
            ib[same] = rng.integers(0, len(pts), size=int(same.sum()))
            same = ia == ib
        return pts[ia], pts[ib]
    a = domain.sample(rng, cfg.pool_size)
    b = domain.sample(rng, cfg.pool_size)
    same = np.all(a == b, axis=1)
    while np.any(same):
        b[same] = domain.sample(rng, int(same.sum()))
        same = np.all(a == b, axis=1)
    return a, b


def select_next_query(
    state: PosteriorState,
    gmm: GmmModel,
    cfg: AcquisitionConfig,
    domain: Domain,
):
    """Draw a seeded candidate pool, score it, and return the argmax pair.

    Deterministic for a fixed seed and state; ties break toward the lowest
    candidate index.
    """
    if domain is None:
        raise DomainError("feature domain bounds are required for selection")
    rng = np.random.default_rng(cfg.rng_seed)
    A, B = _draw_candidates(domain, cfg, rng)
    scores, _ = score_candidates(state, gmm, A, B, cfg.u_acq)
    best = int(np.argmax(scores))  # argmax returns the first maximal index
    return A[best].copy(), B[best].copy()


@dataclass(frozen=True)
class StoppingConfig:
    """Checkpointed stopping on accumulated variance reduction.

    Querying may stop no earlier than `base_queries` answers; thereafter the
    rule is evaluated every `increment` answers. It fires once the mean
    scaled grid variance has dropped, relative to its value at the first
    answered round, by at least `drop_threshold` — i.e. enough total
    uncertainty has been resolved. Confident answer streams collapse the
    variance quickly and stop at the first checkpoint; uncertain streams
    keep the variance high and are asked for more answers.
    """

    base_queries: int = 20
    increment: int = 5
    drop_threshold: float = 0.6

    def __post_init__(self):
        if self.base_queries < 1:
            raise ValueError("base_queries must be >= 1")
        if self.increment < 1:
            raise ValueError("increment must be >= 1")
        if self.drop_threshold <= 0:
            raise ValueError("drop_threshold must be positive")


def should_stop(variance_trace, cfg: StoppingConfig) -> bool:
    """Decide termination from the per-round mean scaled grid variance.

    The decision is taken at the most recent checkpoint (base_queries,
    base_queries + increment, ...) at or before the current round, so it is
    monotone: once true it stays true as the trace grows.
    """
    trace = [float(v) for v in variance_trace]
    n = len(trace)
    if n < cfg.base_queries:
        return False
    last_checkpoint = cfg.base_queries + (
        (n - cfg.base_queries) // cfg.increment
    ) * cfg.increment
    reference = trace[0]
    current = trace[last_checkpoint - 1]
    if reference <= 0.0:
        return True
    drop = 1.0 - current / reference
    return drop >= cfg.drop_threshold
