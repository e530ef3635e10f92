"""Pairwise-preference Gaussian process with per-answer confidence.

Each comparison carries a discrete confidence level (1 = very confident ...
4 = very uncertain) that maps to a probit noise scale. The latent reward at
the observed points gets a zero-mean GP prior; the posterior mode and the
log-likelihood curvature are found by damped Newton iteration, after which
prediction at new points is closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import (
    ConvergenceError,
    DimensionMismatchError,
    NumericalError,
)
from .numerics import (
    KernelConfig,
    build_covariance,
    cdf_pdf_ratio,
    log_std_normal_cdf,
    rbf_matrix,
    solve_spd,
    spd_inverse,
    std_normal_cdf,
)

LEVELS = (1, 2, 3, 4)

#: tolerance below which two feature points are merged into one
POINT_MERGE_TOL = 1e-12


@dataclass(frozen=True)
class UncertaintyFactors:
    """Probit standard deviations per confidence level, strictly increasing."""

    u1: float
    u2: float
    u3: float
    u4: float

    def __post_init__(self):
        vals = (self.u1, self.u2, self.u3, self.u4)
        if not all(np.isfinite(v) and v > 0 for v in vals):
            raise ValueError(f"factors must be positive reals, got {vals}")
        if not (self.u1 < self.u2 < self.u3 < self.u4):
            raise ValueError(f"factors must satisfy u1 < u2 < u3 < u4, got {vals}")

    def for_level(self, level: int) -> float:
        if level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {level}")
        return (self.u1, self.u2, self.u3, self.u4)[level - 1]

    def as_dict(self) -> dict:
        return {"u1": self.u1, "u2": self.u2, "u3": self.u3, "u4": self.u4}


@dataclass(frozen=True)
class PreferencePair:
    """One answered comparison: winner/loser indices into the unique points."""

    winner_idx: int
    loser_idx: int
    level: int

    def __post_init__(self):
        if self.winner_idx == self.loser_idx:
            raise ValueError("a pair must reference two distinct points")
        if self.level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {self.level}")


@dataclass
class PreferenceDataset:
    """Unique feature points plus the comparisons referencing them."""

    points: np.ndarray = field(
        default_factory=lambda: np.zeros((0, 1), dtype=float)
    )
    pairs: list[PreferencePair] = field(default_factory=list)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        for p in self.pairs:
            if not (0 <= p.winner_idx < len(self.points)) or not (
                0 <= p.loser_idx < len(self.points)
            ):
                raise ValueError(f"pair indices out of range: {p}")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def point_index(self, x) -> int:
        """Index of x in the unique-point list, merging within tolerance.

        Appends x when no existing point matches.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.n_points == 0:
            self.points = x[None, :].copy()
            return 0
        if x.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"point has dimension {x.shape[0]}, dataset has {self.dim}"
            )
        dists = np.max(np.abs(self.points - x[None, :]), axis=1)
        hit = int(np.argmin(dists))
        if dists[hit] <= POINT_MERGE_TOL:
            return hit
        self.points = np.vstack([self.points, x[None, :]])
        return self.n_points - 1

    def add_comparison(self, x1, x2, choice: int, level: int) -> PreferencePair:
        """Record that option `choice` (1 or 2) of (x1, x2) won, at `level`."""
        if choice not in (1, 2):
            raise ValueError(f"choice must be 1 or 2, got {choice}")
        i1 = self.point_index(x1)
        i2 = self.point_index(x2)
        if i1 == i2:
            raise ValueError("comparison requires two distinct points")
        winner, loser = (i1, i2) if choice == 1 else (i2, i1)
        pair = PreferencePair(winner, loser, level)
        self.pairs.append(pair)
        return pair

    def copy(self) -> "PreferenceDataset":
        return PreferenceDataset(self.points.copy(), list(self.pairs))


def choice_probability(delta_reward: float, u: float) -> float:
    """Probability of picking the first option given its reward lead."""
    if not (np.isfinite(u) and u > 0):
        raise ValueError(f"probit scale u must be positive, got {u}")
    return std_normal_cdf(delta_reward / u)


def _pair_arrays(dataset: PreferenceDataset, factors: UncertaintyFactors):
    w = np.array([p.winner_idx for p in dataset.pairs], dtype=int)
    l = np.array([p.loser_idx for p in dataset.pairs], dtype=int)
    u = np.array([factors.for_level(p.level) for p in dataset.pairs], dtype=float)
    return w, l, u


def log_likelihood(
    dataset: PreferenceDataset, f: np.ndarray, factors: UncertaintyFactors
) -> float:
    """Sum over pairs of ln Phi((f[winner] - f[loser]) / u_level)."""
    f = np.asarray(f, dtype=float)
    if f.shape != (dataset.n_points,):
        raise DimensionMismatchError(
            f"f has shape {f.shape}, expected ({dataset.n_points},)"
        )
    if not dataset.pairs:
        return 0.0
    w, l, u = _pair_arrays(dataset, factors)
    z = (f[w] - f[l]) / u
    return float(np.sum(log_std_normal_cdf(z)))


def _likelihood_grad_hess(f, w, l, u, n):
    """Gradient of the log-likelihood and W = minus its Hessian at f."""
    z = (f[w] - f[l]) / u
    r = cdf_pdf_ratio(z)
    g = np.zeros(n)
    coeff = r / u
    np.add.at(g, w, coeff)
    np.add.at(g, l, -coeff)
    # each pair contributes c * (e_w - e_l)(e_w - e_l)^T with c >= 0,
    # so W is PSD and its rows sum to zero
    c = r * (z + r) / (u * u)
    W = np.zeros((n, n))
    np.add.at(W, (w, w), c)
    np.add.at(W, (l, l), c)
    np.add.at(W, (w, l), -c)
    np.add.at(W, (l, w), -c)
    return g, W


def objective_value(dataset, K, f, factors) -> float:
    """The Laplace objective: log-likelihood minus the quadratic prior penalty."""
    Kinv_f = solve_spd(K, f)
    return log_likelihood(dataset, f, factors) - 0.5 * float(f @ Kinv_f)


def objective_gradient(dataset, K, f, factors) -> np.ndarray:
    """Analytic gradient of the Laplace objective at f."""
    f = np.asarray(f, dtype=float)
    if not dataset.pairs:
        return -solve_spd(K, f)
    w, l, u = _pair_arrays(dataset, factors)
    g, _ = _likelihood_grad_hess(f, w, l, u, dataset.n_points)
    return g - solve_spd(K, f)


def objective_hessian(dataset, K, f, factors) -> np.ndarray:
    """Analytic Hessian of the Laplace objective at f: -(W + K^-1)."""
    f = np.asarray(f, dtype=float)
    Kinv = spd_inverse(K)
    if not dataset.pairs:
        return -Kinv
    w, l, u = _pair_arrays(dataset, factors)
    _, W = _likelihood_grad_hess(f, w, l, u, dataset.n_points)
    return -(W + Kinv)


def laplace_mode(
    dataset: PreferenceDataset,
    K: np.ndarray,
    factors: UncertaintyFactors,
    max_iter: int = 100,
    tol: float = 1e-8,
):
    """Find the posterior mode by damped Newton from f = 0.

    The objective is strictly concave (probit log-likelihood plus a negative
    definite quadratic), so the full Newton step increases it except far from
    the mode; step halving handles that region. Returns (f_lap, W, iterations)
    where W is minus the log-likelihood Hessian at the mode.
    """
    n = dataset.n_points
    if K.shape != (n, n):
        raise DimensionMismatchError(f"K has shape {K.shape}, expected ({n}, {n})")
    if not dataset.pairs:
        return np.zeros(n), np.zeros((n, n)), 0
    w, l, u = _pair_arrays(dataset, factors)
    return laplace_mode_arrays(n, w, l, u, K, max_iter=max_iter, tol=tol)


def laplace_mode_arrays(
    n: int,
    w: np.ndarray,
    l: np.ndarray,
    u: np.ndarray,
    K: np.ndarray,
    max_iter: int = 100,
    tol: float = 1e-8,
):
    """Newton core over raw index/scale arrays (one entry per pair).

    The search runs in the whitened parameterization f = L a with K = L L^T,
    where the prior penalty is 0.5 ||a||^2 and the Newton matrix
    I + L^T W L stays well conditioned even when K itself is nearly
    singular (tightly clustered points). Stationarity in a is equivalent to
    stationarity in f.
    """
    w = np.asarray(w, dtype=int)
    l = np.asarray(l, dtype=int)
    u = np.asarray(u, dtype=float)
    L = _chol_lower(K)

    def s_value(av, fv):
        z = (fv[w] - fv[l]) / u
        return float(np.sum(log_std_normal_cdf(z))) - 0.5 * float(av @ av)

    a = np.zeros(n)
    f = np.zeros(n)
    s_cur = s_value(a, f)
    grad_norm = np.inf
    for iteration in range(1, max_iter + 1):
        g, W = _likelihood_grad_hess(f, w, l, u, n)
        grad_a = L.T @ g - a
        grad_norm = float(np.max(np.abs(grad_a)))
        if grad_norm < tol:
            return f, W, iteration - 1
        try:
            M = L.T @ W @ L
            M += np.eye(n)
            step = solve_spd(0.5 * (M + M.T), grad_a)
        except Exception as exc:
            raise NumericalError(f"Newton step failed: {exc}") from exc
        # accept any step that does not decrease S beyond rounding noise;
        # near the mode the objective change underflows while the gradient
        # still contracts, so an exact comparison would stall
        noise = 1e-10 * (1.0 + abs(s_cur))
        t = 1.0
        while t > 1e-12:
            a_new = a + t * step
            f_new = L @ a_new
            s_new = s_value(a_new, f_new)
            if s_new >= s_cur - noise:
                break
            t *= 0.5
        else:
            raise NumericalError("line search could not improve the objective")
        a, f, s_cur = a_new, f_new, max(s_new, s_cur)
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations "
        f"(last gradient norm {grad_norm:.3e})",
        grad_norm=grad_norm,
    )


def _chol_lower(K: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"covariance is not positive definite: {exc}") from exc


def posterior_covariance(K: np.ndarray, W: np.ndarray) -> np.ndarray:
    """(W + K^-1)^-1; the Gaussian posterior covariance of the rewards.

    Computed in factored form L (I + L^T W L)^-1 L^T with K = L L^T, which
    needs only one SPD solve against a well-conditioned matrix.
    """
    if K.shape != W.shape:
        raise DimensionMismatchError(f"K {K.shape} and W {W.shape} differ")
    L = _chol_lower(K)
    n = K.shape[0]
    B = L.T @ W @ L + np.eye(n)
    inner = solve_spd(0.5 * (B + B.T), L.T)
    out = L @ inner
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class PredictiveDistribution:
    """Joint Gaussian over the rewards of a test pair."""

    mu: np.ndarray      # shape (2,)
    sigma: np.ndarray   # shape (2, 2), symmetric PSD up to round-off

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))


@dataclass(frozen=True)
class PosteriorState:
    """Fitted model: data, kernel, mode, curvature, and solver by-products.

    Immutable after fitting; predictions against one state may run
    concurrently.
    """

    dataset: PreferenceDataset
    kernel: KernelConfig
    factors: UncertaintyFactors
    K: np.ndarray
    f_lap: np.ndarray
    W: np.ndarray
    iterations: int
    # cached factorizations: K = L L^T, B = I + L^T W L, alpha = K^-1 f_lap
    _L: np.ndarray = field(repr=False, default=None)
    _B_inv: np.ndarray = field(repr=False, default=None)
    _alpha: np.ndarray = field(repr=False, default=None)

    @property
    def n_points(self) -> int:
        return self.dataset.n_points


def fit_posterior(
    dataset: PreferenceDataset,
    kernel: KernelConfig,
    factors: UncertaintyFactors,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> PosteriorState:
    """Build the covariance, run the mode search, and cache solve products."""
    n = dataset.n_points
    if n == 0:
        z = np.zeros((0, 0))
        return PosteriorState(
            dataset.copy(), kernel, factors, z, np.zeros(0), z, 0,
            _L=z, _B_inv=z, _alpha=np.zeros(0),
        )
    K = build_covariance(dataset.points, kernel)
    f_lap, W, iters = laplace_mode(dataset, K, factors, max_iter=max_iter, tol=tol)
    L = _chol_lower(K)
    B = L.T @ W @ L + np.eye(n)
    B_inv = spd_inverse(0.5 * (B + B.T))
    alpha = solve_triangular(L.T, solve_triangular(L, f_lap, lower=True), lower=False)
    return PosteriorState(
        dataset.copy(), kernel, factors, K, f_lap, W, iters,
        _L=L, _B_inv=B_inv, _alpha=alpha,
    )


def _cross_terms(state: PosteriorState, X: np.ndarray):
    """k(X, training) and the whitened cross-covariance V = L^-1 k(X)^T.

    A test point that coincides with a training point (kernel value 1 to
    machine precision) takes the jittered self-covariance, so it identifies
    with that training value: its mean becomes the f_lap entry exactly and
    its variance the posterior variance of that entry.
    """
    kx = rbf_matrix(X, state.dataset.points, state.kernel)  # (m, n)
    if state.kernel.jitter > 0:
        kx = np.where(kx >= 1.0 - 1e-12, kx + state.kernel.jitter, kx)
    V = solve_triangular(state._L, kx.T, lower=True)        # (n, m)
    return kx, V


def predict_marginals(state: PosteriorState, X) -> tuple[np.ndarray, np.ndarray]:
    """Predictive mean and marginal variance at each row of X.

    mean = k^T K^-1 f_lap. The variance marginalizes the Gaussian posterior
    of the training rewards through the prior conditional; with V = L^-1 k
    and B = I + L^T W L it reads

        var = k(x,x) - V^T V + V^T B^-1 V

    which reverts to the prior when the data carry no curvature (W -> 0) and
    tightens toward noiseless interpolation as curvature grows.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if state.n_points == 0:
        return np.zeros(X.shape[0]), np.ones(X.shape[0])
    kx, V = _cross_terms(state, X)
    mu = kx @ state._alpha
    var = 1.0 - np.sum(V * V, axis=0) + np.sum(V * (state._B_inv @ V), axis=0)
    return mu, np.maximum(var, 0.0)


def predict(state: PosteriorState, x1, x2) -> PredictiveDistribution:
    """Joint predictive distribution for a test pair (x1, x2)."""
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    X = np.vstack([x1, x2])
    k12 = rbf_matrix(x1[None, :], x2[None, :], state.kernel)[0, 0]
    Kt = np.array([[1.0, k12], [k12, 1.0]])
    if state.n_points == 0:
        return PredictiveDistribution(np.zeros(2), Kt)
    kx, V = _cross_terms(state, X)
    mu = kx @ state._alpha
    sigma = Kt - V.T @ V + V.T @ state._B_inv @ V
    sigma = 0.5 * (sigma + sigma.T)
    d = np.diag(sigma).copy()
    if np.any(d < 0):
        # round-off guard; magnitudes here are at the jitter scale
        np.fill_diagonal(sigma, np.maximum(d, 0.0))
    return PredictiveDistribution(mu, sigma)


def predict_pair_batch(state: PosteriorState, A, B):
    """Vectorized pair prediction for candidate scoring.

    Returns (mu_a, mu_b, var_a, var_b, cov_ab) over m candidate pairs given
    as rows of A and B.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape != B.shape:
        raise DimensionMismatchError(f"A {A.shape} and B {B.shape} differ")
    m = A.shape[0]
    d = A - B
    kab = np.exp(-state.kernel.gamma * np.sum(d * d, axis=1))
    if state.n_points == 0:
        zeros = np.zeros(m)
        ones = np.ones(m)
        return zeros, zeros.copy(), ones, ones.copy(), kab
    ka, Va = _cross_terms(state, A)
    kb, Vb = _cross_terms(state, B)
    mu_a = ka @ state._alpha
    mu_b = kb @ state._alpha
    Ua = state._B_inv @ Va
    Ub = state._B_inv @ Vb
    var_a = 1.0 - np.sum(Va * Va, axis=0) + np.sum(Va * Ua, axis=0)
    var_b = 1.0 - np.sum(Vb * Vb, axis=0) + np.sum(Vb * Ub, axis=0)
    cov = kab - np.sum(Va * Vb, axis=0) + np.sum(Va * Ub, axis=0)
    return mu_a, mu_b, np.maximum(var_a, 0.0), np.maximum(var_b, 0.0), cov
