import numpy as np
import pytest

from uupl.exceptions import DimensionMismatchError
from uupl.numerics import KernelConfig, build_covariance, log_std_normal_cdf
from uupl.preference import (
    PreferenceDataset,
    PreferencePair,
    UncertaintyFactors,
    choice_probability,
    fit_posterior,
    laplace_mode,
    laplace_mode_arrays,
    log_likelihood,
    objective_gradient,
    objective_hessian,
    objective_value,
    posterior_covariance,
    predict,
    predict_marginals,
    predict_pair_batch,
)

KCFG = KernelConfig(gamma=0.5)


def random_dataset(rng, n_points=6, n_pairs=8, dim=1):
    ds = PreferenceDataset(rng.uniform(-2, 2, size=(n_points, dim)))
    for _ in range(n_pairs):
        i, j = rng.choice(n_points, size=2, replace=False)
        ds.pairs.append(PreferencePair(int(i), int(j), int(rng.integers(1, 5))))
    return ds


class TestTypes:
    def test_factors_ordering(self):
        with pytest.raises(ValueError):
            UncertaintyFactors(1.0, 0.5, 2.0, 3.0)
        with pytest.raises(ValueError):
            UncertaintyFactors(-1.0, 0.5, 2.0, 3.0)
        f = UncertaintyFactors(0.5, 1.0, 2.0, 4.0)
        assert f.for_level(3) == 2.0
        with pytest.raises(ValueError):
            f.for_level(5)

    def test_pair_validation(self):
        with pytest.raises(ValueError):
            PreferencePair(1, 1, 1)
        with pytest.raises(ValueError):
            PreferencePair(0, 1, 7)

    def test_dataset_merges_duplicates(self):
        ds = PreferenceDataset(np.zeros((0, 1)))
        ds.add_comparison([0.5], [1.5], 1, 2)
        ds.add_comparison([0.5 + 1e-14], [2.5], 2, 1)
        assert ds.n_points == 3  # the 0.5 point was reused
        assert ds.pairs[1].winner_idx == 2  # choice 2 means second point won

    def test_dataset_rejects_identical(self):
        ds = PreferenceDataset(np.zeros((0, 1)))
        with pytest.raises(ValueError):
            ds.add_comparison([1.0], [1.0], 1, 1)

    def test_dataset_index_bounds(self):
        with pytest.raises(ValueError):
            PreferenceDataset(np.zeros((2, 1)), [PreferencePair(0, 5, 1)])


class TestChoiceProbability:
    def test_indifferent(self):
        assert choice_probability(0.0, 2.7) == pytest.approx(0.5, abs=1e-15)

    def test_confident(self):
        # Phi(10): confident choices at low noise approach certainty
        assert choice_probability(1.0, 0.1) == pytest.approx(1.0, abs=1e-12)

    def test_uncertain(self):
        # erf oracle for Phi(1/3): high noise contracts toward a coin flip
        assert choice_probability(1.0, 3.0) == pytest.approx(0.630558659818, abs=1e-9)

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            choice_probability(1.0, 0.0)


class TestLogLikelihood:
    def test_empty(self, factors):
        ds = PreferenceDataset(np.array([[0.0], [1.0]]))
        assert log_likelihood(ds, np.zeros(2), factors) == 0.0

    def test_tied_pair(self, factors):
        ds = PreferenceDataset(np.array([[0.0], [1.0]]), [PreferencePair(0, 1, 2)])
        assert log_likelihood(ds, np.zeros(2), factors) == pytest.approx(np.log(0.5))

    def test_additivity(self, factors, rng):
        ds1 = PreferenceDataset(np.array([[0.0], [1.0]]), [PreferencePair(0, 1, 3)])
        ds2 = PreferenceDataset(
            np.array([[0.0], [1.0]]),
            [PreferencePair(0, 1, 3), PreferencePair(0, 1, 3)],
        )
        f = rng.normal(size=2)
        assert log_likelihood(ds2, f, factors) == pytest.approx(
            2 * log_likelihood(ds1, f, factors), rel=1e-12
        )

    def test_shape_check(self, factors):
        ds = PreferenceDataset(np.array([[0.0], [1.0]]))
        with pytest.raises(DimensionMismatchError):
            log_likelihood(ds, np.zeros(3), factors)


def brute_force_two_point_mode(u, rho, span=3.0, stages=5, grid_n=61):
    """Coarse-to-fine 2-D grid search over the mode objective."""
    Kinv = np.linalg.inv(np.array([[1.0, rho], [rho, 1.0]]))

    def S(f0, f1):
        quad = Kinv[0, 0] * f0 * f0 + 2 * Kinv[0, 1] * f0 * f1 + Kinv[1, 1] * f1 * f1
        return log_std_normal_cdf((f0 - f1) / u) - 0.5 * quad

    c0 = c1 = 0.0
    width = span
    for _ in range(stages):
        g0 = np.linspace(c0 - width, c0 + width, grid_n)
        g1 = np.linspace(c1 - width, c1 + width, grid_n)
        F0, F1 = np.meshgrid(g0, g1, indexing="ij")
        vals = S(F0, F1)
        i, j = np.unravel_index(np.argmax(vals), vals.shape)
        c0, c1 = g0[i], g1[j]
        width = width * 8.8 / (grid_n - 1)
    return np.array([c0, c1])


class TestLaplaceMode:
    def test_empty_dataset(self, factors):
        ds = PreferenceDataset(np.array([[0.0], [1.0]]))
        K = build_covariance(ds.points, KCFG)
        f, W, iters = laplace_mode(ds, K, factors)
        assert np.all(f == 0) and np.all(W == 0) and iters == 0

    def test_flat_likelihood_limit(self):
        # enormous noise: the prior penalty wins and the gap collapses
        f, _, _ = laplace_mode_arrays(
            2, np.array([0]), np.array([1]), np.array([1e6]),
            np.array([[1.0, 0.5], [0.5, 1.0]]),
        )
        assert abs(f[0] - f[1]) < 1e-3

    def test_against_grid_search(self):
        f, _, _ = laplace_mode_arrays(
            2, np.array([0]), np.array([1]), np.array([1.0]),
            np.array([[1.0, 0.5], [0.5, 1.0]]),
        )
        fb = brute_force_two_point_mode(1.0, 0.5)
        assert np.max(np.abs(f - fb)) < 1e-4

    def test_stationarity_and_curvature(self, factors, rng):
        for _ in range(5):
            ds = random_dataset(rng)
            K = build_covariance(ds.points, KCFG)
            f, W, _ = laplace_mode(ds, K, factors)
            # W is PSD with zero row sums: pair contributions act on differences
            assert np.linalg.eigvalsh(W).min() >= -1e-10
            assert np.max(np.abs(W.sum(axis=1))) < 1e-10
            # objective concave at the mode
            H = objective_hessian(ds, K, f, factors)
            assert np.linalg.eigvalsh(H).max() < 0

    def test_mode_beats_origin(self, factors, rng):
        ds = random_dataset(rng, n_pairs=10)
        K = build_covariance(ds.points, KCFG)
        f, _, _ = laplace_mode(ds, K, factors)
        assert objective_value(ds, K, f, factors) >= objective_value(
            ds, K, np.zeros(ds.n_points), factors
        )

    def test_gradient_matches_finite_differences(self, factors, rng):
        ds = random_dataset(rng, n_points=5, n_pairs=7)
        K = build_covariance(ds.points, KCFG)
        h = 1e-5
        for _ in range(5):
            f = rng.normal(scale=0.8, size=ds.n_points)
            g = objective_gradient(ds, K, f, factors)
            fd = np.zeros_like(g)
            for i in range(len(f)):
                e = np.zeros_like(f)
                e[i] = h
                fd[i] = (
                    objective_value(ds, K, f + e, factors)
                    - objective_value(ds, K, f - e, factors)
                ) / (2 * h)
            assert np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-12) < 1e-5

    def test_hessian_action_matches_finite_differences(self, factors, rng):
        ds = random_dataset(rng, n_points=5, n_pairs=7)
        K = build_covariance(ds.points, KCFG)
        h = 1e-5
        f = rng.normal(scale=0.5, size=ds.n_points)
        H = objective_hessian(ds, K, f, factors)
        for _ in range(3):
            v = rng.normal(size=ds.n_points)
            v /= np.linalg.norm(v)
            fd = (
                objective_gradient(ds, K, f + h * v, factors)
                - objective_gradient(ds, K, f - h * v, factors)
            ) / (2 * h)
            assert np.max(np.abs(H @ v - fd)) / max(np.max(np.abs(fd)), 1e-12) < 1e-5

    def test_permutation_equivariance(self, factors, rng):
        ds = random_dataset(rng, n_points=5, n_pairs=6)
        K = build_covariance(ds.points, KCFG)
        f, _, _ = laplace_mode(ds, K, factors)
        perm = rng.permutation(ds.n_points)
        inv = np.argsort(perm)
        ds2 = PreferenceDataset(
            ds.points[perm],
            [
                PreferencePair(int(inv[p.winner_idx]), int(inv[p.loser_idx]), p.level)
                for p in ds.pairs
            ],
        )
        K2 = build_covariance(ds2.points, KCFG)
        f2, _, _ = laplace_mode(ds2, K2, factors)
        assert np.max(np.abs(f2 - f[perm])) < 1e-10

    def test_level_monotonicity(self, factors):
        # a fixed pair answered at increasing uncertainty yields shrinking gaps
        K = np.array([[1.0, 0.5], [0.5, 1.0]])
        gaps = []
        for u in (factors.u1, factors.u2, factors.u3, factors.u4):
            f, _, _ = laplace_mode_arrays(
                2, np.array([0]), np.array([1]), np.array([u]), K
            )
            gaps.append(abs(f[0] - f[1]))
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_winner_above_loser(self, factors, rng):
        # non-conflicting level-1 answers put every winner above its loser
        for _ in range(5):
            pts = rng.uniform(-2, 2, size=(5, 1))
            order = np.argsort(pts[:, 0])
            ds = PreferenceDataset(pts)
            for a, b in zip(order[1:], order[:-1]):
                ds.pairs.append(PreferencePair(int(a), int(b), 1))
            K = build_covariance(ds.points, KCFG)
            f, _, _ = laplace_mode(ds, K, factors)
            for p in ds.pairs:
                assert f[p.winner_idx] > f[p.loser_idx]


class TestPosteriorCovariance:
    def test_no_data_returns_prior(self, rng):
        pts = rng.normal(size=(4, 1))
        K = build_covariance(pts, KCFG)
        assert np.allclose(posterior_covariance(K, np.zeros((4, 4))), K, atol=1e-10)

    def test_identity_case(self):
        out = posterior_covariance(np.eye(3), np.eye(3))
        assert np.allclose(out, 0.5 * np.eye(3), atol=1e-12)

    def test_against_dense_inverse(self, rng):
        A = rng.normal(size=(4, 4))
        K = A @ A.T + 4 * np.eye(4)
        B = rng.normal(size=(4, 2))
        W = B @ B.T
        expected = np.linalg.inv(W + np.linalg.inv(K))
        assert np.max(np.abs(posterior_covariance(K, W) - expected)) < 1e-8


def brute_force_predict(dataset, kernel, factors, X):
    """Explicit-matrix reference: dense inverses, no cached factorizations."""
    from uupl.numerics import rbf_matrix

    K = build_covariance(dataset.points, kernel)
    f_lap, W, _ = laplace_mode(dataset, K, factors)
    Kinv = np.linalg.inv(K)
    P = np.linalg.inv(W + Kinv)
    kx = rbf_matrix(X, dataset.points, kernel)
    kx = np.where(kx >= 1.0 - 1e-12, kx + kernel.jitter, kx)
    mu = kx @ Kinv @ f_lap
    var = 1.0 - np.sum((kx @ Kinv) * kx, axis=1) + np.sum(
        (kx @ Kinv @ P) * (kx @ Kinv), axis=1
    )
    return mu, var


class TestPredict:
    def test_empty_dataset_prior(self, factors):
        ds = PreferenceDataset(np.zeros((0, 1)))
        state = fit_posterior(ds, KCFG, factors)
        pred = predict(state, [0.3], [0.9])
        assert np.allclose(pred.mu, 0.0)
        k12 = np.exp(-KCFG.gamma * 0.36)
        assert np.allclose(pred.sigma, [[1.0, k12], [k12, 1.0]], atol=1e-12)

    def test_training_point_mean_matches_mode(self, factors, rng):
        ds = random_dataset(rng, n_points=6, n_pairs=8)
        state = fit_posterior(ds, KCFG, factors)
        mu, _ = predict_marginals(state, ds.points)
        assert np.max(np.abs(mu - state.f_lap)) < 1e-8

    def test_no_pairs_reverts_to_prior(self, factors):
        # points with no comparisons carry no information: the predictive
        # variance stays at the prior level everywhere
        ds = PreferenceDataset(np.array([[0.0], [1.0]]))
        state = fit_posterior(ds, KCFG, factors)
        _, var = predict_marginals(state, np.array([[0.0], [0.5]]))
        assert np.all(np.abs(var - 1.0) < 1e-5)

    def test_matches_explicit_matrix_oracle(self, factors, rng):
        pts = rng.uniform(0, 4, size=(8, 1))
        ds = PreferenceDataset(pts)
        for _ in range(5):
            i, j = rng.choice(8, 2, replace=False)
            ds.pairs.append(PreferencePair(int(i), int(j), int(rng.integers(1, 5))))
        state = fit_posterior(ds, KCFG, factors)
        X = np.linspace(0, 4, 100)[:, None]
        mu, var = predict_marginals(state, X)
        mu_ref, var_ref = brute_force_predict(ds, KCFG, factors, X)
        assert np.max(np.abs(mu - mu_ref)) < 1e-8
        assert np.max(np.abs(var - np.maximum(var_ref, 0.0))) < 1e-8

    def test_pair_sigma_psd(self, factors, rng):
        ds = random_dataset(rng, n_points=7, n_pairs=9)
        state = fit_posterior(ds, KCFG, factors)
        for _ in range(10):
            x1, x2 = rng.uniform(-2, 2, size=(2, 1))
            pred = predict(state, x1, x2)
            assert np.max(np.abs(pred.sigma - pred.sigma.T)) < 1e-12
            assert np.linalg.eigvalsh(pred.sigma).min() >= -1e-8
            v1, v2 = pred.sigma[0, 0], pred.sigma[1, 1]
            if v1 > 0 and v2 > 0:
                assert abs(pred.sigma[0, 1]) / np.sqrt(v1 * v2) <= 1 + 1e-8

    def test_batch_consistency(self, factors, rng):
        ds = random_dataset(rng, n_points=6, n_pairs=7, dim=2)
        state = fit_posterior(ds, KCFG, factors)
        A = rng.uniform(-2, 2, size=(5, 2))
        B = rng.uniform(-2, 2, size=(5, 2))
        mu_a, mu_b, var_a, var_b, cov = predict_pair_batch(state, A, B)
        for i in range(5):
            pred = predict(state, A[i], B[i])
            assert mu_a[i] == pytest.approx(pred.mu[0], abs=1e-10)
            assert mu_b[i] == pytest.approx(pred.mu[1], abs=1e-10)
            assert var_a[i] == pytest.approx(pred.sigma[0, 0], abs=1e-10)
            assert cov[i] == pytest.approx(pred.sigma[0, 1], abs=1e-10)
