import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uupl.exceptions import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    UndefinedCorrelationError,
)
from uupl.numerics import (
    KernelConfig,
    binary_entropy,
    build_covariance,
    median_heuristic_gamma,
    rbf_kernel,
    sample_correlation,
    solve_spd,
    std_normal_cdf,
    std_normal_pdf,
)


class TestStdNormalCdf:
    def test_zero(self):
        assert std_normal_cdf(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_one(self):
        # high-precision erf oracle: 0.5*erfc(-1/sqrt(2)) at 30 digits
        assert std_normal_cdf(1.0) == pytest.approx(0.841344746069, abs=1e-9)

    def test_minus_one(self):
        assert std_normal_cdf(-1.0) == pytest.approx(0.158655253931, abs=1e-9)

    @given(st.floats(-8, 8))
    def test_complement(self, z):
        assert std_normal_cdf(z) + std_normal_cdf(-z) == pytest.approx(1.0, abs=1e-12)

    def test_monotone(self):
        z = np.linspace(-10, 10, 400)
        v = std_normal_cdf(z)
        assert np.all(np.diff(v) >= 0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            std_normal_cdf(np.nan)
        with pytest.raises(ValueError):
            std_normal_cdf(np.inf)

    def test_inverse_identity(self):
        # bisection inverse oracle on [-6, 6]; inverts through the lower
        # tail, where the CDF keeps full relative precision
        def lower_inverse(p):
            lo, hi = -10.0, 0.0
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if std_normal_cdf(mid) < p:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        for z in np.linspace(-6, 6, 25):
            if z <= 0:
                recovered = lower_inverse(std_normal_cdf(z))
            else:
                recovered = -lower_inverse(std_normal_cdf(-z))
            assert recovered == pytest.approx(z, abs=1e-9)


class TestStdNormalPdf:
    def test_zero(self):
        assert std_normal_pdf(0.0) == pytest.approx(0.398942280401, abs=1e-9)

    def test_even(self):
        assert std_normal_pdf(2.0) == std_normal_pdf(-2.0)

    def test_tail_underflow(self):
        assert std_normal_pdf(40.0) < 1e-300

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            std_normal_pdf(np.inf)


class TestBinaryEntropy:
    def test_half(self):
        assert binary_entropy(0.5) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("p", [0.0, 1.0])
    def test_degenerate(self, p):
        assert binary_entropy(p) == 0.0

    def test_quarter(self):
        # -p log2 p - (1-p) log2 (1-p) at p=1/4, mpmath oracle
        assert binary_entropy(0.25) == pytest.approx(0.811278124459, abs=1e-9)

    @given(st.floats(0, 1))
    def test_symmetry(self, p):
        assert binary_entropy(p) == pytest.approx(binary_entropy(1 - p), abs=1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            binary_entropy(1.5)
        with pytest.raises(ValueError):
            binary_entropy(-0.1)


class TestRbfKernel:
    def test_zero_distance(self):
        cfg = KernelConfig(gamma=1.0)
        x = np.array([0.3, -1.2])
        assert rbf_kernel(x, x, cfg) == 1.0

    def test_unit_distance(self):
        cfg = KernelConfig(gamma=1.0)
        assert rbf_kernel([0.0], [1.0], cfg) == pytest.approx(np.exp(-1), rel=1e-12)

    def test_gamma_distance_tradeoff(self):
        # gamma * d^2 is all that matters
        cfg = KernelConfig(gamma=0.5)
        assert rbf_kernel([0.0, 0.0], [1.0, 1.0], cfg) == pytest.approx(
            np.exp(-1), rel=1e-12
        )

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            rbf_kernel([0.0], [0.0, 1.0], KernelConfig(gamma=1.0))

    def test_isometry_invariance(self, rng):
        cfg = KernelConfig(gamma=0.7)
        theta = 0.83
        R = np.array(
            [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
        )
        shift = np.array([2.0, -3.0])
        for _ in range(10):
            a, b = rng.normal(size=(2, 2))
            assert rbf_kernel(a, b, cfg) == pytest.approx(
                rbf_kernel(R @ a + shift, R @ b + shift, cfg), rel=1e-12
            )

    def test_config_validation(self):
        with pytest.raises(ValueError):
            KernelConfig(gamma=0.0)
        with pytest.raises(ValueError):
            KernelConfig(gamma=1.0, jitter=-1e-9)


class TestBuildCovariance:
    def test_single_point(self):
        K = build_covariance([[0.0]], KernelConfig(gamma=1.0, jitter=1e-6))
        assert K.shape == (1, 1)
        assert K[0, 0] == pytest.approx(1 + 1e-6)

    def test_duplicate_points_spd(self):
        K = build_covariance([[0.0], [0.0]], KernelConfig(gamma=1.0, jitter=1e-6))
        assert K[0, 1] == pytest.approx(1.0)
        assert np.allclose(np.diag(K), 1 + 1e-6)
        np.linalg.cholesky(K)  # SPD after jitter

    def test_collinear_points(self):
        K = build_covariance(
            [[0.0], [1.0], [2.0]], KernelConfig(gamma=1.0, jitter=0.0)
        )
        assert K[0, 1] == pytest.approx(np.exp(-1), rel=1e-12)
        assert K[0, 2] == pytest.approx(np.exp(-4), rel=1e-12)

    def test_random_sets_near_psd(self, rng):
        for _ in range(5):
            pts = rng.uniform(-3, 3, size=(12, 2))
            raw = build_covariance(pts, KernelConfig(gamma=0.5, jitter=0.0))
            assert np.linalg.eigvalsh(raw).min() >= -1e-10
            jittered = build_covariance(pts, KernelConfig(gamma=0.5, jitter=1e-6))
            assert np.linalg.eigvalsh(jittered).min() > 0

    def test_symmetry_and_diagonal(self, rng):
        pts = rng.normal(size=(8, 3))
        K = build_covariance(pts, KernelConfig(gamma=0.3, jitter=1e-6))
        assert np.max(np.abs(K - K.T)) < 1e-12
        assert np.allclose(np.diag(K), 1 + 1e-6)


class TestSolveSpd:
    def test_identity(self):
        b = np.array([1.0, 2.0, 3.0])
        assert np.allclose(solve_spd(np.eye(3), b), b)

    def test_diagonal(self):
        x = solve_spd(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0])

    def test_residual(self, rng):
        A = rng.normal(size=(5, 5))
        A = A @ A.T + 5 * np.eye(5)
        B = rng.normal(size=(5, 2))
        X = solve_spd(A, B)
        res = np.max(np.abs(A @ X - B))
        assert res < 1e-8 * np.max(np.abs(B))

    def test_not_spd(self):
        with pytest.raises(NotPositiveDefiniteError):
            solve_spd(np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones(2))  # indefinite
        with pytest.raises(NotPositiveDefiniteError):
            solve_spd(np.array([[1.0, 0.5], [0.0, 1.0]]), np.ones(2))  # asymmetric

    def test_dimension_mismatch_is_distinct(self):
        with pytest.raises(DimensionMismatchError):
            solve_spd(np.eye(3), np.ones(2))


class TestSampleCorrelation:
    def test_self(self, rng):
        v = rng.normal(size=10)
        assert sample_correlation(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_negated(self, rng):
        v = rng.normal(size=10)
        assert sample_correlation(v, -v) == pytest.approx(-1.0, abs=1e-12)

    def test_known_value(self):
        # direct formula oracle: 14 / sqrt(5 * 50)
        assert sample_correlation([1, 2, 3, 4], [1, 2, 3, 10]) == pytest.approx(
            0.885437744847, abs=1e-9
        )

    @given(st.floats(0.1, 100), st.floats(-50, 50))
    @settings(max_examples=30)
    def test_affine_invariance(self, a, b):
        f = np.array([0.3, -1.0, 2.5, 0.7, -0.2])
        g = np.array([1.0, 0.5, -0.3, 2.0, 1.5])
        assert sample_correlation(a * f + b, g) == pytest.approx(
            sample_correlation(f, g), abs=1e-12
        )

    def test_symmetry(self, rng):
        f, g = rng.normal(size=(2, 20))
        assert sample_correlation(f, g) == pytest.approx(
            sample_correlation(g, f), abs=1e-14
        )

    def test_constant_vector(self):
        with pytest.raises(UndefinedCorrelationError):
            sample_correlation([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            sample_correlation([1.0, 2.0], [1.0, 2.0, 3.0])


def test_median_heuristic_gamma():
    pts = np.linspace(0, 1, 11)[:, None]
    g = median_heuristic_gamma(pts)
    assert g > 0
    # scale-free: doubling the coordinates quarters gamma
    g2 = median_heuristic_gamma(2 * pts)
    assert g2 == pytest.approx(g / 4, rel=1e-9)
