"""Mapping self-reported confidence to probit scales.

The canonical single-pair problem (two points with kernel correlation rho)
yields a reward-gap-versus-noise curve whose decreasing tail is invertible.
Default factors read four percentage points off that tail; the per-user
procedure replays the same inversion on the quantiles of gaps the user
labeled with each level while describing a known function.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .domain import Domain
from .exceptions import CalibrationRangeError, NumericalError
from .preference import LEVELS, UncertaintyFactors, laplace_mode_arrays

DEFAULT_RHO = 0.5
DEFAULT_QUERY_COUNT = 50

#: the level-4 target is an absolute near-zero gap, not a fraction of the max
LEVEL4_TARGET_GAP = 1e-3


def default_u_grid() -> np.ndarray:
    """200 log-spaced noise scales covering the rising head and decaying tail."""
    return np.logspace(-2, 4, 200)


@dataclass(frozen=True)
class CalibrationCurve:
    """Laplace-mode reward gap of the canonical pair across noise scales."""

    u_grid: np.ndarray
    delta_flap: np.ndarray
    rho: float
    gamma: float | None = None
    tail_start: int = 0  # index of the last maximum; the tail is invertible

    @property
    def d_max(self) -> float:
        return float(self.delta_flap[self.tail_start])

    @property
    def tail_u(self) -> np.ndarray:
        return self.u_grid[self.tail_start :]

    @property
    def tail_delta(self) -> np.ndarray:
        return self.delta_flap[self.tail_start :]

    def invert(self, target: float) -> float:
        """u with tail gap equal to `target`, by monotone interpolation."""
        td = self.tail_delta
        if not (td[-1] <= target <= td[0]):
            raise CalibrationRangeError(
                f"target {target:.6g} outside the tail range "
                f"[{td[-1]:.6g}, {td[0]:.6g}]"
            )
        # tail is strictly decreasing; negate for np.interp's increasing order
        return float(np.interp(-target, -td, self.tail_u))

    def evaluate(self, u: float) -> float:
        """Gap at noise scale u on the tail, by interpolation."""
        tu = self.tail_u
        if not (tu[0] <= u <= tu[-1]):
            raise CalibrationRangeError(
                f"u={u:.6g} outside the tail [{tu[0]:.6g}, {tu[-1]:.6g}]"
            )
        return float(np.interp(u, tu, self.tail_delta))


def compute_delta_flap_curve(
    gamma: float | None = None,
    rho: float = DEFAULT_RHO,
    u_grid: np.ndarray | None = None,
) -> CalibrationCurve:
    """Solve the canonical two-point mode problem across the noise grid."""
    if not (0.0 <= rho < 1.0):
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    grid = default_u_grid() if u_grid is None else np.asarray(u_grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0) or grid[0] <= 0:
        raise ValueError("u_grid must be increasing and positive")
    K = np.array([[1.0, rho], [rho, 1.0]])
    w = np.array([0])
    l = np.array([1])
    deltas = np.empty(len(grid))
    for i, u in enumerate(grid):
        try:
            f, _, _ = laplace_mode_arrays(2, w, l, np.array([u]), K)
        except NumericalError as exc:
            raise NumericalError(f"mode search failed at u={u:.6g}: {exc}") from exc
        deltas[i] = abs(f[0] - f[1])
    tail_start = int(len(deltas) - 1 - np.argmax(deltas[::-1]))  # last maximum
    tail = deltas[tail_start:]
    if len(tail) < 2 or np.any(np.diff(tail) >= 0):
        raise NumericalError("curve tail is not strictly decreasing; widen u_grid")
    return CalibrationCurve(grid, deltas, rho, gamma, tail_start)


@lru_cache(maxsize=16)
def _cached_curve(rho: float) -> CalibrationCurve:
    return compute_delta_flap_curve(rho=rho)


def default_curve(rho: float = DEFAULT_RHO) -> CalibrationCurve:
    return _cached_curve(float(rho))


def default_uncertainty_factors(
    curve: CalibrationCurve | None = None,
) -> UncertaintyFactors:
    """Factors at tail gaps {max, 2/3 max, 1/3 max, ~0}."""
    c = curve if curve is not None else default_curve()
    dm = c.d_max
    return UncertaintyFactors(
        u1=c.invert(dm),
        u2=c.invert(2.0 * dm / 3.0),
        u3=c.invert(dm / 3.0),
        u4=c.invert(LEVEL4_TARGET_GAP),
    )


@dataclass(frozen=True)
class CalibrationAnswer:
    """One labeled comparison against the known function."""

    x1: np.ndarray
    x2: np.ndarray
    level: int
    gap: float  # |f_calib(x1) - f_calib(x2)|


@dataclass
class CalibrationSession:
    """Answer log plus the known function's value range."""

    f_min: float
    f_max: float
    answers: list[CalibrationAnswer] = field(default_factory=list)

    def __post_init__(self):
        if not self.f_max > self.f_min:
            raise ValueError("f_max must exceed f_min")

    def record(self, x1, x2, level: int, gap: float) -> None:
        if level not in LEVELS:
            raise ValueError(f"level must be one of {LEVELS}, got {level}")
        self.answers.append(
            CalibrationAnswer(np.asarray(x1, float), np.asarray(x2, float), level, float(gap))
        )

    def level_mean_gaps(self) -> dict[int, float | None]:
        """Mean recorded gap per level; None for levels never used."""
        out: dict[int, float | None] = {}
        for level in LEVELS:
            gaps = [a.gap for a in self.answers if a.level == level]
            out[level] = float(np.mean(gaps)) if gaps else None
        return out

    def level_quantiles(self) -> dict[int, float | None]:
        """Range-normalized mean gaps: (mean - f_min) / (f_max - f_min)."""
        span = self.f_max - self.f_min
        return {
            level: None if m is None else (m - self.f_min) / span
            for level, m in self.level_mean_gaps().items()
        }


def _isotonic_increasing(values: np.ndarray) -> np.ndarray:
    """Pooled-adjacent-violators fit, then ties nudged to strict increase."""
    v = values.astype(float).copy()
    w = np.ones_like(v)
    i = 0
    while i < len(v) - 1:
        if v[i] > v[i + 1]:
            pooled = (w[i] * v[i] + w[i + 1] * v[i + 1]) / (w[i] + w[i + 1])
            v[i] = v[i + 1] = pooled
            w[i] = w[i + 1] = w[i] + w[i + 1]
            i = max(i - 1, 0)
        else:
            i += 1
    for i in range(1, len(v)):
        if v[i] <= v[i - 1]:
            v[i] = v[i - 1] * (1.0 + 1e-9) + 1e-12
    return v


def calibrate_user(
    session: CalibrationSession, curve: CalibrationCurve | None = None
) -> UncertaintyFactors:
    """Personalized factors from the per-level gap quantiles.

    Levels the user never chose fall back to the default factor; raw factors
    that violate the required ordering are repaired isotonically. Both cases
    emit a warning.
    """
    c = curve if curve is not None else default_curve()
    defaults = default_uncertainty_factors(c)
    quantiles = session.level_quantiles()
    dm = c.d_max
    lo = float(c.tail_delta[-1])
    raw = []
    for level in LEVELS:
        q = quantiles[level]
        if q is None:
            warnings.warn(
                f"level {level} unused during calibration; using the default factor",
                UserWarning,
                stacklevel=2,
            )
            raw.append(defaults.for_level(level))
            continue
        target = q * dm
        if target > dm or target < lo:
            warnings.warn(
                f"level {level} quantile {q:.4f} maps outside the curve tail; clamped",
                UserWarning,
                stacklevel=2,
            )
            target = min(max(target, lo), dm)
        raw.append(c.invert(target))
    arr = np.array(raw)
    if np.any(np.diff(arr) <= 0):
        warnings.warn(
            "calibrated factors were not increasing; applying isotonic repair",
            UserWarning,
            stacklevel=2,
        )
        arr = _isotonic_increasing(arr)
    return UncertaintyFactors(*[float(v) for v in arr])


def generate_calibration_queries(
    f_calib, count: int = DEFAULT_QUERY_COUNT, seed: int = 0
) -> np.ndarray:
    """Seeded uniform pairs over the function's domain, no identical points.

    `f_calib` exposes a `domain` attribute (any ground-truth task works).
    Returns an array of shape (count, 2, dim).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    domain: Domain = f_calib.domain
    rng = np.random.default_rng(seed)
    a = domain.sample(rng, count)
    b = domain.sample(rng, count)
    same = np.all(a == b, axis=1)
    while np.any(same):
        b[same] = domain.sample(rng, int(same.sum()))
        same = np.all(a == b, axis=1)
    return np.stack([a, b], axis=1)
