"""Axis-aligned feature domains: bounds, grids, and uniform sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError


@dataclass(frozen=True)
class Domain:
    """A box [lo_d, hi_d] per feature dimension."""

    bounds: np.ndarray  # shape (dim, 2)

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.bounds, dtype=float))
        if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] == 0:
            raise DomainError(f"bounds must have shape (dim, 2), got {b.shape}")
        if not np.all(np.isfinite(b)):
            raise DomainError("bounds must be finite")
        if np.any(b[:, 0] >= b[:, 1]):
            raise DomainError("each lower bound must be strictly below its upper bound")
        object.__setattr__(self, "bounds", b)

    @property
    def dim(self) -> int:
        return self.bounds.shape[0]

    @property
    def extents(self) -> np.ndarray:
        return self.bounds[:, 1] - self.bounds[:, 0]

    def contains(self, x, atol: float = 1e-9) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape[0] != self.dim:
            return False
        return bool(
            np.all(x >= self.bounds[:, 0] - atol)
            and np.all(x <= self.bounds[:, 1] + atol)
        )

    def sample(self, rng: np.random.Generator, count: int = 1) -> np.ndarray:
        """Uniform points, shape (count, dim)."""
        return rng.uniform(self.bounds[:, 0], self.bounds[:, 1], size=(count, self.dim))

    def grid(self, points_per_dim: int) -> np.ndarray:
        """Regular lattice flattened to shape (points_per_dim**dim, dim)."""
        if points_per_dim < 1:
            raise DomainError("points_per_dim must be at least 1")
        axes = [
            np.linspace(lo, hi, points_per_dim) for lo, hi in self.bounds
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)
