"""Sampled functions on [0, 1] and their square-root velocity transforms.

A function f observed on a uniform grid is represented by its values; the
square-root velocity transform q = sign(f') * sqrt(|f'|) turns the elastic
(warping-invariant) distance between functions into a plain L2 distance
between their transforms.  Everything here is discretized with second-order
central differences (one-sided at the endpoints) and trapezoid quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import InvalidInputError

__all__ = [
    "Grid",
    "SampledFunction",
    "Srvf",
    "derivative",
    "to_srvf",
    "from_srvf",
    "warp_function",
    "warp_srvf",
    "l2_dist",
    "sse",
]

# Tolerance for warp values straying outside [0, 1] before interpolation.
_RANGE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform sample points t_1..t_N with t_1 = 0 and t_N = 1, N >= 3."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 1 or pts.size < 3:
            raise InvalidInputError("grid needs at least 3 points")
        d = np.diff(pts)
        if not np.all(d > 0):
            raise InvalidInputError("grid points must be strictly increasing")
        if pts[0] != 0.0 or pts[-1] != 1.0:
            raise InvalidInputError("grid endpoints must be exactly 0 and 1")
        h = 1.0 / (pts.size - 1)
        if not np.allclose(d, h, rtol=0.0, atol=1e-9):
            raise InvalidInputError("grid must be uniform; resample irregular data first")

    @classmethod
    def uniform(cls, n: int) -> "Grid":
        return cls(np.linspace(0.0, 1.0, n))

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def spacing(self) -> float:
        return 1.0 / (self.points.size - 1)

    @property
    def trapz_weights(self) -> np.ndarray:
        """Quadrature weights w with sum(w * y) = trapezoid integral of y."""
        w = np.full(self.n, self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def matches(self, other: "Grid") -> bool:
        return self.n == other.n and np.array_equal(self.points, other.points)


def _require_same_grid(a, b):
    if not a.grid.matches(b.grid):
        raise InvalidInputError("operands must share the same grid")


def _check_values(grid: Grid, values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (grid.n,):
        raise InvalidInputError(
            f"values length {v.shape} does not match grid length {grid.n}"
        )
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("values must be finite")
    return v


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Real-valued function sampled on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values))

    @classmethod
    def from_values(cls, values) -> "SampledFunction":
        values = np.asarray(values, dtype=np.float64)
        return cls(Grid.uniform(values.size), values)


@dataclass(frozen=True, eq=False)
class Srvf:
    """Square-root velocity representation of a sampled function."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values))

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.grid.trapz_weights @ self.values**2))


def derivative(f: SampledFunction) -> SampledFunction:
    """Finite-difference derivative: central interior, one-sided endpoints.

    Exact for affine functions on uniform grids.
    """
    d = np.gradient(f.values, f.grid.spacing, edge_order=1)
    return SampledFunction(f.grid, d)


def to_srvf(f: SampledFunction) -> Srvf:
    """q = sign(f') * sqrt(|f'|)."""
    d = derivative(f).values
    return Srvf(f.grid, np.sign(d) * np.sqrt(np.abs(d)))


def from_srvf(q: Srvf, f0: float = 0.0) -> SampledFunction:
    """Integrate q|q| back to a function with f(0) = f0."""
    integrand = q.values * np.abs(q.values)
    vals = f0 + cumulative_trapezoid(integrand, dx=q.grid.spacing, initial=0.0)
    return SampledFunction(q.grid, vals)


def _checked_warp_values(gamma) -> np.ndarray:
    gv = np.asarray(gamma.values, dtype=np.float64)
    if gv.min() < -_RANGE_TOL or gv.max() > 1.0 + _RANGE_TOL:
        raise InvalidInputError("warp values leave [0, 1] beyond tolerance")
    return np.clip(gv, 0.0, 1.0)


def warp_function(f: SampledFunction, gamma) -> SampledFunction:
    """Compose f with a warp: (f o gamma)(t_i) by linear interpolation."""
    _require_same_grid(f, gamma)
    gv = _checked_warp_values(gamma)
    return SampledFunction(f.grid, np.interp(gv, f.grid.points, f.values))


def warp_srvf(q: Srvf, gamma) -> Srvf:
    """Warp action on transforms: (q o gamma) * sqrt(gamma')."""
    _require_same_grid(q, gamma)
    gv = _checked_warp_values(gamma)
    dgamma = np.gradient(gamma.values, q.grid.spacing, edge_order=1)
    root = np.sqrt(np.maximum(dgamma, 0.0))
    return Srvf(q.grid, np.interp(gv, q.grid.points, q.values) * root)


def l2_dist(a, b) -> float:
    """L2 distance sqrt(integral (a-b)^2) by trapezoid rule."""
    _require_same_grid(a, b)
    diff = a.values - b.values
    return float(np.sqrt(a.grid.trapz_weights @ diff**2))


def sse(a, b) -> float:
    """Pointwise sum of squared differences between two sampled objects."""
    _require_same_grid(a, b)
    return float(np.sum((a.values - b.values) ** 2))
