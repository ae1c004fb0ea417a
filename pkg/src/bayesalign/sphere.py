"""Geometry of the warping-function space.

A boundary-preserving warp gamma maps to psi = sqrt(gamma'), a point on the
unit sphere in L2([0,1]); tangent vectors at the constant function 1 are
zero-mean L2 functions.  This module provides the gamma <-> psi maps, the
exponential map and its inverse at 1, the great-circle distance, intrinsic
(Karcher) means and medians, and distance-based mode clustering.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.integrate import cumulative_trapezoid
from scipy.spatial.distance import squareform

from .errors import InjectivityError, InvalidInputError
from .srvf import Grid, _check_values, _require_same_grid

__all__ = [
    "Warping",
    "Psi",
    "TangentFunction",
    "KarcherResult",
    "gamma_to_psi",
    "psi_to_gamma",
    "exp_map",
    "inv_exp_map",
    "geodesic_dist",
    "karcher_center",
    "cluster_modes",
    "identity_warping",
]

# Reject tangent norms / distances at or beyond pi - this margin.
INJECTIVITY_MARGIN = 1e-6
_MONOTONE_TOL = 1e-12
_UNIT_NORM_TOL = 1e-8
_MEAN_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Warping:
    """Discretized warp: nondecreasing values with gamma(0)=0, gamma(1)=1."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = _check_values(self.grid, self.values)
        object.__setattr__(self, "values", v)
        if abs(v[0]) > _MONOTONE_TOL or abs(v[-1] - 1.0) > _MONOTONE_TOL:
            raise InvalidInputError("warp must fix the endpoints 0 and 1")
        if np.min(np.diff(v)) < -_MONOTONE_TOL:
            raise InvalidInputError("warp values must be nondecreasing")


@dataclass(frozen=True, eq=False)
class Psi:
    """Square-root density of a warp: a unit-norm point on the L2 sphere.

    Valid warps live on the nonnegative orthant; exponential-map images of
    large tangents may dip below zero and are accepted here so that the map
    is total on its injectivity ball.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = _check_values(self.grid, self.values)
        object.__setattr__(self, "values", v)
        nrm = np.sqrt(self.grid.trapz_weights @ v**2)
        if abs(nrm - 1.0) > _UNIT_NORM_TOL:
            raise InvalidInputError(f"psi must have unit norm (got {nrm!r})")


@dataclass(frozen=True, eq=False)
class TangentFunction:
    """Tangent vector at the identity: zero-mean function on [0, 1]."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = _check_values(self.grid, self.values)
        object.__setattr__(self, "values", v)
        if abs(self.grid.trapz_weights @ v) > _MEAN_TOL:
            raise InvalidInputError("tangent function must integrate to zero")

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.grid.trapz_weights @ self.values**2))


def identity_warping(grid: Grid) -> Warping:
    return Warping(grid, grid.points.copy())


def gamma_to_psi(gamma: Warping) -> Psi:
    """psi = sqrt(gamma'), renormalized to exact unit quadrature norm."""
    d = np.gradient(gamma.values, gamma.grid.spacing, edge_order=1)
    psi = np.sqrt(np.maximum(d, 0.0))
    nrm = np.sqrt(gamma.grid.trapz_weights @ psi**2)
    return Psi(gamma.grid, psi / nrm)


def psi_to_gamma(psi: Psi) -> Warping:
    """gamma(t) = integral_0^t psi^2, rescaled so gamma(1) = 1 exactly."""
    raw = cumulative_trapezoid(psi.values**2, dx=psi.grid.spacing, initial=0.0)
    return Warping(psi.grid, raw / raw[-1])


def _exp_at(base: np.ndarray, tangent: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Exponential map at an arbitrary base point (raw arrays)."""
    r = np.sqrt(w @ tangent**2)
    if r < 1e-16:
        out = base + tangent
    else:
        out = np.cos(r) * base + (np.sin(r) / r) * tangent
    return out / np.sqrt(w @ out**2)


def _log_at(base: np.ndarray, point: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Inverse exponential map at an arbitrary base point (raw arrays)."""
    cos_theta = np.clip(w @ (base * point), -1.0, 1.0)
    theta = np.arccos(cos_theta)
    if theta < 1e-10:
        return point - cos_theta * base
    return (theta / np.sin(theta)) * (point - cos_theta * base)


def exp_map(g: TangentFunction) -> Psi:
    """exp_1(g) = cos(|g|) + sin(|g|) g/|g|, with the |g| -> 0 limit 1."""
    w = g.grid.trapz_weights
    r = g.norm
    if r >= np.pi - INJECTIVITY_MARGIN:
        raise InjectivityError(f"tangent norm {r:.6f} reaches the injectivity bound pi")
    vals = _exp_at(np.ones(g.grid.n), g.values, w)
    return Psi(g.grid, vals)


def inv_exp_map(psi: Psi) -> TangentFunction:
    """Inverse of exp_map: theta/sin(theta) * (psi - cos(theta))."""
    w = psi.grid.trapz_weights
    theta = np.arccos(np.clip(w @ psi.values, -1.0, 1.0))
    if theta >= np.pi - INJECTIVITY_MARGIN:
        raise InjectivityError("antipodal point: inverse map undefined")
    return TangentFunction(psi.grid, _log_at(np.ones(psi.grid.n), psi.values, w))


def geodesic_dist(a: Psi, b: Psi) -> float:
    """Great-circle distance arccos(<a, b>), clamped into [0, pi]."""
    _require_same_grid(a, b)
    inner = np.clip(a.grid.trapz_weights @ (a.values * b.values), -1.0, 1.0)
    return float(np.arccos(inner))


@dataclass(frozen=True)
class KarcherResult:
    center: Psi
    converged: bool
    iterations: int


def _stack(samples, grid: Grid | None = None) -> tuple[np.ndarray, Grid]:
    """Accept a list of Psi or a (m, N) value matrix with an explicit grid."""
    if isinstance(samples, np.ndarray):
        if grid is None:
            raise InvalidInputError("matrix input needs an explicit grid")
        if samples.ndim != 2 or samples.shape[1] != grid.n:
            raise InvalidInputError("sample matrix must be (m, grid size)")
        if samples.shape[0] == 0:
            raise InvalidInputError("need at least one sample")
        return samples, grid
    if len(samples) == 0:
        raise InvalidInputError("need at least one sample")
    grid = samples[0].grid
    for s in samples[1:]:
        _require_same_grid(samples[0], s)
    return np.stack([s.values for s in samples]), grid


def _batch_angles(X: np.ndarray, p: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.arccos(np.clip(X @ (w * p), -1.0, 1.0))


def karcher_center(
    samples,
    statistic: str = "mean",
    *,
    grid: Grid | None = None,
    tol: float = 1e-6,
    max_iter: int = 100,
    step: float = 0.5,
) -> KarcherResult:
    """Intrinsic center of sphere points: Karcher mean or (geometric) median.

    Gradient descent with a fixed base step, halved whenever the objective
    fails to decrease; stops when the mean tangent update norm drops below
    ``tol``.  Non-convergence is reported through the result flag rather
    than raised.
    """
    if statistic not in ("mean", "median"):
        raise InvalidInputError(f"unknown statistic {statistic!r}")
    X, grid = _stack(samples, grid)
    w = grid.trapz_weights
    if X.shape[0] == 1:
        return KarcherResult(Psi(grid, X[0].copy()), True, 0)

    p = X.mean(axis=0)
    p = p / np.sqrt(w @ p**2)
    if np.max(_batch_angles(X, p, w)) >= 0.5 * np.pi:
        warnings.warn(
            "samples spread beyond a quarter-sphere ball; the Karcher center "
            "may not be unique",
            stacklevel=2,
        )

    def objective(point: np.ndarray) -> float:
        th = _batch_angles(X, point, w)
        return float(np.sum(th**2) if statistic == "mean" else np.sum(th))

    obj = objective(p)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        theta = _batch_angles(X, p, w)
        cos_theta = np.cos(theta)
        safe = np.where(theta < 1e-12, 1.0, theta)
        coef = np.where(theta < 1e-12, 1.0, safe / np.sin(safe))
        logs = coef[:, None] * (X - cos_theta[:, None] * p)
        if statistic == "mean":
            update = logs.mean(axis=0)
        else:
            far = theta > 1e-12
            if not np.any(far):
                converged = True
                break
            inv_d = 1.0 / theta[far]
            update = (inv_d[:, None] * logs[far]).sum(axis=0) / inv_d.sum()
        if np.sqrt(w @ update**2) < tol:
            converged = True
            break
        trial_step = step
        for _ in range(40):
            candidate = _exp_at(p, trial_step * update, w)
            cand_obj = objective(candidate)
            if cand_obj < obj:
                p, obj = candidate, cand_obj
                break
            trial_step *= 0.5
        else:
            converged = True  # no descent direction left at float resolution
            break
    return KarcherResult(Psi(grid, p), converged, iterations)


def pairwise_geodesic_matrix(samples, grid: Grid | None = None) -> np.ndarray:
    """Symmetric matrix of great-circle distances (vectorized, deterministic)."""
    X, grid = _stack(samples, grid)
    G = np.clip((X * grid.trapz_weights) @ X.T, -1.0, 1.0)
    D = np.arccos(G)
    np.fill_diagonal(D, 0.0)
    return D


def cluster_modes(
    samples, k_max: int = 5, tau_cluster: float = 0.15, grid: Grid | None = None
) -> np.ndarray:
    """Complete-linkage clustering of sphere points into posterior modes.

    The cluster count is the largest k <= k_max whose k clusters are
    separated by more than ``tau_cluster`` radians in complete linkage,
    falling back to a single cluster.  Labels are contiguous integers
    ordered by first appearance.
    """
    if k_max < 1:
        raise InvalidInputError("k_max must be at least 1")
    X, grid = _stack(samples, grid)
    m = X.shape[0]
    if m == 1 or k_max == 1:
        return np.zeros(m, dtype=np.intp)

    D = pairwise_geodesic_matrix(X, grid)
    Z = linkage(squareform(D, checks=False), method="complete")
    heights = Z[:, 2]
    best_k = 1
    for k in range(min(k_max, m), 1, -1):
        # merge with 0-based index m-k is the one collapsing k clusters to k-1
        if heights[m - k] > tau_cluster:
            best_k = k
            break
    if best_k == 1:
        return np.zeros(m, dtype=np.intp)
    raw = fcluster(Z, t=best_k, criterion="maxclust")
    return _relabel_contiguous(raw)


def _relabel_contiguous(raw: np.ndarray) -> np.ndarray:
    mapping: dict[int, int] = {}
    out = np.empty(raw.size, dtype=np.intp)
    for i, lab in enumerate(raw):
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out
