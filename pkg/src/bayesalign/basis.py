"""Orthonormal zero-mean bases on [0, 1] for tangent-space expansions.

Two families are supported: a Fourier family of (sin, cos) pairs and shifted
Legendre polynomials.  Both exclude the constant element so every element is
orthogonal to the unit weight, which is exactly the tangent-space condition
at the identity warp.  Coefficient priors decay as 1/k^2 in the element's
frequency/degree ordinal, giving a trace-class Gaussian prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .srvf import Grid
from .sphere import TangentFunction

__all__ = [
    "Basis",
    "TangentCoeffs",
    "PriorSpectrum",
    "eval_basis",
    "coeffs_to_function",
    "project_to_coeffs",
    "prior_spectrum",
]

FAMILIES = ("fourier", "legendre")


@dataclass(frozen=True, eq=False)
class Basis:
    """A sampled orthonormal basis: ``table[k]`` is element k on the grid."""

    family: str
    size: int
    grid: Grid
    table: np.ndarray

    @property
    def pair_indices(self) -> np.ndarray:
        """Ordinal used by the prior spectrum; Fourier sin/cos pairs share one."""
        if self.family == "fourier":
            return np.repeat(np.arange(1, self.size // 2 + 1), 2)
        return np.arange(1, self.size + 1)


def _fourier_table(size: int, grid: Grid) -> np.ndarray:
    t = grid.points
    table = np.empty((size, grid.n))
    for pair in range(size // 2):
        n = pair + 1
        table[2 * pair] = np.sqrt(2.0) * np.sin(2.0 * np.pi * n * t)
        table[2 * pair + 1] = np.sqrt(2.0) * np.cos(2.0 * np.pi * n * t)
    return table


def _legendre_table(size: int, grid: Grid) -> np.ndarray:
    # Three-term recurrence on x = 2t - 1, then orthonormalization against
    # the constant and all previous elements in the quadrature inner product
    # (plain sampling + trapezoid would miss the stated tolerances).
    x = 2.0 * grid.points - 1.0
    w = grid.trapz_weights
    prev = np.ones(grid.n)
    cur = x.copy()
    table = np.empty((size, grid.n))
    ones = np.ones(grid.n)
    for k in range(size):
        e = cur.copy()
        e -= (w @ e) * ones / (w @ ones)
        for j in range(k):
            e -= (w @ (e * table[j])) * table[j]
        table[k] = e / np.sqrt(w @ e**2)
        n = k + 1
        prev, cur = cur, ((2 * n + 1) * x * cur - n * prev) / (n + 1)
    return table


def eval_basis(family: str, size: int, grid: Grid) -> Basis:
    """Build a basis table of ``size`` zero-mean orthonormal elements."""
    if family not in FAMILIES:
        raise InvalidInputError(f"unknown basis family {family!r}")
    if size < 1:
        raise InvalidInputError("basis size must be at least 1")
    if family == "fourier":
        if size % 2 != 0:
            raise InvalidInputError("fourier basis size must be even (sin/cos pairs)")
        table = _fourier_table(size, grid)
    else:
        table = _legendre_table(size, grid)
    table.setflags(write=False)
    return Basis(family, size, grid, table)


@dataclass(frozen=True, eq=False)
class TangentCoeffs:
    """Coefficient vector v of a tangent function g = sum_k v_k b_k."""

    basis: Basis
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64)
        if v.shape != (self.basis.size,):
            raise InvalidInputError("coefficient length must match basis size")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("coefficients must be finite")
        object.__setattr__(self, "v", v)


def coeffs_to_function(coeffs: TangentCoeffs) -> TangentFunction:
    """Evaluate the linear combination of basis elements."""
    return TangentFunction(coeffs.basis.grid, coeffs.v @ coeffs.basis.table)


def project_to_coeffs(g: TangentFunction, basis: Basis) -> TangentCoeffs:
    """Quadrature projection v_k = <g, b_k>; exact on the basis span."""
    if not g.grid.matches(basis.grid):
        raise InvalidInputError("tangent function and basis must share a grid")
    w = basis.grid.trapz_weights
    return TangentCoeffs(basis, basis.table @ (w * g.values))


@dataclass(frozen=True, eq=False)
class PriorSpectrum:
    """Per-coefficient prior scales lambda_k; v_k ~ N(0, lambda_k^2)."""

    sigma_g: float
    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=np.float64)
        if self.sigma_g <= 0 or np.any(lam <= 0):
            raise InvalidInputError("prior scales must be positive")
        if np.any(np.diff(lam) > 0):
            raise InvalidInputError("prior scales must be nonincreasing")
        object.__setattr__(self, "lambdas", lam)

    @property
    def variances(self) -> np.ndarray:
        return self.lambdas**2


def prior_spectrum(sigma_g: float, basis: Basis) -> PriorSpectrum:
    """lambda_k = sigma_g^2 / k^2 with Fourier pairs sharing their ordinal."""
    if sigma_g <= 0:
        raise InvalidInputError("sigma_g must be positive")
    k = basis.pair_indices.astype(np.float64)
    return PriorSpectrum(sigma_g, sigma_g**2 / k**2)
