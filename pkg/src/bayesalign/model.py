"""Hierarchical model for Bayesian alignment of one noisy function pair.

Level 1 observes each function with iid Gaussian noise; level 2 models the
mismatch between the first square-root transform and the warped second one
as white Gaussian noise with variance ``resid_var``.  The warp is driven by
tangent-space coefficients through the exponential map, so the negative
log-likelihood ``phi`` is a smooth function of the coefficients and its
gradient is available in closed form (checked against finite differences).

The forward map interpolates the second transform with a cubic spline: the
gradient then differentiates the exact same expression the likelihood
evaluates, which keeps the two consistent to near machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve

from .basis import Basis, TangentCoeffs, PriorSpectrum, prior_spectrum
from .errors import InjectivityError, InvalidInputError, NumericalError
from .sphere import INJECTIVITY_MARGIN
from .srvf import Grid, SampledFunction, Srvf, to_srvf

__all__ = [
    "PriorConfig",
    "ModelState",
    "ForwardMap",
    "RegistrationPotential",
    "AlignmentModel",
    "se_kernel",
    "phi",
    "grad_phi",
    "gnh",
    "natural_gradient",
    "loglik_level1",
    "invgamma_posterior",
    "sample_invgamma",
    "gibbs_obs_variance",
]

_KERNEL_JITTER = 1e-8


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the conjugate and uniform priors.

    ``obs_scale=None`` resolves to 0.02 * var(y_k) per observed function,
    keeping the observation-noise priors informative relative to the diffuse
    level-2 residual prior.  ``beta`` weights the Gauss-Newton term in the
    sampler preconditioner (0 disables it).
    """

    level2_shape: float = 1.0
    level2_scale: float = 0.01
    obs_shape: float = 3.0
    obs_scale: float | None = None
    kernel_shape: float = 2.0
    kernel_scale: float = 1.0
    length_lower: float = 0.01
    length_upper: float = 1.0
    sigma_g: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        positive = [
            self.level2_shape,
            self.level2_scale,
            self.obs_shape,
            self.kernel_shape,
            self.kernel_scale,
            self.sigma_g,
        ]
        if self.obs_scale is not None:
            positive.append(self.obs_scale)
        if any(p <= 0 for p in positive):
            raise InvalidInputError("prior shapes and scales must be positive")
        if not 0 < self.length_lower < self.length_upper:
            raise InvalidInputError("length-scale bounds must satisfy 0 < lower < upper")
        if self.beta < 0:
            raise InvalidInputError("beta must be nonnegative")


@dataclass
class ModelState:
    """Mutable sampler state: warp coefficients plus all other parameters."""

    coeffs: np.ndarray      # tangent-space coefficients of the warp
    f: np.ndarray           # (2, N) latent mean functions
    resid_var: float        # level-2 residual variance
    obs_var: np.ndarray     # (2,) observation noise variances
    kern_scale: np.ndarray  # (2,) squared-exponential scales s_k^2
    length: np.ndarray      # (2,) squared-exponential length scales l_k

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        self.f = np.asarray(self.f, dtype=np.float64)
        self.obs_var = np.asarray(self.obs_var, dtype=np.float64)
        self.kern_scale = np.asarray(self.kern_scale, dtype=np.float64)
        self.length = np.asarray(self.length, dtype=np.float64)
        if self.resid_var <= 0 or np.any(self.obs_var <= 0) or np.any(self.kern_scale <= 0):
            raise InvalidInputError("variances must be strictly positive")

    @property
    def f1(self) -> np.ndarray:
        return self.f[0]

    @property
    def f2(self) -> np.ndarray:
        return self.f[1]

    def copy(self) -> "ModelState":
        return ModelState(
            self.coeffs.copy(),
            self.f.copy(),
            self.resid_var,
            self.obs_var.copy(),
            self.kern_scale.copy(),
            self.length.copy(),
        )


def se_kernel(grid: Grid, s2: float, l: float) -> np.ndarray:
    """Squared-exponential covariance s^2 exp(-(d/2l)^2) with diagonal jitter."""
    if s2 <= 0 or l <= 0:
        raise InvalidInputError("kernel scale and length must be positive")
    d = np.abs(grid.points[:, None] - grid.points[None, :])
    K = s2 * np.exp(-((d / (2.0 * l)) ** 2))
    K[np.diag_indices_from(K)] += _KERNEL_JITTER * s2
    return K


def _cumtrapz_rows(y: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(y)
    out[..., 0] = 0.0
    np.cumsum((y[..., 1:] + y[..., :-1]) * (0.5 * h), axis=-1, out=out[..., 1:])
    return out


_SPLINE_FACTORS: dict[int, np.ndarray] = {}


class NaturalSpline:
    """Natural cubic interpolant on a uniform grid with a prefactored solve.

    The tridiagonal system for the knot second derivatives depends only on
    the grid size, so its (dense) inverse is cached per size and each new
    data vector costs one matrix-vector product.  ``value_and_slope``
    evaluates the spline and its first derivative in a single pass.
    """

    def __init__(self, grid: Grid, values: np.ndarray):
        self.grid = grid
        self.h = grid.spacing
        y = np.asarray(values, dtype=np.float64)
        n = grid.n
        inv = _SPLINE_FACTORS.get(n)
        if inv is None:
            A = np.zeros((n - 2, n - 2))
            idx = np.arange(n - 2)
            A[idx, idx] = 2.0 / 3.0
            A[idx[:-1], idx[:-1] + 1] = 1.0 / 6.0
            A[idx[1:], idx[1:] - 1] = 1.0 / 6.0
            inv = np.linalg.inv(A)
            _SPLINE_FACTORS[n] = inv
        rhs = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / self.h**2
        m = np.zeros(n)
        m[1:-1] = inv @ rhs
        self.y = y
        self.m = m                                 # knot second derivatives
        self._lin = y / self.h - m * (self.h / 6.0)  # linear-part coefficients

    def value_and_slope(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = self.h
        i = np.clip((x / h).astype(np.intp), 0, self.grid.n - 2)
        u = x - i * h          # distance from the left knot
        v = h - u              # distance from the right knot
        m0, m1 = self.m[i], self.m[i + 1]
        c0, c1 = self._lin[i], self._lin[i + 1]
        val = (m0 * v**3 + m1 * u**3) / (6.0 * h) + c0 * v + c1 * u
        slope = (m1 * u**2 - m0 * v**2) / (2.0 * h) + c1 - c0
        return val, slope


@dataclass(frozen=True)
class Forward:
    """Cached quantities of one forward evaluation at coefficients c."""

    coeffs: np.ndarray
    g: np.ndarray        # tangent function values
    r: float             # tangent norm
    psi_raw: np.ndarray  # exponential-map image before renormalization
    nrm: float           # quadrature norm of psi_raw
    psi: np.ndarray      # renormalized sphere point
    gamma: np.ndarray    # warp, rescaled to end exactly at 1
    gend: float          # raw warp endpoint before rescaling
    q2g: np.ndarray      # spline of q2 evaluated at gamma
    dq2g: np.ndarray     # spline derivative at gamma
    qt2: np.ndarray      # warped second transform (the forward-map value)


class ForwardMap:
    """Coefficients -> warped second transform, with exact derivatives.

    The chain coefficients -> tangent -> sphere point -> warp -> warped
    transform is differentiated step by step, including the sphere
    renormalization and the warp endpoint rescaling, so the gradient is the
    derivative of exactly what ``forward`` computes.
    """

    def __init__(self, q2_values: np.ndarray, grid: Grid, basis: Basis):
        if not grid.matches(basis.grid):
            raise InvalidInputError("basis and data grids differ")
        self.grid = grid
        self.t = grid.points
        self.w = grid.trapz_weights
        self.h = grid.spacing
        self.B = basis.table
        self.q2 = np.asarray(q2_values, dtype=np.float64)
        self.spline = NaturalSpline(grid, self.q2)

    def forward(self, coeffs: np.ndarray) -> Forward:
        c = np.asarray(coeffs, dtype=np.float64)
        g = c @ self.B
        r = float(np.sqrt(self.w @ g**2))
        if r >= np.pi - INJECTIVITY_MARGIN:
            raise InjectivityError(f"warp tangent norm {r:.6f} reaches pi")
        if r < 1e-9:
            psi_raw = 1.0 + g
        else:
            psi_raw = np.cos(r) + (np.sin(r) / r) * g
        nrm = float(np.sqrt(self.w @ psi_raw**2))
        psi = psi_raw / nrm
        gamma_raw = _cumtrapz_rows(psi**2, self.h)
        gend = float(gamma_raw[-1])
        gamma = gamma_raw / gend
        q2g, dq2g = self.spline.value_and_slope(gamma)
        qt2 = q2g * psi
        return Forward(c.copy(), g, r, psi_raw, nrm, psi, gamma, gend, q2g, dq2g, qt2)

    def jacobian(self, fwd: Forward) -> np.ndarray:
        """d(warped transform)/d(coefficients), shape (p, N)."""
        B, w = self.B, self.w
        if fwd.r < 1e-9:
            dpsi_raw = B
        else:
            r, g = fwd.r, fwd.g
            dr = B @ (w * g) / r
            sinc = np.sin(r) / r
            dpsi_raw = sinc * B + dr[:, None] * ((np.cos(r) - sinc) / r * g - np.sin(r))
        dnrm = dpsi_raw @ (w * fwd.psi_raw) / fwd.nrm
        dpsi = (dpsi_raw - dnrm[:, None] * fwd.psi) / fwd.nrm
        dgamma_raw = _cumtrapz_rows((2.0 * fwd.psi) * dpsi, self.h)
        dgamma = (dgamma_raw - dgamma_raw[:, -1:] * fwd.gamma) / fwd.gend
        return (fwd.dq2g * fwd.psi) * dgamma + fwd.q2g * dpsi

    def quad(self, fwd: Forward, q1: np.ndarray) -> float:
        """Quadrature integral of the squared level-2 residual."""
        resid = q1 - fwd.qt2
        return float(self.w @ resid**2)

    def warped_with(self, q2_values: np.ndarray, fwd: Forward) -> np.ndarray:
        """Warped transform for alternative second-function values at the
        same coefficients (the warp itself does not depend on q2)."""
        spl = NaturalSpline(self.grid, q2_values)
        return spl.value_and_slope(fwd.gamma)[0] * fwd.psi


class RegistrationPotential:
    """Level-2 negative log-likelihood as a function of warp coefficients.

    Forward evaluations are memoized on the coefficient array identity so a
    ``phi`` and a ``grad`` call at the same point share one evaluation.
    """

    def __init__(self, fmap: ForwardMap, q1: np.ndarray, resid_var: float):
        if resid_var <= 0:
            raise InvalidInputError("resid_var must be positive")
        self.fmap = fmap
        self.q1 = np.asarray(q1, dtype=np.float64)
        self.resid_var = resid_var
        self._const = 0.5 * fmap.grid.n * np.log(resid_var)
        self._memo_key: np.ndarray | None = None
        self._memo_fwd: Forward | None = None
        self._memo_jac: np.ndarray | None = None

    def _forward(self, coeffs: np.ndarray) -> Forward:
        if self._memo_key is not coeffs:
            self._memo_fwd = self.fmap.forward(coeffs)
            self._memo_jac = None
            self._memo_key = coeffs
        return self._memo_fwd

    def _jacobian(self, coeffs: np.ndarray) -> np.ndarray:
        fwd = self._forward(coeffs)
        if self._memo_jac is None:
            self._memo_jac = self.fmap.jacobian(fwd)
        return self._memo_jac

    def phi(self, coeffs: np.ndarray) -> float:
        fwd = self._forward(coeffs)
        return self._const + self.fmap.quad(fwd, self.q1) / (2.0 * self.resid_var)

    def grad(self, coeffs: np.ndarray) -> np.ndarray:
        fwd = self._forward(coeffs)
        J = self._jacobian(coeffs)
        A = self.q1 - fwd.qt2
        return -(J @ (self.fmap.w * A)) / self.resid_var

    def grad_at(self, fwd: Forward) -> np.ndarray:
        J = self.fmap.jacobian(fwd)
        A = self.q1 - fwd.qt2
        return -(J @ (self.fmap.w * A)) / self.resid_var

    def gauss_newton(self, coeffs: np.ndarray) -> np.ndarray:
        J = self._jacobian(coeffs)
        return (J * self.fmap.w) @ J.T / self.resid_var


def _as_potential(c: TangentCoeffs, q1: Srvf, q2: Srvf, sigma2: float) -> RegistrationPotential:
    if not q1.grid.matches(q2.grid):
        raise InvalidInputError("transforms must share a grid")
    fmap = ForwardMap(q2.values, q2.grid, c.basis)
    return RegistrationPotential(fmap, q1.values, sigma2)


def phi(c: TangentCoeffs, q1: Srvf, q2: Srvf, sigma2: float) -> float:
    """Negative log-likelihood of the warp coefficients."""
    return _as_potential(c, q1, q2, sigma2).phi(c.v)


def grad_phi(c: TangentCoeffs, q1: Srvf, q2: Srvf, sigma2: float) -> np.ndarray:
    """Exact coefficient gradient of ``phi``."""
    return _as_potential(c, q1, q2, sigma2).grad(c.v)


def gnh(c: TangentCoeffs, q1: Srvf, q2: Srvf, sigma2: float) -> np.ndarray:
    """Gauss-Newton curvature of ``phi`` in coefficient space (PSD)."""
    return _as_potential(c, q1, q2, sigma2).gauss_newton(c.v)


def natural_gradient(
    c: TangentCoeffs,
    q1: Srvf,
    q2: Srvf,
    sigma2: float,
    spectrum: PriorSpectrum,
    beta: float = 0.0,
) -> np.ndarray:
    """Preconditioned descent direction for the warp coefficients."""
    pot = _as_potential(c, q1, q2, sigma2)
    grad = pot.grad(c.v)
    hess = pot.gauss_newton(c.v) if beta > 0 else None
    return preconditioned_direction(c.v, grad, spectrum.variances, beta, hess)


def preconditioned_direction(
    coeffs: np.ndarray,
    grad: np.ndarray,
    prior_var: np.ndarray,
    beta: float,
    hess: np.ndarray | None,
) -> np.ndarray:
    """Solve (C^-1 + beta H) x = grad - beta H c and return -x."""
    if beta == 0.0 or hess is None:
        return -prior_var * grad
    M = np.diag(1.0 / prior_var) + beta * hess
    rhs = grad - beta * (hess @ coeffs)
    try:
        x = solve(M, rhs, assume_a="pos")
    except np.linalg.LinAlgError as exc:  # pragma: no cover - C^-1 > 0 prevents this
        raise NumericalError("preconditioner solve failed") from exc
    return -x


def loglik_level1(y: np.ndarray, f: np.ndarray, sig2: float) -> float:
    """Gaussian iid log-likelihood of observations around a mean function."""
    y = np.asarray(y, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if y.shape != f.shape:
        raise InvalidInputError("observation and mean shapes differ")
    n = y.size
    ss = float(np.sum((y - f) ** 2))
    return -0.5 * n * np.log(2.0 * np.pi * sig2) - ss / (2.0 * sig2)


def invgamma_posterior(shape: float, scale: float, n_obs: int, sum_sq: float) -> tuple[float, float]:
    """Conjugate update of an inverse-gamma prior by a Gaussian sum of squares."""
    return shape + 0.5 * n_obs, scale + 0.5 * sum_sq


def sample_invgamma(shape: float, scale: float, rng: np.random.Generator) -> float:
    return scale / rng.gamma(shape)


def gibbs_obs_variance(
    y: np.ndarray, f: np.ndarray, shape: float, scale: float, rng: np.random.Generator
) -> float:
    """Draw an observation variance from its inverse-gamma full conditional."""
    y = np.asarray(y, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    a, b = invgamma_posterior(shape, scale, y.size, float(np.sum((y - f) ** 2)))
    return sample_invgamma(a, b, rng)


_DIST_SQ: dict[int, np.ndarray] = {}


def _squared_distances(grid: Grid) -> np.ndarray:
    d2 = _DIST_SQ.get(grid.n)
    if d2 is None:
        d = grid.points[:, None] - grid.points[None, :]
        d2 = d * d
        _DIST_SQ[grid.n] = d2
    return d2


class SeCorrelation:
    """Cholesky-factorized squared-exponential correlation for one length scale."""

    def __init__(self, grid: Grid, l: float):
        if l <= 0:
            raise InvalidInputError("length scale must be positive")
        self.l = l
        R = np.exp(_squared_distances(grid) / (-4.0 * l * l))
        R[np.diag_indices_from(R)] += _KERNEL_JITTER
        try:
            self.chol = cholesky(R, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"correlation factorization failed at l={l}") from exc
        self.logdet = 2.0 * float(np.sum(np.log(np.diag(self.chol))))

    def quad(self, f: np.ndarray) -> float:
        """f^T R^-1 f."""
        return float(f @ cho_solve((self.chol, True), f))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.chol @ rng.standard_normal(self.chol.shape[0])

    def logpdf(self, f: np.ndarray, s2: float) -> float:
        n = f.size
        return -0.5 * (n * np.log(2.0 * np.pi * s2) + self.logdet + self.quad(f) / s2)


@dataclass
class ModelCaches:
    """Per-chain caches refreshed incrementally as the state moves."""

    q: np.ndarray                 # (2, N) transforms of the current f
    fmap: ForwardMap              # bound to q[1]
    fwd: Forward                  # forward evaluation at the current coefficients
    quad: float                   # squared level-2 residual integral
    corr: list[SeCorrelation]     # per-function correlation factors


class AlignmentModel:
    """Joint model over (warp coefficients, f_1, f_2, variances, kernels).

    Owns the data and priors; every update method takes the RNG explicitly
    and mutates the passed state in place, returning the acceptance flag
    where a Metropolis step is involved.
    """

    def __init__(
        self,
        y1: SampledFunction,
        y2: SampledFunction,
        basis: Basis,
        priors: PriorConfig | None = None,
    ):
        if not y1.grid.matches(y2.grid):
            raise InvalidInputError("observations must share a grid")
        if not y1.grid.matches(basis.grid):
            raise InvalidInputError("basis grid must match the data grid")
        self.grid = y1.grid
        self.n = self.grid.n
        self.w = self.grid.trapz_weights
        self.basis = basis
        self.y = np.stack([y1.values, y2.values])
        self.priors = priors or PriorConfig()
        self.spectrum = prior_spectrum(self.priors.sigma_g, basis)
        var_y = self.y.var(axis=1)
        self.obs_scale = np.where(
            np.isnan(var_y), 1.0, np.maximum(var_y, 1e-12) * 0.02
        ) if self.priors.obs_scale is None else np.full(2, self.priors.obs_scale)

    # -- construction ---------------------------------------------------

    def initial_state(self, rng: np.random.Generator) -> ModelState:
        """Dispersed start: standard-normal coefficients pulled into the
        injectivity ball, latent functions at a kernel smooth of the data.

        Starting f at the raw observations would pin their jagged component
        forever (the correlated random walk only explores smooth
        directions), so the chain starts on the smooth manifold instead.
        """
        c = rng.standard_normal(self.basis.size)
        nrm = np.linalg.norm(c)
        cap = 0.9 * np.pi
        if nrm >= cap:
            c *= cap * rng.uniform(0.3, 1.0) / nrm
        obs_var = self.obs_scale / (self.priors.obs_shape - 1.0)
        kern_scale = np.maximum(self.y.var(axis=1), 1e-6)
        l0 = float(np.clip(0.1, self.priors.length_lower, self.priors.length_upper))
        corr0 = SeCorrelation(self.grid, l0)
        f = np.empty_like(self.y)
        for k in range(2):
            R = corr0.chol @ corr0.chol.T
            ridge = obs_var[k] / kern_scale[k]
            f[k] = R @ np.linalg.solve(R + ridge * np.eye(self.n), self.y[k])
        state = ModelState(
            coeffs=c,
            f=f,
            resid_var=1.0,
            obs_var=obs_var,
            kern_scale=kern_scale,
            length=np.array([l0, l0]),
        )
        caches = self.build_caches(state)
        state.resid_var = max(caches.quad / self.n, 1e-8)
        return state

    def build_caches(self, state: ModelState) -> ModelCaches:
        q = np.stack([
            to_srvf(SampledFunction(self.grid, state.f[0])).values,
            to_srvf(SampledFunction(self.grid, state.f[1])).values,
        ])
        fmap = ForwardMap(q[1], self.grid, self.basis)
        fwd = fmap.forward(state.coeffs)
        quad = fmap.quad(fwd, q[0])
        corr = [SeCorrelation(self.grid, state.length[0]), SeCorrelation(self.grid, state.length[1])]
        return ModelCaches(q, fmap, fwd, quad, corr)

    def potential(self, state: ModelState, caches: ModelCaches) -> RegistrationPotential:
        return RegistrationPotential(caches.fmap, caches.q[0], state.resid_var)

    def refresh_warp(self, state: ModelState, caches: ModelCaches) -> None:
        """Recompute the forward caches after a coefficient move."""
        caches.fwd = caches.fmap.forward(state.coeffs)
        caches.quad = caches.fmap.quad(caches.fwd, caches.q[0])

    # -- Metropolis updates ----------------------------------------------

    def mh_update_f(
        self,
        state: ModelState,
        caches: ModelCaches,
        k: int,
        scale: float,
        rng: np.random.Generator,
    ) -> bool:
        """Random-walk update of one latent function under all three terms:
        observation likelihood, level-2 likelihood through its transform,
        and the Gaussian-process prior."""
        f_cur = state.f[k]
        step = scale * np.sqrt(state.obs_var[k])
        f_prop = f_cur + step * caches.corr[k].sample(rng)
        q_prop = to_srvf(SampledFunction(self.grid, f_prop)).values

        if k == 0:
            quad_prop = caches.fmap.quad(caches.fwd, q_prop)
            qt2_prop = None
        else:
            qt2_prop = caches.fmap.warped_with(q_prop, caches.fwd)
            resid = caches.q[0] - qt2_prop
            quad_prop = float(self.w @ resid**2)

        log_ratio = (
            loglik_level1(self.y[k], f_prop, state.obs_var[k])
            - loglik_level1(self.y[k], f_cur, state.obs_var[k])
            - (quad_prop - caches.quad) / (2.0 * state.resid_var)
            + (caches.corr[k].quad(f_cur) - caches.corr[k].quad(f_prop))
            / (2.0 * state.kern_scale[k])
        )
        if np.log(rng.uniform()) < log_ratio:
            state.f[k] = f_prop
            caches.q[k] = q_prop
            caches.quad = quad_prop
            if k == 1:
                caches.fmap = ForwardMap(q_prop, self.grid, self.basis)
                fwd = caches.fwd
                q2g, dq2g = caches.fmap.spline.value_and_slope(fwd.gamma)
                caches.fwd = Forward(
                    fwd.coeffs, fwd.g, fwd.r, fwd.psi_raw, fwd.nrm, fwd.psi,
                    fwd.gamma, fwd.gend, q2g, dq2g, qt2_prop,
                )
            return True
        return False

    def mh_update_lengthscale(
        self,
        state: ModelState,
        caches: ModelCaches,
        k: int,
        proposal_sd: float,
        rng: np.random.Generator,
    ) -> bool:
        """Gaussian random-walk update of one kernel length scale under a
        uniform prior; proposals outside the support are rejected outright."""
        l_prop = state.length[k] + proposal_sd * rng.standard_normal()
        if not self.priors.length_lower <= l_prop <= self.priors.length_upper:
            return False
        corr_prop = SeCorrelation(self.grid, l_prop)
        s2 = state.kern_scale[k]
        log_ratio = corr_prop.logpdf(state.f[k], s2) - caches.corr[k].logpdf(state.f[k], s2)
        if np.log(rng.uniform()) < log_ratio:
            state.length[k] = l_prop
            caches.corr[k] = corr_prop
            return True
        return False

    # -- Gibbs updates ----------------------------------------------------

    def gibbs_resid_var(self, state: ModelState, caches: ModelCaches, rng) -> None:
        a, b = invgamma_posterior(
            self.priors.level2_shape, self.priors.level2_scale, self.n, caches.quad
        )
        state.resid_var = sample_invgamma(a, b, rng)

    def gibbs_observation_vars(self, state: ModelState, rng) -> None:
        for k in range(2):
            state.obs_var[k] = gibbs_obs_variance(
                self.y[k], state.f[k], self.priors.obs_shape, self.obs_scale[k], rng
            )

    def gibbs_kernel_scales(self, state: ModelState, caches: ModelCaches, rng) -> None:
        for k in range(2):
            a, b = invgamma_posterior(
                self.priors.kernel_shape,
                self.priors.kernel_scale,
                self.n,
                caches.corr[k].quad(state.f[k]),
            )
            state.kern_scale[k] = sample_invgamma(a, b, rng)
