"""Parallel-chain orchestration for multimodal warp posteriors.

Hamiltonian chains rarely cross between well-separated alignment modes, so
several chains start from dispersed coefficients, their post-burn-in draws
are pooled, and the pooled sphere points are clustered into modes.  Each
mode gets an intrinsic center, pointwise credible bands, and the amplitude
distance its center achieves, which drives best-mode selection.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BayesAlignError, InvalidInputError
from .samplers import ChainConfig, ChainSamples, run_chain
from .sphere import Warping, cluster_modes, karcher_center
from .srvf import Grid, SampledFunction, Srvf, l2_dist, to_srvf, warp_srvf

__all__ = [
    "ModeSummary",
    "PooledPosterior",
    "run_parallel",
    "pool_chains",
    "summarize_mode",
    "select_best_mode",
]

# Pooled posteriors can hold 1e5+ draws; complete linkage is quadratic, so
# clustering runs on an evenly thinned subset of at most this many points
# and the rest are assigned to the nearest cluster center.
MAX_CLUSTER_POINTS = 1500


@dataclass(frozen=True)
class ModeSummary:
    """Posterior-mode summary: intrinsic center plus pointwise 95% band."""

    center: Warping
    lower: np.ndarray
    upper: np.ndarray
    amplitude_distance: float
    member_count: int
    statistic: str
    converged: bool

    def band_coverage(self, gamma_values: np.ndarray) -> float:
        """Fraction of grid points of one warp inside the band."""
        inside = (gamma_values >= self.lower - 1e-12) & (gamma_values <= self.upper + 1e-12)
        return float(np.mean(inside))


@dataclass
class PooledPosterior:
    """Post-burn-in draws of every chain, pooled and labeled by mode."""

    grid: Grid
    chains: list[ChainSamples]
    chain_index: np.ndarray    # (M,) chain of each pooled draw
    coeffs: np.ndarray         # (M, p)
    gammas: np.ndarray         # (M, N)
    psis: np.ndarray           # (M, N)
    labels: np.ndarray         # (M,) contiguous mode labels
    summaries: list[ModeSummary]
    best_mode: int

    @property
    def n_pooled(self) -> int:
        return self.gammas.shape[0]

    @property
    def n_modes(self) -> int:
        return len(self.summaries)


def _psi_from_coeffs(coeffs: np.ndarray, table: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Vectorized exponential map over rows of a coefficient matrix."""
    G = coeffs @ table
    r = np.sqrt(np.maximum((G**2) @ w, 0.0))
    small = r < 1e-9
    safe_r = np.where(small, 1.0, r)
    psi = np.where(small, 1.0, np.cos(safe_r))[:, None] + (
        np.where(small, 1.0, np.sin(safe_r) / safe_r)[:, None] * G
    )
    nrm = np.sqrt((psi**2) @ w)
    return psi / nrm[:, None]


def summarize_mode(
    members,
    statistic: str = "median",
    *,
    grid: Grid | None = None,
    gammas: np.ndarray | None = None,
    q1: Srvf | None = None,
    q2: Srvf | None = None,
) -> ModeSummary:
    """Summarize one cluster of sphere points.

    The center is the Karcher mean or median mapped back to a warp; the band
    is the pointwise 2.5%/97.5% envelope of the members' warps.  When the
    pair of transforms is supplied, the center's amplitude distance
    ``|q1 - (q2, gamma)|^2`` is recorded (NaN otherwise).
    """
    from .sphere import _stack, psi_to_gamma  # local import to avoid cycle at load

    X, grid = _stack(members, grid)
    if X.shape[0] == 0:
        raise InvalidInputError("mode must have at least one member")
    result = karcher_center(X, statistic, grid=grid)
    center_gamma = psi_to_gamma(result.center)
    if gammas is None:
        import scipy.integrate as si

        gammas = si.cumulative_trapezoid(X**2, dx=grid.spacing, initial=0.0, axis=1)
        gammas = gammas / gammas[:, -1:]
    lower = np.quantile(gammas, 0.025, axis=0)
    upper = np.quantile(gammas, 0.975, axis=0)
    lower[0] = upper[0] = 0.0
    lower[-1] = upper[-1] = 1.0
    if q1 is not None and q2 is not None:
        amp = l2_dist(q1, warp_srvf(q2, center_gamma)) ** 2
    else:
        amp = float("nan")
    return ModeSummary(
        center=center_gamma,
        lower=lower,
        upper=upper,
        amplitude_distance=amp,
        member_count=X.shape[0],
        statistic=statistic,
        converged=result.converged,
    )


def select_best_mode(summaries: list[ModeSummary]) -> int:
    """Index of the mode with the smallest amplitude distance; ties break
    toward the larger member count, then the lower index."""
    if not summaries:
        raise InvalidInputError("need at least one mode summary")
    return min(
        range(len(summaries)),
        key=lambda i: (
            summaries[i].amplitude_distance,
            -summaries[i].member_count,
            i,
        ),
    )


def _run_chain_payload(args) -> ChainSamples:
    y1_vals, y2_vals, points, cfg = args
    grid = Grid(points)
    return run_chain(
        SampledFunction(grid, y1_vals), SampledFunction(grid, y2_vals), cfg
    )


def run_parallel(
    y1: SampledFunction,
    y2: SampledFunction,
    cfg: ChainConfig,
    n_chains: int = 8,
    *,
    jobs: int | None = None,
    k_max: int = 5,
    tau_cluster: float = 0.15,
    statistic: str = "median",
) -> PooledPosterior:
    """Run ``n_chains`` chains with seeds ``cfg.seed + 0..n_chains-1``,
    pool their retained draws, and cluster the pooled warps into modes.

    Chains run in separate processes (up to ``jobs`` at a time, default the
    CPU count); each owns its seed, so results do not depend on scheduling.
    A failed chain contributes its partial draws and its failure record;
    the run errors only if every chain failed.
    """
    if n_chains < 1:
        raise InvalidInputError("need at least one chain")
    configs = [cfg.with_seed(cfg.seed + i) for i in range(n_chains)]
    payloads = [(y1.values, y2.values, y1.grid.points, c) for c in configs]
    if jobs is None:
        jobs = min(n_chains, os.cpu_count() or 1)
    if jobs <= 1 or n_chains == 1:
        chains = [_run_chain_payload(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chains = list(pool.map(_run_chain_payload, payloads))
    return pool_chains(
        chains, y1, y2, k_max=k_max, tau_cluster=tau_cluster, statistic=statistic
    )


def pool_chains(
    chains: list[ChainSamples],
    y1: SampledFunction,
    y2: SampledFunction,
    *,
    k_max: int = 5,
    tau_cluster: float = 0.15,
    statistic: str = "median",
) -> PooledPosterior:
    """Pool retained draws of already-run chains and cluster the modes."""
    usable = [c for c in chains if c.n_retained > 0]
    if not usable:
        details = "; ".join(c.failure or "no retained draws" for c in chains)
        raise BayesAlignError(f"all chains failed: {details}")

    grid = y1.grid
    from .basis import eval_basis

    table = eval_basis(usable[0].basis_family, usable[0].n_basis, grid).table
    w = grid.trapz_weights

    coeffs = np.concatenate([c.coeffs for c in usable], axis=0)
    gammas = np.concatenate([c.gammas for c in usable], axis=0)
    chain_index = np.concatenate(
        [np.full(c.n_retained, i, dtype=np.intp) for i, c in enumerate(chains) if c.n_retained > 0]
    )
    psis = _psi_from_coeffs(coeffs, table, w)

    m = psis.shape[0]
    subset = (
        np.unique(np.linspace(0, m - 1, MAX_CLUSTER_POINTS).astype(np.intp))
        if m > MAX_CLUSTER_POINTS
        else np.arange(m, dtype=np.intp)
    )
    sub_labels = cluster_modes(psis[subset], k_max=k_max, tau_cluster=tau_cluster, grid=grid)
    n_modes = int(sub_labels.max()) + 1

    if m == subset.size:
        labels = sub_labels
    elif n_modes == 1:
        labels = np.zeros(m, dtype=np.intp)
    else:
        # assign every pooled draw to the nearest subset-cluster center
        centers = np.stack([
            karcher_center(psis[subset[sub_labels == mode]], statistic, grid=grid).center.values
            for mode in range(n_modes)
        ])
        inner = np.clip((psis * w) @ centers.T, -1.0, 1.0)
        labels = np.argmin(np.arccos(inner), axis=1).astype(np.intp)
        # nearest-center assignment may empty a cluster; relabel compactly
        present = np.unique(labels)
        remap = {old: new for new, old in enumerate(present)}
        labels = np.array([remap[v] for v in labels], dtype=np.intp)
        n_modes = present.size

    # amplitude distances use the transforms of the pooled posterior medians,
    # which are stable under observation noise
    f1_med = np.median(np.concatenate([c.f1 for c in usable], axis=0), axis=0)
    f2_med = np.median(np.concatenate([c.f2 for c in usable], axis=0), axis=0)
    q1 = to_srvf(SampledFunction(grid, f1_med))
    q2 = to_srvf(SampledFunction(grid, f2_med))
    summaries = []
    for mode in range(n_modes):
        member_mask = labels == mode
        summaries.append(
            summarize_mode(
                psis[member_mask],
                statistic,
                grid=grid,
                gammas=gammas[member_mask],
                q1=q1,
                q2=q2,
            )
        )
    best = select_best_mode(summaries)
    return PooledPosterior(
        grid=grid,
        chains=chains,
        chain_index=chain_index,
        coeffs=coeffs,
        gammas=gammas,
        psis=psis,
        labels=labels,
        summaries=summaries,
        best_mode=best,
    )
