"""Monte Carlo validation for m = 0.

Sample Gaussian random polynomials in the orthonormal basis, extract all
roots, map them into the scaled window u = N (zeta - z) around a boundary
point of the circle, and compare binned empirical densities against the
limit density with Poisson error bars.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, RootQualityError
from .geometry import beta, boundary_point, circle, geometry_jet, limit_geometry
from .limits import density_limit
from .szego import NormTable

_RESIDUAL_TOL = 1e-8
_COEFF_FLOOR = 1e-300


def max_workers(explicit: int | None = None) -> int:
    """Worker cap: explicit argument, else RZL_THREADS, else machine parallelism."""
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get("RZL_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class EnsembleConfig:
    """Monte Carlo run description in scaled coordinates u = N (zeta - z).

    window is the half-width of the square binning window; bins is the grid
    resolution per axis.
    """

    N: int
    trials: int
    seed: int
    window: float = 5.0
    bins: int = 21

    def __post_init__(self) -> None:
        if self.N < 1:
            raise PreconditionError(f"EnsembleConfig: N must be >= 1, got {self.N}")
        if self.trials < 100:
            raise PreconditionError(f"EnsembleConfig: trials must be >= 100, got {self.trials}")
        if not 0.0 < self.window <= 10.0:
            raise PreconditionError(
                f"EnsembleConfig: window must lie in (0, 10], got {self.window}"
            )
        if self.bins < 3:
            raise PreconditionError(f"EnsembleConfig: bins must be >= 3, got {self.bins}")


def sample_poly(table: NormTable, N: int, rng: np.random.Generator) -> np.ndarray:
    """Monomial coefficients c_k = a_k / sqrt(n_k) of a random polynomial with
    i.i.d. standard complex Gaussian a_k (E|a_k|^2 = 1)."""
    if table.m != 0:
        raise PreconditionError(f"sample_poly: requires an m = 0 table, got m = {table.m}")
    sub = table.truncated(N)
    a = rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1)
    a *= math.sqrt(0.5)
    return a / np.sqrt(sub.norms)


def find_roots(coeffs: np.ndarray) -> np.ndarray:
    """All roots of sum_k c_k zeta^k, companion-matrix solve plus one Newton
    polish; every root must pass the residual gate
    |p(root)| <= 1e-8 max|c| max(1, |root|)^d."""
    c = np.asarray(coeffs, dtype=complex).reshape(-1)
    big = np.abs(c) > _COEFF_FLOOR
    if not np.any(big):
        raise PreconditionError("find_roots: no nonzero coefficient")
    deg = int(np.flatnonzero(big)[-1])
    c = c[: deg + 1]
    if deg == 0:
        return np.empty(0, dtype=complex)

    high_first = c[::-1]
    roots = np.roots(high_first)
    val = np.polyval(high_first, roots)
    slope = np.polyval(np.polyder(high_first), roots)
    step = np.zeros_like(roots)
    np.divide(val, slope, out=step, where=slope != 0)
    roots = roots - step

    resid = np.abs(np.polyval(high_first, roots))
    tol = _RESIDUAL_TOL * float(np.max(np.abs(c))) * np.maximum(1.0, np.abs(roots)) ** deg
    if np.any(resid > tol):
        worst = float(np.max(resid / tol))
        raise RootQualityError(f"find_roots: residual gate failed by factor {worst:.3e}")
    return roots


@dataclass(frozen=True)
class DensityHistogram:
    """Binned scaled zero counts with prediction and Poisson z-scores.

    counts[i, j] covers the i-th Re(u) bin and j-th Im(u) bin; empirical is
    counts / (trials_ok * bin_area); std_err is the Poisson standard error of
    empirical under the predicted rate.
    """

    re_centers: np.ndarray
    im_centers: np.ndarray
    counts: np.ndarray
    empirical: np.ndarray
    predicted: np.ndarray
    std_err: np.ndarray
    z_scores: np.ndarray
    trials_ok: int
    discarded_trials: int
    mean_roots_per_trial: float
    bin_area: float


def estimate_density(
    config: EnsembleConfig, table: NormTable, z: complex, workers: int | None = None
) -> DensityHistogram:
    """Run the ensemble and histogram scaled roots against the limit density.

    Trials draw from per-trial child streams of the master seed, so results
    are bit-identical for a fixed config regardless of scheduling. Trials
    whose roots fail the residual gate are discarded and counted.
    """
    if table.m != 0:
        raise PreconditionError("estimate_density: requires an m = 0 table")
    if table.N < config.N:
        raise PreconditionError(
            f"estimate_density: table degree {table.N} below config N {config.N}"
        )
    z = complex(z)
    if abs(abs(z) - 1.0) > 1e-10:
        raise PreconditionError("estimate_density: z must lie on the unit circle")

    edges = np.linspace(-config.window, config.window, config.bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    bin_area = (2.0 * config.window / config.bins) ** 2

    children = np.random.SeedSequence(config.seed).spawn(config.trials)

    def run_trial(child: np.random.SeedSequence) -> tuple[np.ndarray | None, int]:
        rng = np.random.default_rng(child)
        coeffs = sample_poly(table, config.N, rng)
        try:
            roots = find_roots(coeffs)
        except RootQualityError:
            return None, 0
        u = config.N * (roots - z)
        hist, _, _ = np.histogram2d(u.real, u.imag, bins=(edges, edges))
        return hist.astype(np.int64), roots.size

    counts = np.zeros((config.bins, config.bins), dtype=np.int64)
    discarded = 0
    total_roots = 0
    with ThreadPoolExecutor(max_workers=max_workers(workers)) as pool:
        for hist, nroots in pool.map(run_trial, children, chunksize=16):
            if hist is None:
                discarded += 1
            else:
                counts += hist
                total_roots += nroots
    trials_ok = config.trials - discarded
    if trials_ok == 0:
        raise RootQualityError("estimate_density: every trial failed the residual gate")

    jet = geometry_jet(circle(), boundary_point(circle(), [z], project=False))
    geom = limit_geometry(jet)
    predicted = np.empty((config.bins, config.bins))
    for i, ure in enumerate(centers):
        for j, uim in enumerate(centers):
            predicted[i, j] = density_limit(geom, beta(jet, [complex(ure, uim)]))

    mu = predicted * bin_area * trials_ok
    empirical = counts / (trials_ok * bin_area)
    std_err = np.sqrt(mu) / (trials_ok * bin_area)
    z_scores = (counts - mu) / np.sqrt(mu)
    return DensityHistogram(
        re_centers=centers,
        im_centers=centers,
        counts=counts,
        empirical=empirical,
        predicted=predicted,
        std_err=std_err,
        z_scores=z_scores,
        trials_ok=trials_ok,
        discarded_trials=discarded,
        mean_roots_per_trial=total_roots / trials_ok,
        bin_area=bin_area,
    )
