"""Finite-degree Kac-Rice densities and pair correlations.

Covariance blocks A, B, C are read off kernel jets; the Schur complement
Lambda = C - B* A^{-1} B gives the conditional derivative covariance, from
which the one-point density D_N and the two-point correlation K_N follow.
A convergence driver compares the scaled outputs against the limit module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ConditioningError,
    DegenerateDirectionError,
    DegenerateSeparationError,
    PreconditionError,
)
from .geometry import GeometryJet, beta, limit_geometry
from .limits import TOL_BETA, density_limit, pair_limit
from .szego import KernelJet, NormTable, kernel_jet


@dataclass(frozen=True)
class OnePointBlocks:
    """Kac-Rice data at one point: scalar A, derivative row B, mixed block C,
    and the Schur complement Lambda (Hermitian PSD up to rounding)."""

    A: float
    B: np.ndarray
    C: np.ndarray
    Lambda: np.ndarray


@dataclass(frozen=True)
class TwoPointBlocks:
    """Kac-Rice data at a point pair; Lambda splits into (m+1)-sized blocks
    Lambda^{ab} indexed by the two points."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Lambda: np.ndarray
    mp1: int

    def block(self, a: int, b: int) -> np.ndarray:
        sl = [slice(0, self.mp1), slice(self.mp1, 2 * self.mp1)]
        return self.Lambda[sl[a - 1], sl[b - 1]]


def one_point_blocks(table: NormTable, x) -> OnePointBlocks:
    jet = kernel_jet(table, x, x)
    a_val = jet.S.real
    if not a_val > 0.0:
        raise ConditioningError("one_point_blocks: S_N(x,x) not positive")
    lam = jet.d2S - np.outer(jet.dS_z, jet.dS_w) / a_val
    return OnePointBlocks(A=a_val, B=jet.dS_w.copy(), C=jet.d2S.copy(), Lambda=lam)


def density_N(table: NormTable, z, u, N: int) -> float:
    """Expected zero density at z + u/N: (1/pi) trace(Lambda) / A."""
    sub = table.truncated(_check_N(table, N))
    x = np.asarray(z, dtype=complex) + np.asarray(u, dtype=complex) / N
    blocks = one_point_blocks(sub, x)
    c_scale = float(np.linalg.norm(blocks.C))
    if blocks.A < 1e-12 * c_scale:
        raise ConditioningError(
            f"density_N: A = {blocks.A:.3e} below 1e-12 * ||C|| = {1e-12 * c_scale:.3e}"
        )
    return float(np.trace(blocks.Lambda).real) / (math.pi * blocks.A)


def _check_N(table: NormTable, N: int) -> int:
    if N < 1 or N > table.N:
        raise PreconditionError(f"N = {N} outside the table range [1, {table.N}]")
    return int(N)


def two_point_blocks(table: NormTable, x1, x2) -> TwoPointBlocks:
    mp1 = table.m + 1
    jets: dict[tuple[int, int], KernelJet] = {}
    pts = {1: np.asarray(x1, dtype=complex), 2: np.asarray(x2, dtype=complex)}
    for a in (1, 2):
        for b in (1, 2):
            jets[a, b] = kernel_jet(table, pts[a], pts[b])

    a_mat = np.array(
        [[jets[1, 1].S, jets[1, 2].S], [jets[2, 1].S, jets[2, 2].S]], dtype=complex
    )
    b_mat = np.zeros((2, 2 * mp1), dtype=complex)
    c_mat = np.zeros((2 * mp1, 2 * mp1), dtype=complex)
    for a in (1, 2):
        for b in (1, 2):
            b_mat[a - 1, (b - 1) * mp1 : b * mp1] = jets[a, b].dS_w
            c_mat[(a - 1) * mp1 : a * mp1, (b - 1) * mp1 : b * mp1] = jets[a, b].d2S

    det_a = (a_mat[0, 0] * a_mat[1, 1] - a_mat[0, 1] * a_mat[1, 0]).real
    diag = a_mat[0, 0].real * a_mat[1, 1].real
    if det_a <= 1e-14 * diag:
        raise DegenerateSeparationError(
            f"two_point_blocks: det A = {det_a:.3e} <= 1e-14 * A11*A22 (points too close)"
        )
    # explicit 2x2 cofactor inverse; sizes here never warrant a general solver
    inv_a = (
        np.array(
            [[a_mat[1, 1], -a_mat[0, 1]], [-a_mat[1, 0], a_mat[0, 0]]], dtype=complex
        )
        / det_a
    )
    lam = c_mat - b_mat.conj().T @ inv_a @ b_mat
    return TwoPointBlocks(A=a_mat, B=b_mat, C=c_mat, Lambda=lam, mp1=mp1)


@dataclass(frozen=True)
class PairN:
    K_N: float
    K_tilde_N: float


def pair_N(table: NormTable, jet: GeometryJet, z, u, N: int) -> PairN:
    """Two-point zero correlation between z + u/N and z.

    K_N = [tr Lambda^11 tr Lambda^22 + sum_ij Lambda^12_ij Lambda^21_ji]
          / (pi^2 det A);
    K_tilde_N divides by the one-point densities at both points.
    """
    if abs(beta(jet, u)) < TOL_BETA:
        raise DegenerateDirectionError(
            "pair_N: beta(u) below tol_beta (tangential separation)"
        )
    n_val = _check_N(table, N)
    sub = table.truncated(n_val)
    zv = np.asarray(z, dtype=complex)
    uv = np.asarray(u, dtype=complex)
    blocks = two_point_blocks(sub, zv + uv / n_val, zv)

    l11 = blocks.block(1, 1)
    l22 = blocks.block(2, 2)
    l12 = blocks.block(1, 2)
    l21 = blocks.block(2, 1)
    det_a = (blocks.A[0, 0] * blocks.A[1, 1] - blocks.A[0, 1] * blocks.A[1, 0]).real
    cross = np.sum(l12 * l21.T)
    k_n = float(
        (np.trace(l11).real * np.trace(l22).real + cross.real) / (math.pi**2 * det_a)
    )
    d1 = density_N(table, zv, uv, n_val)
    d2 = density_N(table, zv, np.zeros_like(uv), n_val)
    return PairN(K_N=k_n, K_tilde_N=k_n / (d1 * d2))


def convergence_table(
    table: NormTable, jet: GeometryJet, z, u, N_list: Sequence[int]
) -> list[dict]:
    """Scaled finite-N quantities against their limits over an ascending N_list.

    Rows carry D_scaled = D_N/N^2 and, when beta(u) is not tangential,
    K_scaled = K_N/N^4 and K_tilde_N, with relative errors against the limit
    module. fitted_rate is the least-squares slope of log err vs log N for the
    primary error (err_K in pair mode, err_D otherwise); a run is flagged when
    the primary error at the largest N exceeds 10%.
    """
    n_list = [int(n) for n in N_list]
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise PreconditionError("convergence_table: N_list must be ascending with >= 3 entries")
    geom = limit_geometry(jet)
    beta_u = beta(jet, u)
    pair_mode = abs(beta_u) >= TOL_BETA
    d_inf = density_limit(geom, beta_u)
    k_inf = k_tilde_inf = None
    if pair_mode:
        lim = pair_limit(geom, beta_u)
        k_inf, k_tilde_inf = lim.K_inf, lim.K_tilde_inf

    rows: list[dict] = []
    for n in n_list:
        d_scaled = density_N(table, z, u, n) / n**2
        err_d = abs(d_scaled - d_inf) / d_inf
        row = {
            "N": n,
            "D_scaled": d_scaled,
            "K_scaled": None,
            "K_tilde": None,
            "err_D": err_d,
            "err_K": None,
        }
        if pair_mode:
            pn = pair_N(table, jet, z, u, n)
            row["K_scaled"] = pn.K_N / float(n) ** 4
            row["K_tilde"] = pn.K_tilde_N
            row["err_K"] = abs(row["K_scaled"] - k_inf) / abs(k_inf)
        rows.append(row)

    key = "err_K" if pair_mode else "err_D"
    errs = np.array([row[key] for row in rows], dtype=float)
    ns = np.array(n_list, dtype=float)
    ok = errs > 0.0
    if ok.sum() >= 2:
        rate = float(np.polyfit(np.log(ns[ok]), np.log(errs[ok]), 1)[0])
    else:
        rate = math.nan
    flagged = bool(errs[-1] > 0.10)
    for row in rows:
        row["fitted_rate"] = rate
        row["flagged"] = flagged
    return rows
