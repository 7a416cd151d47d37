"""HTTP service exposing the laboratory.

Each endpoint mirrors one CLI subcommand and returns a uniform payload:
column names, rows, a metrics dict, and a gates dict with 'pass'/'fail'
values. Domain errors map to HTTP 400 with {"code", "message"}, where code
is the CLI exit code (2 precondition, 3 accuracy).
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__, kacrice, montecarlo
from .errors import PreconditionError, RzlError
from .formats import parse_complex, parse_complex_vector
from .geometry import (
    beta,
    boundary_point,
    circle,
    geometry_jet,
    limit_geometry,
    parse_profile,
    sphere,
)
from .limits import TOL_BETA, density_limit, pair_limit
from .szego import compute_norms, dump_norm_table

app = FastAPI(title="rzl", version=__version__)


@app.exception_handler(RzlError)
async def _domain_error(_request: Request, exc: RzlError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"code": exc.exit_code, "message": str(exc)})


class FiguresRequest(BaseModel):
    lambda_min: float = 0.1
    lambda_max: float = 30.0
    steps: int = 300


class LimitsCurveRequest(BaseModel):
    profile: str
    z: str
    u: str
    lambda_min: float = 0.1
    lambda_max: float = 30.0
    steps: int = 300


class ConvergeRequest(BaseModel):
    profile: str
    z: str
    u: str
    N_list: list[int]
    quad_order: int = 256


class McCircleRequest(BaseModel):
    N: int = 100
    trials: int = 10000
    seed: int = 0
    window: float = 5.0
    bins: int = 21
    z: str = "1+0i"


class NormsRequest(BaseModel):
    profile: str
    N: int
    quad_order: int = 256
    method: str = "auto"


class TableResponse(BaseModel):
    subcommand: str
    config: dict
    columns: list[str]
    rows: list[list[int | float | None]]
    metrics: dict
    gates: dict[str, str]


class NormsResponse(BaseModel):
    subcommand: str
    config: dict
    file_text: str
    metrics: dict
    gates: dict[str, str]


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def _lambda_grid(lo: float, hi: float, steps: int) -> np.ndarray:
    if steps < 2:
        raise PreconditionError(f"steps must be >= 2, got {steps}")
    if not lo < hi:
        raise PreconditionError(f"need lambda_min < lambda_max, got [{lo}, {hi}]")
    if lo < TOL_BETA:
        raise PreconditionError(f"lambda_min must be >= {TOL_BETA:g} (tangential cutoff)")
    return np.linspace(lo, hi, steps)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/figures", response_model=TableResponse)
def figures(req: FiguresRequest) -> TableResponse:
    """k_perp and k_theta curves on the sphere S^3 at z = (1, 0):
    k_perp(lam) = K_tilde_inf at beta = lam, k_theta(lam) at beta = i lam."""
    grid = _lambda_grid(req.lambda_min, req.lambda_max, req.steps)
    profile = sphere(2)
    jet = geometry_jet(profile, boundary_point(profile, [1.0, 0.0], project=False))
    geom = limit_geometry(jet)
    rows: list[list[float]] = []
    for lam in grid:
        k_perp = pair_limit(geom, complex(lam, 0.0)).K_tilde_inf
        k_theta = pair_limit(geom, complex(0.0, lam)).K_tilde_inf
        rows.append([float(lam), k_perp, k_theta])
    dev = np.array([row[2] - 1.0 for row in rows])
    sign_changes = int(np.sum(dev[:-1] * dev[1:] < 0.0))
    k_perp_last = rows[-1][1]
    metrics = {
        "lambda_max": float(grid[-1]),
        "k_perp_at_lambda_max": k_perp_last,
        "k_theta_sign_changes": sign_changes,
    }
    gates = {
        "k_perp_tail_within_0.05": _verdict(abs(k_perp_last - 1.0) < 0.05),
        "k_theta_oscillation_ge_3": _verdict(sign_changes >= 3),
    }
    return TableResponse(
        subcommand="figures",
        config=req.model_dump(),
        columns=["lambda", "k_perp", "k_theta"],
        rows=rows,
        metrics=metrics,
        gates=gates,
    )


@app.post("/limits-curve", response_model=TableResponse)
def limits_curve(req: LimitsCurveRequest) -> TableResponse:
    """Limit density and pair correlations along scale * u for a user point."""
    grid = _lambda_grid(req.lambda_min, req.lambda_max, req.steps)
    profile = parse_profile(req.profile)
    point = boundary_point(profile, parse_complex_vector(req.z))
    jet = geometry_jet(profile, point)
    geom = limit_geometry(jet)
    beta_u = beta(jet, parse_complex_vector(req.u))
    if abs(beta_u) * req.lambda_min < TOL_BETA:
        raise PreconditionError(
            f"limits-curve: |beta(u)| = {abs(beta_u):.3e} is tangential at this grid"
        )
    rows = []
    for s in grid:
        b = s * beta_u
        lim = pair_limit(geom, b)
        rows.append(
            [float(s), b.real, b.imag, density_limit(geom, b), lim.K_inf, lim.K_tilde_inf]
        )
    metrics = {
        "beta_u_re": beta_u.real,
        "beta_u_im": beta_u.imag,
        "D_inf_at_origin": density_limit(geom, 0.0),
    }
    return TableResponse(
        subcommand="limits-curve",
        config=req.model_dump(),
        columns=["scale", "beta_re", "beta_im", "D_inf", "K_inf", "K_tilde_inf"],
        rows=rows,
        metrics=metrics,
        gates={},
    )


def _converge(req: ConvergeRequest, subcommand: str, want_pair: bool) -> TableResponse:
    profile = parse_profile(req.profile)
    point = boundary_point(profile, parse_complex_vector(req.z))
    jet = geometry_jet(profile, point)
    u = np.array(parse_complex_vector(req.u), dtype=complex)
    if u.size != profile.ncoords:
        raise PreconditionError(
            f"{subcommand}: u needs {profile.ncoords} components, got {u.size}"
        )
    if want_pair and abs(beta(jet, u)) < TOL_BETA:
        raise PreconditionError(f"{subcommand}: beta(u) is tangential; pick a normal u")
    if not req.N_list:
        raise PreconditionError(f"{subcommand}: N_list must not be empty")
    table = compute_norms(profile, max(req.N_list), quad_order=req.quad_order)
    records = kacrice.convergence_table(table, jet, point.z, u, req.N_list)
    columns = ["N", "D_scaled", "K_scaled", "K_tilde", "err_D", "err_K", "fitted_rate", "flagged"]
    rows = [[rec[c] if c != "flagged" else int(rec[c]) for c in columns] for rec in records]
    primary = "err_K" if records[0]["err_K"] is not None else "err_D"
    metrics = {
        "fitted_rate": records[-1]["fitted_rate"],
        "primary_err": primary,
        "err_at_largest_N": records[-1][primary],
    }
    gates = {"primary_err_le_10pct_at_largest_N": _verdict(not records[-1]["flagged"])}
    return TableResponse(
        subcommand=subcommand,
        config=req.model_dump(),
        columns=columns,
        rows=rows,
        metrics=metrics,
        gates=gates,
    )


@app.post("/converge-density", response_model=TableResponse)
def converge_density(req: ConvergeRequest) -> TableResponse:
    return _converge(req, "converge-density", want_pair=False)


@app.post("/converge-pair", response_model=TableResponse)
def converge_pair(req: ConvergeRequest) -> TableResponse:
    return _converge(req, "converge-pair", want_pair=True)


@app.post("/mc-circle", response_model=TableResponse)
def mc_circle(req: McCircleRequest) -> TableResponse:
    z = parse_complex(req.z)
    config = montecarlo.EnsembleConfig(
        N=req.N, trials=req.trials, seed=req.seed, window=req.window, bins=req.bins
    )
    table = compute_norms(circle(), req.N)
    hist = montecarlo.estimate_density(config, table, z)
    rows = []
    for i, ure in enumerate(hist.re_centers):
        for j, uim in enumerate(hist.im_centers):
            rows.append(
                [
                    float(ure),
                    float(uim),
                    int(hist.counts[i, j]),
                    float(hist.empirical[i, j]),
                    float(hist.predicted[i, j]),
                    float(hist.z_scores[i, j]),
                ]
            )
    ci = int(np.argmin(np.abs(hist.re_centers)))
    cj = int(np.argmin(np.abs(hist.im_centers)))
    central_dev = abs(hist.empirical[ci, cj] - hist.predicted[ci, cj])
    frac_ok = float(np.mean(np.abs(hist.z_scores) < 3.0))
    metrics = {
        "trials_ok": hist.trials_ok,
        "discarded_trials": hist.discarded_trials,
        "mean_roots_per_trial": hist.mean_roots_per_trial,
        "central_empirical": float(hist.empirical[ci, cj]),
        "central_predicted": float(hist.predicted[ci, cj]),
        "central_z": float(hist.z_scores[ci, cj]),
        "frac_bins_abs_z_lt_3": frac_ok,
    }
    gates = {
        "central_within_3se": _verdict(central_dev <= 3.0 * hist.std_err[ci, cj]),
        "bins_90pct_within_3sigma": _verdict(frac_ok >= 0.90),
    }
    return TableResponse(
        subcommand="mc-circle",
        config=req.model_dump(),
        columns=["re_u", "im_u", "count", "empirical", "predicted", "z_score"],
        rows=rows,
        metrics=metrics,
        gates=gates,
    )


@app.post("/norms", response_model=NormsResponse)
def norms(req: NormsRequest) -> NormsResponse:
    profile = parse_profile(req.profile)
    table = compute_norms(profile, req.N, quad_order=req.quad_order, method=req.method)
    metrics = {
        "count": int(len(table.norms)),
        "total_mass": table.total_mass,
        "measure": table.measure_tag,
    }
    return NormsResponse(
        subcommand="norms",
        config=req.model_dump(),
        file_text=dump_norm_table(table),
        metrics=metrics,
        gates={},
    )
