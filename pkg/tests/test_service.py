"""HTTP service surface: schemas, verdicts, and error mapping."""

from __future__ import annotations

import math
import warnings

import numpy as np
import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from rzl import szego
from rzl.service import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app, raise_server_exceptions=False) as c:
        yield c


def test_health(client) -> None:
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert "version" in body


def test_converge_density_circle(client) -> None:
    r = client.post(
        "/converge-density",
        json={"profile": "circle", "z": "1+0i", "u": "0+0i", "N_list": [10, 20, 40]},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["subcommand"] == "converge-density"
    assert body["columns"] == [
        "N", "D_scaled", "K_scaled", "K_tilde", "err_D", "err_K", "fitted_rate", "flagged",
    ]
    assert len(body["rows"]) == 3
    first = body["rows"][0]
    assert first[0] == 10
    assert first[1] == pytest.approx((1 + 2 / 10) / (12 * math.pi), rel=1e-12)
    assert first[2] is None and first[3] is None
    assert body["metrics"]["fitted_rate"] == pytest.approx(-1.0, abs=0.05)
    assert body["gates"] == {"primary_err_le_10pct_at_largest_N": "pass"}
    assert body["config"]["profile"] == "circle"


def test_converge_pair_gate_failure_reported_not_raised(client) -> None:
    r = client.post(
        "/converge-pair",
        json={
            "profile": "sphere",
            "z": "1+0i,0+0i",
            "u": "2+0i,0+0i",
            "N_list": [20, 40, 80],
        },
    )
    assert r.status_code == 200
    body = r.json()
    assert body["gates"]["primary_err_le_10pct_at_largest_N"] == "fail"
    assert body["metrics"]["err_at_largest_N"] > 0.10


def test_error_mapping_precondition(client) -> None:
    r = client.post(
        "/converge-density",
        json={"profile": "hyperbola", "z": "1+0i", "u": "0+0i", "N_list": [10, 20, 40]},
    )
    assert r.status_code == 400
    body = r.json()
    assert body["code"] == 2
    assert "profile" in body["message"]


def test_error_mapping_accuracy(client) -> None:
    # points closer than the separation floor trip the exit-3 family
    r = client.post(
        "/converge-pair",
        json={"profile": "circle", "z": "1+0i", "u": "2e-8+0i", "N_list": [10, 20, 40]},
    )
    assert r.status_code == 400
    assert r.json()["code"] == 3


def test_bad_complex_grammar(client) -> None:
    r = client.post(
        "/converge-density",
        json={"profile": "circle", "z": "1+0x", "u": "0+0i", "N_list": [10, 20, 40]},
    )
    assert r.status_code == 400
    assert r.json()["code"] == 2


def test_limits_curve(client) -> None:
    r = client.post(
        "/limits-curve",
        json={
            "profile": "circle",
            "z": "1+0i",
            "u": "1+0i",
            "lambda_min": 0.5,
            "lambda_max": 2.0,
            "steps": 4,
        },
    )
    assert r.status_code == 200
    body = r.json()
    assert body["columns"] == ["scale", "beta_re", "beta_im", "D_inf", "K_inf", "K_tilde_inf"]
    assert len(body["rows"]) == 4
    assert body["rows"][0][0] == 0.5
    assert body["rows"][-1][0] == 2.0
    # beta(u) = u on the circle at z = 1
    assert body["rows"][1][1] == pytest.approx(1.0, rel=1e-12)
    assert body["metrics"]["D_inf_at_origin"] == pytest.approx(1 / (12 * math.pi), rel=1e-12)


def test_figures_small_grid(client) -> None:
    r = client.post("/figures", json={"lambda_min": 0.1, "lambda_max": 3.0, "steps": 12})
    assert r.status_code == 200
    body = r.json()
    assert body["columns"] == ["lambda", "k_perp", "k_theta"]
    assert len(body["rows"]) == 12
    lam, k_perp, k_theta = body["rows"][0]
    assert lam == pytest.approx(0.1)
    assert 0.0 < k_perp < 1.0  # repulsion dip near the origin
    # too short a grid to see the tail or the oscillation: both gates fail
    assert body["gates"]["k_perp_tail_within_0.05"] == "fail"
    assert body["gates"]["k_theta_oscillation_ge_3"] == "fail"


def test_figures_grid_validation(client) -> None:
    r = client.post("/figures", json={"lambda_min": 3.0, "lambda_max": 1.0, "steps": 12})
    assert r.status_code == 400
    assert r.json()["code"] == 2
    r = client.post("/figures", json={"steps": 1})
    assert r.status_code == 400
    r = client.post("/figures", json={"lambda_min": 0.0, "lambda_max": 3.0, "steps": 5})
    assert r.status_code == 400


def test_norms_endpoint_round_trip(client) -> None:
    r = client.post("/norms", json={"profile": "sphere", "N": 6})
    assert r.status_code == 200
    body = r.json()
    tab = szego.parse_norm_table(body["file_text"])
    assert tab.m == 1 and tab.N == 6
    assert tab.norm_of((0, 0)) == pytest.approx(2 * math.pi**2, rel=1e-14)
    assert body["metrics"]["count"] == 28


def test_mc_endpoint_tiny_run(client) -> None:
    r = client.post(
        "/mc-circle",
        json={"N": 30, "trials": 120, "seed": 3, "bins": 5},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["columns"] == ["re_u", "im_u", "count", "empirical", "predicted", "z_score"]
    assert len(body["rows"]) == 25
    assert body["metrics"]["trials_ok"] == 120
    assert set(body["gates"]) == {"central_within_3se", "bins_90pct_within_3sigma"}
    counts = np.array([row[2] for row in body["rows"]])
    assert counts.sum() > 0


def test_mc_endpoint_rejects_bad_config(client) -> None:
    r = client.post("/mc-circle", json={"N": 30, "trials": 10, "seed": 3})
    assert r.status_code == 400
    assert r.json()["code"] == 2


def test_unknown_route_is_plain_404(client) -> None:
    assert client.post("/nope", json={}).status_code == 404
