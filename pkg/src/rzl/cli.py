"""Command-line front end.

A thin client of the HTTP service: every subcommand posts one request
(in-process by default, to --server/RZL_SERVER if given), writes the CSV
rows to stdout or --out, and emits a one-line JSON summary
{subcommand, config, metrics, gates} on stderr.

Exit codes: 0 success, 2 precondition violation, 3 accuracy/conditioning
error, 4 convergence/statistical gate failure. Errors print a single
machine-parsable line `ERROR <code> <message>` on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import PreconditionError, RzlError
from .formats import parse_complex_vector, render_csv

_EPILOG = """\
complex grammar: a+bi / a-bi with no spaces (1+0i, -2.5i, 3, 0.5-0.25i);
vectors are comma-separated components, e.g. --z 1+0i,0+0i.
profiles: circle | sphere[:k] | ellipsoid:a0,a1,... | pellipsoid:p0,p1,...
"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rzl",
        description="Scaling limits, finite-N kernels, and Monte Carlo zero statistics.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--server",
        default=os.environ.get("RZL_SERVER"),
        help="base URL of a running service; default: run in-process",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_out(p: argparse.ArgumentParser, required: bool = False) -> None:
        p.add_argument("--out", required=required, help="output file (default: stdout)")

    def add_grid(p: argparse.ArgumentParser) -> None:
        p.add_argument("--lambda-min", type=float, default=0.1)
        p.add_argument("--lambda-max", type=float, default=30.0)
        p.add_argument("--steps", type=int, default=300)

    p = sub.add_parser("figures", help="k_perp/k_theta curves for the sphere at (1,0)")
    add_grid(p)
    add_out(p)

    p = sub.add_parser("limits-curve", help="limit density and pair correlation along a direction")
    p.add_argument("--profile", required=True)
    p.add_argument("--z", required=True)
    p.add_argument("--u", required=True)
    add_grid(p)
    add_out(p)

    for name in ("converge-density", "converge-pair"):
        p = sub.add_parser(name, help=f"finite-N convergence study ({name.split('-')[1]})")
        p.add_argument("--profile", required=True)
        p.add_argument("--z", required=True)
        p.add_argument("--u", required=True)
        p.add_argument("--N-list", required=True, help="ascending degrees, e.g. 50,100,200")
        p.add_argument("--quad-order", type=int, default=256)
        add_out(p)

    p = sub.add_parser("mc-circle", help="Monte Carlo zero density on the circle (m=0)")
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=float, default=5.0)
    p.add_argument("--bins", type=int, default=21)
    p.add_argument("--z", default="1+0i")
    add_out(p)

    p = sub.add_parser("norms", help="write a monomial norm table file")
    p.add_argument("--profile", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--quad-order", type=int, default=256)
    p.add_argument("--method", default="auto", choices=("auto", "closed", "quadrature"))
    add_out(p, required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise PreconditionError(f"N-list: cannot parse {text!r}: {exc}") from exc


def _request_payload(args: argparse.Namespace) -> dict:
    sub = args.subcommand
    if sub == "figures":
        return {
            "lambda_min": args.lambda_min,
            "lambda_max": args.lambda_max,
            "steps": args.steps,
        }
    if sub == "limits-curve":
        parse_complex_vector(args.z)
        parse_complex_vector(args.u)
        return {
            "profile": args.profile,
            "z": args.z,
            "u": args.u,
            "lambda_min": args.lambda_min,
            "lambda_max": args.lambda_max,
            "steps": args.steps,
        }
    if sub in ("converge-density", "converge-pair"):
        parse_complex_vector(args.z)
        parse_complex_vector(args.u)
        return {
            "profile": args.profile,
            "z": args.z,
            "u": args.u,
            "N_list": _parse_int_list(args.N_list),
            "quad_order": args.quad_order,
        }
    if sub == "mc-circle":
        parse_complex_vector(args.z)
        return {
            "N": args.N,
            "trials": args.trials,
            "seed": args.seed,
            "window": args.window,
            "bins": args.bins,
            "z": args.z,
        }
    if sub == "norms":
        return {
            "profile": args.profile,
            "N": args.N,
            "quad_order": args.quad_order,
            "method": args.method,
        }
    raise PreconditionError(f"unknown subcommand {sub!r}")


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    import warnings

    with warnings.catch_warnings():
        # starlette emits an httpx deprecation notice on import; keep stderr
        # reserved for the JSON summary and ERROR lines
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app, raise_server_exceptions=False)


def _error(code: int, message: str) -> int:
    text = " ".join(str(message).split())
    print(f"ERROR {code} {text}", file=sys.stderr)
    return code


def _write_output(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.subcommand == "serve":
        import uvicorn

        uvicorn.run("rzl.service:app", host=args.host, port=args.port)
        return 0
    try:
        payload = _request_payload(args)
    except RzlError as exc:
        return _error(exc.exit_code, str(exc))

    try:
        with _client(args.server) as client:
            resp = client.post(f"/{args.subcommand}", json=payload)
    except Exception as exc:  # connection-level failures
        return _error(1, f"service request failed: {exc}")

    if resp.status_code != 200:
        try:
            body = resp.json()
        except ValueError:
            return _error(1, f"HTTP {resp.status_code}: {resp.text[:200]}")
        if isinstance(body, dict) and "code" in body:
            return _error(int(body["code"]), body.get("message", ""))
        return _error(2, f"invalid request: {json.dumps(body)}")

    data = resp.json()
    if args.subcommand == "norms":
        _write_output(data["file_text"], args.out)
    else:
        _write_output(render_csv(data["columns"], data["rows"]), args.out)
    summary = {
        "subcommand": data["subcommand"],
        "config": data["config"],
        "metrics": data["metrics"],
        "gates": data["gates"],
    }
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    failed = sorted(name for name, verdict in data["gates"].items() if verdict == "fail")
    if failed:
        return _error(4, f"gate failed: {','.join(failed)}")
    return 0


def main_entry() -> None:
    raise SystemExit(main())
