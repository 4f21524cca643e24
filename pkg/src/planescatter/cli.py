"""Batch CLI: JSON config in, CSV matrices and study tables out.

The CLI is a thin client of the compute service.  By default it talks to an
in-process instance of the FastAPI app (no server or network needed); pass
``--server http://host:port`` to use a running instance instead.

Exit codes: 0 ok / 1 configuration / 2 accuracy / 3 near-singular /
4 degenerate study.
"""

from __future__ import annotations

import argparse
import asyncio
import hashlib
import json
import os
import sys

import httpx

from .config import parse_config
from .errors import ConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ACCURACY = 2
EXIT_NEAR_SINGULAR = 3
EXIT_DEGENERATE = 4


def _config_hash(payload) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


class ServiceClient:
    """POSTs requests either to a remote server or to the in-process app."""

    def __init__(self, server: str | None = None):
        self.server = server

    def post(self, path: str, payload: dict):
        if self.server:
            with httpx.Client(base_url=self.server, timeout=None) as client:
                r = client.post(path, json=payload)
                return r.status_code, r.json()

        async def _go():
            from .service.app import create_app
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(transport=transport,
                                         base_url="http://planescatter.local",
                                         timeout=None) as client:
                r = await client.post(path, json=payload)
                return r.status_code, r.json()

        return asyncio.run(_go())


def _load_config(path: str | None, command: str) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}")
    if not isinstance(payload, dict):
        raise ConfigurationError("config root must be a JSON object")
    return payload


def _error_exit(body) -> int:
    err = (body or {}).get("error", {})
    msg = err.get("message", "request failed")
    print(f"error [{err.get('code', 'unknown')}]: {msg}", file=sys.stderr)
    return int(err.get("exit_code", EXIT_CONFIG))


def _write(out_dir: str, name: str, text: str):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(text)


def _write_meta(out_dir: str, meta: dict, payload: dict):
    meta = dict(meta)
    meta["config_hash"] = _config_hash(payload)
    _write(out_dir, "meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _complex_csv(mat_re, mat_im) -> str:
    lines = ["i,j,re,im"]
    for i, (row_r, row_i) in enumerate(zip(mat_re, mat_im)):
        for j, (re, im) in enumerate(zip(row_r, row_i)):
            lines.append(f"{i},{j},{re!r},{im!r}")
    return "\n".join(lines) + "\n"


def cmd_smatrix(args, client: ServiceClient) -> int:
    payload = _load_config(args.config, "smatrix")
    parse_config("smatrix", payload)  # local validation: fail fast with exit 1
    status, body = client.post("/v1/smatrix", payload)
    if status != 200:
        return _error_exit(body)
    out = args.out or "."
    _write(out, "smatrix.csv", _complex_csv(body["s"]["re"], body["s"]["im"]))
    sphere = body["sphere"]
    lines = ["idx,xi1,xi2,xi3,weight"]
    for i, (d, w) in enumerate(zip(sphere["directions"], sphere["weights"])):
        lines.append(f"{i},{d[0]!r},{d[1]!r},{d[2]!r},{w!r}")
    _write(out, "sphere_grid.csv", "\n".join(lines) + "\n")
    lines = ["idx,x,y,weight"]
    for i, (xy, w) in enumerate(zip(body["surface_nodes"], body["surface_weights"])):
        lines.append(f"{i},{xy[0]!r},{xy[1]!r},{w!r}")
    _write(out, "sigma_grid.csv", "\n".join(lines) + "\n")
    _write_meta(out, body["meta"], payload)
    print(f"smatrix: defect={body['meta']['unitarity_defect']:.3e} "
          f"condition={body['meta']['condition_estimate']:.3e} -> {out}")
    return EXIT_OK


def cmd_scaling(args, client: ServiceClient) -> int:
    payload = _load_config(args.config, "scaling")
    parse_config("scaling", payload)
    status, body = client.post("/v1/scaling", payload)
    if status != 200:
        return _error_exit(body)
    out = args.out or "."
    lines = ["t,s_norm_sq,gamma_int"]
    for row in body["rows"]:
        lines.append(f"{row['t']!r},{row['s_norm_sq']!r},{row['gamma_int']!r}")
    _write(out, "scaling.csv", "\n".join(lines) + "\n")
    meta = {k: body[k] for k in ("slope", "degenerate", "gamma", "lambda", "alpha")}
    _write_meta(out, meta, payload)
    if body["degenerate"]:
        print("scaling: degenerate study (all-zero scattering)", file=sys.stderr)
        return EXIT_DEGENERATE
    print(f"scaling: slope={body['slope']:.4f} -> {out}")
    return EXIT_OK


def cmd_lap1d(args, client: ServiceClient) -> int:
    payload = _load_config(args.config, "lap1d")
    parse_config("lap1d", payload)
    status, body = client.post("/v1/lap1d", payload)
    if status != 200:
        return _error_exit(body)
    out = args.out or "."
    lines = ["lambda,epsilon,ratio"]
    for i, lam in enumerate(body["lambdas"]):
        for j, eps in enumerate(body["eps_list"]):
            lines.append(f"{lam!r},{eps!r},{body['ratios'][i][j]!r}")
    _write(out, "lap_sweep.csv", "\n".join(lines) + "\n")
    meta = {k: body[k] for k in ("max_ratio", "bounded", "theta", "s1", "alpha")}
    _write_meta(out, meta, payload)
    print(f"lap1d: max_ratio={body['max_ratio']:.4f} bounded={body['bounded']} -> {out}")
    return EXIT_OK


def cmd_resolvent_diff(args, client: ServiceClient) -> int:
    payload = _load_config(args.config, "resolvent-diff")
    parse_config("resolvent-diff", payload)
    status, body = client.post("/v1/resolvent-diff", payload)
    if status != 200:
        return _error_exit(body)
    out = args.out or "."
    lines = ["idx,px,py,pz,re,im"]
    for i, (pt, re, im) in enumerate(zip(body["points"], body["re"], body["im"])):
        lines.append(f"{i},{pt[0]!r},{pt[1]!r},{pt[2]!r},{re!r},{im!r}")
    _write(out, "resolvent_diff.csv", "\n".join(lines) + "\n")
    _write_meta(out, {"n_points": len(body["points"])}, payload)
    print(f"resolvent-diff: {len(body['points'])} points -> {out}")
    return EXIT_OK


def cmd_selftest(args, client: ServiceClient) -> int:
    payload = _load_config(args.config, "selftest")
    if args.diagnostic_sign_flip:
        payload["diagnostic_sign_flip"] = True
    parse_config("selftest", payload)
    status, body = client.post("/v1/selftest", payload)
    if status != 200:
        return _error_exit(body)
    width = max(len(c["name"]) for c in body["checks"])
    for c in body["checks"]:
        mark = "PASS" if c["passed"] else "FAIL"
        print(f"{c['name']:<{width}}  {mark}  {c['detail']}")
    if args.out:
        _write(args.out, "kernel_selftest.csv", body["kernel_csv"])
        _write_meta(args.out, {"passed": body["passed"]}, payload)
    return EXIT_OK if body["passed"] else EXIT_ACCURACY


def cmd_serve(args, _client) -> int:
    import uvicorn
    uvicorn.run("planescatter.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="planescatter",
        description="Scattering matrix of a delta interaction on a deformed plane")
    p.add_argument("--server", default=None,
                   help="base URL of a running service (default: in-process)")
    p.add_argument("--threads", type=int, default=None,
                   help="advisory BLAS/OpenMP thread cap")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="JSON config path")
        sp.add_argument("--out", default=None, help="output directory")

    for name, fn in [("smatrix", cmd_smatrix), ("scaling", cmd_scaling),
                     ("lap1d", cmd_lap1d), ("resolvent-diff", cmd_resolvent_diff)]:
        sp = sub.add_parser(name)
        common(sp)
        sp.set_defaults(func=fn)
    sp = sub.add_parser("selftest")
    common(sp)
    sp.add_argument("--diagnostic-sign-flip", action="store_true",
                    help="also check that the wrong-sign scattering matrix "
                         "fails unitarity")
    sp.set_defaults(func=cmd_selftest)
    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(args.threads))
    client = ServiceClient(args.server)
    try:
        return args.func(args, client)
    except ConfigurationError as exc:
        print(f"error [configuration]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except httpx.HTTPError as exc:
        print(f"error [transport]: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
