"""Command-line client. Talks to the service in-process, or to a uvicorn child with --two-process."""
from __future__ import annotations

import argparse
import base64
import contextlib
import json
import os
import socket
import subprocess
import sys
import time
import warnings
from pathlib import Path

import httpx

from .keystore import KEY_DIR_ENV

REPORT_FIELDS = ("use_case", "n_points", "mean_abs_rel_err", "proof_bytes", "t_prove_ms", "t_verify_ms", "accepted")


@contextlib.contextmanager
def service_client(two_process: bool = False, timeout: float = 3600.0):
    if not two_process:
        with warnings.catch_warnings():
            # starlette's test client warns about its httpx backend on import
            warnings.simplefilter("ignore")
            from fastapi.testclient import TestClient
        from .service import app
        with TestClient(app) as c:
            yield c
        return
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    proc = subprocess.Popen([sys.executable, "-m", "uvicorn", "crisp.service:app", "--host", "127.0.0.1",
                             "--port", str(port), "--log-level", "warning"], env=os.environ.copy())
    base = f"http://127.0.0.1:{port}"
    try:
        with httpx.Client(base_url=base, timeout=timeout) as c:
            for _ in range(300):
                if proc.poll() is not None:
                    raise RuntimeError("service process exited during startup")
                try:
                    if c.get("/health").status_code == 200:
                        break
                except httpx.TransportError:
                    pass
                time.sleep(0.1)
            else:
                raise RuntimeError("service did not come up")
            yield c
    finally:
        proc.terminate()
        try:
            proc.wait(10)
        except subprocess.TimeoutExpired:
            proc.kill()


def _params(a) -> dict:
    d = {"use_case": a.use_case, "kappa": a.kappa, "ric": a.ric, "batch": a.batch, "seed": a.seed}
    if a.iterations is not None:
        d["iterations"] = a.iterations
    return d


def _read_b64(path) -> str:
    return base64.b64encode(Path(path).read_bytes()).decode()


def _write_b64(path, s: str):
    Path(path).write_bytes(base64.b64decode(s))


def _post(c, path: str, body: dict) -> dict:
    r = c.post(path, json=body)
    if r.status_code != 200:
        try:
            detail = r.json().get("detail")
        except ValueError:
            detail = r.text
        raise SystemExit(f"error: {path} failed ({r.status_code}): {detail}")
    return r.json()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--use-case", default="smart",
                        help="smart | disease | activity (or the full names)")
    common.add_argument("--kappa", type=int, default=128)
    common.add_argument("--iterations", type=int, default=None, help="ZKB++ iterations (default from kappa)")
    common.add_argument("--ric", type=float, default=1.0, help="fraction of messages whose hashes are checked")
    common.add_argument("--batch", type=int, default=1, help="readings per signed message (smart metering)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--two-process", action="store_true", help="run the service in a separate process")
    common.add_argument("--report", type=Path, default=None, help="write the JSON result here")

    p = argparse.ArgumentParser(prog="crisp", description="Verifiable encrypted data transfer and computation",
                                epilog=f"Keys are stored under ${KEY_DIR_ENV} (default ~/.cache/crisp/keys).")
    sub = p.add_subparsers(dest="cmd", required=True)
    s = sub.add_parser("collect", parents=[common], help="synthesize and sign source data")
    s.add_argument("--points", type=int, default=None)
    s.add_argument("--out", type=Path, required=True)
    s = sub.add_parser("transfer", parents=[common], help="encrypt and prove")
    s.add_argument("--in", dest="inp", type=Path, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--tamper", default="none", choices=["none", "flip", "noise", "mutate"])
    s = sub.add_parser("verify", parents=[common], help="verify a transfer bundle")
    s.add_argument("--in", dest="inp", type=Path, required=True)
    s = sub.add_parser("compute", parents=[common], help="verify, then evaluate the use case")
    s.add_argument("--in", dest="inp", type=Path, required=True)
    s.add_argument("--out", type=Path, required=True)
    s = sub.add_parser("release", parents=[common], help="blinded release of a result ciphertext")
    s.add_argument("--in", dest="inp", type=Path, required=True)
    s.add_argument("--tamper", default="none", choices=["none", "forge"])
    s = sub.add_parser("estimate", parents=[common], help="analytic proof-size estimate")
    s.add_argument("--points", type=int, default=None)
    s.add_argument("--preprocessing", action="store_true")
    s = sub.add_parser("pipeline", parents=[common], help="collect, transfer, verify, compute and release")
    s.add_argument("--points", type=int, default=None)
    s.add_argument("--tamper", default="none", choices=["none", "flip", "noise", "forge", "mutate"])
    return p


def run(argv=None) -> tuple[int, dict]:
    a = build_parser().parse_args(argv)
    ok = True
    with service_client(a.two_process) as c:
        if a.cmd == "collect":
            r = _post(c, "/collect", {**_params(a), "n_points": a.points})
            _write_b64(a.out, r.pop("m0"))
            out = {**r, "out": str(a.out)}
        elif a.cmd == "transfer":
            r = _post(c, "/transfer", {**_params(a), "m0": _read_b64(a.inp), "tamper": a.tamper})
            _write_b64(a.out, r.pop("bundle"))
            out = {**r, "out": str(a.out)}
        elif a.cmd == "verify":
            out = _post(c, "/verify", {**_params(a), "bundle": _read_b64(a.inp)})
            ok = out["accepted"]
        elif a.cmd == "compute":
            r = _post(c, "/compute", {**_params(a), "bundle": _read_b64(a.inp)})
            _write_b64(a.out, r["ct"])
            out = {"out": str(a.out)}
        elif a.cmd == "release":
            out = _post(c, "/release", {**_params(a), "ct": _read_b64(a.inp), "tamper": a.tamper})
            ok = out["accepted"]
        elif a.cmd == "estimate":
            out = _post(c, "/estimate", {"use_case": a.use_case, "n_points": a.points, "ric": a.ric,
                                         "batch": a.batch, "kappa": a.kappa, "preprocessing": a.preprocessing})
        else:
            out = _post(c, "/pipeline", {**_params(a), "n_points": a.points, "tamper": a.tamper})
            ok = out["accepted"]
    if a.report is not None:
        a.report.write_text(json.dumps(out, indent=2))
    return (0 if ok else 1), out


def main(argv=None):
    code, out = run(argv)
    if isinstance(out, dict) and "records" in out:
        shown = {k: out[k] for k in REPORT_FIELDS}
        shown["reasons"] = out.get("reasons", [])
    else:
        shown = out
    print(json.dumps(shown, indent=2))
    sys.exit(code)


if __name__ == "__main__":
    main()
