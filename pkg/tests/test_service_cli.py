import json

import numpy as np
import pytest

from crisp import keystore
from crisp.ckks_he import decrypt, encode_ints, encrypt
from crisp.cli import REPORT_FIELDS, build_parser, run, service_client
from crisp.usecases import make_config

FAST = ["--iterations", "4", "--seed", "1"]


def test_keystore_roundtrip(tmp_path):
    he = make_config("smart").he
    ks = keystore.user_keys(he, tmp_path, seed=b"ks")
    files = list(tmp_path.glob("he_*.npz"))
    assert len(files) == 1 and (files[0].stat().st_mode & 0o777) == 0o600
    back = keystore.load_keyset(he, files[0])
    assert back.s == ks.s and back.pk[1] == ks.pk[1] and set(back.rot_keys) == set(ks.rot_keys)
    ct = encrypt(encode_ints([42], he), back.pk, b"x", he)
    assert decrypt(ct, ks.s).poly.res.shape == (he.ring.L, he.N)
    with pytest.raises(ValueError):
        keystore.load_keyset(make_config("disease").he, files[0])
    src = keystore.source_keys(tmp_path)
    assert keystore.source_keys(tmp_path).public_bytes() == src.public_bytes()


def test_key_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv(keystore.KEY_DIR_ENV, str(tmp_path / "k"))
    assert keystore.key_dir() == tmp_path / "k" and (tmp_path / "k").is_dir()


def test_parser_flags():
    a = build_parser().parse_args(["pipeline", "--use-case", "activity", "--kappa", "64", "--iterations", "5",
                                   "--ric", "0.5", "--batch", "1", "--tamper", "flip", "--seed", "3",
                                   "--two-process", "--report", "r.json"])
    assert (a.use_case, a.kappa, a.iterations, a.ric, a.tamper, a.seed, a.two_process) == \
        ("activity", 64, 5, 0.5, "flip", 3, True)
    with pytest.raises(SystemExit):
        build_parser().parse_args(["pipeline", "--tamper", "bogus"])


def test_service_endpoints():
    with service_client() as c:
        assert c.get("/health").json() == {"status": "ok"}
        assert c.post("/collect", json={"use_case": "median"}).status_code == 422
        assert c.post("/transfer", json={"m0": "!!", "iterations": 4}).status_code == 422
        r = c.post("/collect", json={"use_case": "smart", "n_points": 2, "seed": 1, "iterations": 4})
        assert r.status_code == 200 and r.json()["n_msgs"] == 2
        m0 = r.json()["m0"]
        t = c.post("/transfer", json={"m0": m0, "seed": 1, "iterations": 4}).json()
        v = c.post("/verify", json={"bundle": t["bundle"], "iterations": 4}).json()
        assert v["accepted"], v
        bad = c.post("/transfer", json={"m0": m0, "seed": 1, "iterations": 4, "tamper": "flip"}).json()
        assert c.post("/compute", json={"bundle": bad["bundle"], "iterations": 4}).status_code == 409
        ct = c.post("/compute", json={"bundle": t["bundle"], "iterations": 4}).json()["ct"]
        rel = c.post("/release", json={"ct": ct, "seed": 2, "iterations": 4}).json()
        assert rel["accepted"] and abs(rel["result"] - r.json()["expected"]) < 5
        forged = c.post("/release", json={"ct": ct, "seed": 2, "iterations": 4, "tamper": "forge"}).json()
        assert not forged["accepted"]
        est = c.post("/estimate", json={"use_case": "smart"}).json()
        assert abs(est["mb"] / 643.4 - 1) < 0.01


def test_cli_stages(tmp_path):
    m0, bundle, ct = tmp_path / "m0.bin", tmp_path / "b.bin", tmp_path / "ct.bin"
    code, out = run(["collect", "--points", "2", "--out", str(m0)] + FAST)
    assert code == 0 and m0.stat().st_size > 0
    code, out = run(["transfer", "--in", str(m0), "--out", str(bundle)] + FAST)
    assert code == 0 and out["proof_bytes"] > 0
    code, out = run(["verify", "--in", str(bundle)] + FAST)
    assert code == 0 and out["accepted"]
    code, _ = run(["compute", "--in", str(bundle), "--out", str(ct)] + FAST)
    assert code == 0
    code, out = run(["release", "--in", str(ct)] + FAST)
    assert code == 0 and out["accepted"]
    code, out = run(["estimate", "--use-case", "activity", "--ric", "0.2"])
    assert code == 0 and out["checked_msgs"] == 410


def test_cli_pipeline_report(tmp_path):
    rep = tmp_path / "report.json"
    code, out = run(["pipeline", "--points", "3", "--report", str(rep)] + FAST)
    data = json.loads(rep.read_text())
    assert code == 0 and data["accepted"]
    assert all(k in data for k in REPORT_FIELDS)
    assert data["n_points"] == 3 and data["mean_abs_rel_err"] < 1e-2
    code, out = run(["pipeline", "--points", "3", "--tamper", "noise"] + FAST)
    assert code == 1 and not out["accepted"] and "bound proof" in out["reasons"]


def test_cli_reports_bad_input(tmp_path):
    m0 = tmp_path / "m0.bin"
    m0.write_bytes(b"junk")
    with pytest.raises(SystemExit, match="422"):
        run(["transfer", "--in", str(m0), "--out", str(tmp_path / "x")] + FAST)


def test_two_process_pipeline(tmp_path):
    rep = tmp_path / "r.json"
    code, out = run(["pipeline", "--points", "2", "--two-process", "--report", str(rep)] + FAST)
    assert code == 0 and json.loads(rep.read_text())["accepted"]


def test_module_entry_point():
    import subprocess
    import sys
    r = subprocess.run([sys.executable, "-m", "crisp", "estimate", "--use-case", "disease"],
                       capture_output=True, text=True, timeout=300)
    assert r.returncode == 0 and json.loads(r.stdout)["n_msgs"] == 1
