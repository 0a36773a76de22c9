"""Three-party driver: data source, user and service provider.

Every stage takes and returns wire bytes so the HTTP service can relay them
unchanged.
"""
from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import release_protocol as rp
from .bdop_commit import BoundProofParams, CommitParams
from .ckks_he import Ciphertext, KeySet, deserialize_ct, encode_ints, encrypt, serialize_ct
from .crisp_circuit import (
    TransferBundle, TransferContext, pack_messages, prove_transfer, unpack_messages, verify_transfer,
)
from .keystore import source_keys, user_keys
from .signing import SignerKeys
from .usecases import (
    UseCaseConfig, canonical, cleartext, compute_usecase, make_config, relative_error, source_sign, synth,
)

TAMPER_MODES = ("none", "flip", "noise", "forge", "mutate")
DEFAULT_POINTS = {"smart_meter_sum": 16, "disease_weighted_sum": 869, "activity_distance": 16}


@dataclass
class Agents:
    cfg: UseCaseConfig
    keys: KeySet
    source: SignerKeys
    ctx: TransferContext

    @property
    def source_pub(self) -> bytes:
        return self.source.public_bytes()


_CTX: dict = {}


def setup(use_case: str, kappa: int = 128, iterations: int | None = None, ric: float = 1.0, batch: int = 1,
          key_dir: Path | None = None) -> Agents:
    kind = canonical(use_case)
    if kind != "smart_meter_sum" and batch != 1:
        raise ValueError("batching applies to smart metering only")
    cfg = make_config(kind, batch=batch)
    he = cfg.he
    keys = user_keys(he, key_dir)
    key = (kind, batch, kappa, iterations, ric, id(keys))
    ctx = _CTX.get(key)
    if ctx is None:
        cp = CommitParams(he.ring)
        ctx = TransferContext(he, keys.pk, cp, BoundProofParams(N=he.N), cfg.layout, kappa=kappa,
                              t=iterations, ric=ric)
        _CTX[key] = ctx
    return Agents(cfg, keys, source_keys(key_dir), ctx)


def _seed(seed: int | None, label: str) -> bytes:
    base = b"%d" % seed if seed is not None else np.random.default_rng().bytes(16)
    return hashlib.sha256(b"crisp-run|" + base + b"|" + label.encode()).digest()


def n_points_of(cfg: UseCaseConfig, n_msgs: int) -> int:
    if cfg.kind == "activity_distance":
        return n_msgs
    return n_msgs * cfg.layout.n_data


# ---------------------------------------------------------------- stages

def collect(ag: Agents, n_points: int | None = None, seed: int | None = None) -> tuple[bytes, float]:
    """Data source: synthesize, validate and sign. Returns (M0 list bytes, cleartext result)."""
    kind = ag.cfg.kind
    n = DEFAULT_POINTS[kind] if n_points is None else n_points
    if kind == "disease_weighted_sum":
        ds = synth(kind, 1, seed=seed or 0, n_snps=ag.cfg.layout.n_data)
    else:
        ds = synth(kind, n, seed=seed or 0)
    msgs = source_sign(ds, ag.cfg, ag.source, seed=None if seed is None else seed + 1)
    data = [v for m in msgs for v in ag.cfg.layout.data_values(m.values())]
    return pack_messages(msgs), cleartext(kind, data, ag.cfg)


def transfer(ag: Agents, m0: bytes, seed: int | None = None, tamper: str = "none") -> tuple[bytes, dict]:
    """User: encrypt and prove. `tamper` selects a cheating behaviour for the test harness."""
    msgs = unpack_messages(m0)
    cheat = tamper if tamper in ("flip", "noise") else None
    stats: dict = {}
    t0 = time.perf_counter()
    bundle = prove_transfer(ag.ctx, msgs, ag.source_pub, _seed(seed, "transfer"), cheat=cheat, stats=stats)
    stats["t_prove_ms"] = 1000 * (time.perf_counter() - t0)
    if tamper == "mutate":
        z = bytearray(bundle.zk_proof)
        rng = np.random.default_rng(seed)
        pos = int(rng.integers(len(z) // 2, len(z)))
        z[pos] ^= 1 << int(rng.integers(0, 8))
        bundle.zk_proof = bytes(z)
    stats["zk_proof_bytes"] = len(bundle.zk_proof)
    stats["bound_proof_bytes"] = len(bundle.bound_proof)
    return bundle.to_bytes(), stats


def verify(ag: Agents, bundle_bytes: bytes) -> tuple[bool, list, float]:
    """Provider: check signatures, the circuit proof and the bound proof."""
    reasons: list = []
    t0 = time.perf_counter()
    try:
        bundle = TransferBundle.from_bytes(bundle_bytes, ag.ctx.he.ring, ag.ctx.cp)
        ok = verify_transfer(ag.ctx, bundle, ag.source_pub, reasons)
    except ValueError as e:
        ok = False
        reasons.append(f"malformed: {e}")
    return ok, reasons, 1000 * (time.perf_counter() - t0)


def compute(ag: Agents, bundle_bytes: bytes) -> bytes:
    bundle = TransferBundle.from_bytes(bundle_bytes, ag.ctx.he.ring, ag.ctx.cp)
    ct = compute_usecase(bundle.ct, ag.cfg, ag.keys, n_points_of(ag.cfg, bundle.n_msgs))
    return serialize_ct(ct)


def release(ag: Agents, ct_bytes: bytes, seed: int | None = None, tamper: str = "none") -> tuple[float | None, list]:
    """Run the four release messages between provider and user, serialized on the wire."""
    he = ag.cfg.he
    ring = he.ring
    ct = deserialize_ct(ct_bytes, ring)
    s = _seed(seed, "release")
    m1, sp = rp.sp_blind_init(ct, ag.cfg.psi, he, s)
    m1 = rp.Msg1.from_bytes(m1.to_bytes(), ring)
    m2, us = rp.user_decrypt_commit(m1, ag.keys.s, he, seed=s + b"|u")
    if tamper == "forge":
        # the user reports a different result and recommits before the blinding is opened
        us.m_hat = us.m_hat.add_const(int(ct.scale) * 1000)
        us.c1 = rp.HashCommitment.commit(rp._pair_bytes(us.m_hat, us.m_hat_b))
        m2 = rp.Msg2(us.c1.digest)
    rp.sp_receive_commit(sp, rp.Msg2.from_bytes(m2.to_bytes()))
    m3 = rp.Msg3.from_bytes(rp.sp_open_blind(sp).to_bytes(), ring)
    if tamper == "forge":
        # a cheating user skips its own check of the blinding and opens anyway
        us._move("blind_opened")
    elif not rp.user_verify_blind(us, m3):
        return None, sp.trace + ["user rejected blinding"]
    m4 = rp.Msg4.from_bytes(rp.user_open_result(us).to_bytes(), ring)
    return rp.sp_verify_result(sp, m4), sp.trace


# ---------------------------------------------------------------- end to end

@dataclass
class Report:
    use_case: str
    n_points: int
    mean_abs_rel_err: float | None
    proof_bytes: int
    t_prove_ms: float
    t_verify_ms: float
    accepted: bool
    iterations: int = 0
    tamper: str = "none"
    zk_proof_bytes: int = 0
    bound_proof_bytes: int = 0
    bundle_bytes: int = 0
    expected: float | None = None
    result: float | None = None
    reasons: list = field(default_factory=list)
    records: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def run_pipeline(use_case: str, n_points: int | None = None, kappa: int = 128, iterations: int | None = None,
                 ric: float = 1.0, batch: int = 1, tamper: str = "none", seed: int | None = None,
                 key_dir: Path | None = None) -> Report:
    """collect -> transfer -> verify -> compute -> release."""
    if tamper not in TAMPER_MODES:
        raise ValueError(f"tamper must be one of {TAMPER_MODES}")
    ag = setup(use_case, kappa, iterations, ric, batch, key_dir)
    m0, expected = collect(ag, n_points, seed)
    n_msgs = len(unpack_messages(m0))
    bundle, st = transfer(ag, m0, seed, tamper)
    ok, reasons, t_ver = verify(ag, bundle)
    rep = Report(ag.cfg.kind, n_points_of(ag.cfg, n_msgs), None, st["zk_proof_bytes"] + st["bound_proof_bytes"],
                 st["t_prove_ms"], t_ver, False, ag.ctx.iterations, tamper, st["zk_proof_bytes"],
                 st["bound_proof_bytes"], len(bundle), expected, None, reasons)
    if not ok:
        return rep
    res, trace = release(ag, compute(ag, bundle), seed, tamper)
    if res is None:
        rep.reasons = reasons + ["release rejected"]
        return rep
    err = relative_error(expected, res)
    rep.accepted, rep.result, rep.mean_abs_rel_err = True, res, abs(err)
    rep.records = [{"record": 0, "expected": expected, "result": res, "rel_err": err}]
    return rep


def accuracy_run(use_case: str, records: int = 100, n_points: int | None = None, seed: int = 0,
                 key_dir: Path | None = None) -> list[dict]:
    """Encrypt, compute and release many synthetic records without transfer proofs.

    The ciphertexts are produced exactly as the honest prover does, so this
    isolates the accuracy of computation and release.
    """
    ag = setup(use_case, key_dir=key_dir)
    cfg, he = ag.cfg, ag.cfg.he
    out = []
    for i in range(records):
        s = seed * 100003 + i
        if cfg.kind == "disease_weighted_sum":
            ds = synth(cfg.kind, 1, seed=s, n_snps=cfg.layout.n_data)
        else:
            ds = synth(cfg.kind, n_points or {"smart_meter_sum": 1024, "activity_distance": 256}[cfg.kind], seed=s)
        msgs = source_sign(ds, cfg, ag.source, seed=s)
        data = [v for m in msgs for v in cfg.layout.data_values(m.values())]
        slots = cfg.layout.slot_positions(len(msgs), he.slots)
        ct = encrypt(encode_ints(data, he, slots=slots), ag.keys.pk, _seed(s, "acc"), he)
        ct_psi = compute_usecase(ct, cfg, ag.keys, n_points_of(cfg, len(msgs)))
        res, _ = release(ag, serialize_ct(ct_psi), s)
        m = cleartext(cfg.kind, data, cfg)
        out.append({"record": i, "expected": m, "result": res, "rel_err": relative_error(m, res)})
    return out
