"""The transfer statement: ciphertext, noise commitment and message digests in one circuit.

The user proves that the ciphertext encrypts exactly the values whose signed
SHA-256 digests it forwards. Encryption and commitment are affine in the
secrets (local gates); the digests need the values as bits, which the
conversion block extracts from the same arithmetic shares.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import zkb_engine as zk
from .bdop_commit import (
    BoundProofParams, CommitParams, Commitment, bound_prove, bound_verify, commit_small,
    deserialize_bound_proof, sample_randomness, serialize_bound_proof,
)
from .ckks_he import (
    Ciphertext, EncNoise, HeParams, deserialize_ct, encode_ints, encrypt_with, sample_enc_noise,
    serialize_ct,
)
from .gadgets import commitment_block, conversion_block, encryption_block, sha256_circuit, sha_blocks
from .ring_core import RingElem, RingParams, prime_column
from .signing import SignerKeys, verify_sig
from .zkb_engine import ZERO, CircuitBuilder, CircuitDesc

M0_MAGIC = b"CRM0"
M1_MAGIC = b"CRM1"
WIRE_VERSION = 1


class TransferError(ValueError):
    pass


# ---------------------------------------------------------------- message layouts

@dataclass(frozen=True)
class Field:
    name: str
    bits: int
    data: bool = False


@dataclass(frozen=True)
class MessageLayout:
    """Canonical big-endian bit layout of a signed message.

    Fields are concatenated MSB first and zero-padded to a whole byte, so the
    digest is a plain SHA-256 over bytes. `packing` says how data values map to
    slots: contiguous per message, or split (field j fills its own slot block).
    """
    name: str
    fields: tuple
    packing: str = "contiguous"

    @cached_property
    def raw_bits(self) -> int:
        return sum(f.bits for f in self.fields)

    @cached_property
    def padded_bits(self) -> int:
        return 8 * math.ceil(self.raw_bits / 8)

    @property
    def nbytes(self) -> int:
        return self.padded_bits // 8

    @cached_property
    def data_fields(self) -> list:
        return [f for f in self.fields if f.data]

    @property
    def n_data(self) -> int:
        return len(self.data_fields)

    @cached_property
    def aux_bits(self) -> int:
        return sum(f.bits for f in self.fields if not f.data)

    @property
    def blocks(self) -> int:
        return sha_blocks(self.padded_bits)

    def encode(self, values: Sequence[int]) -> bytes:
        if len(values) != len(self.fields):
            raise TransferError(f"{self.name}: expected {len(self.fields)} values, got {len(values)}")
        acc = 0
        for f, v in zip(self.fields, values):
            v = int(v)
            if not 0 <= v < (1 << f.bits):
                raise TransferError(f"{self.name}: field {f.name}={v} does not fit {f.bits} bits")
            acc = (acc << f.bits) | v
        acc <<= self.padded_bits - self.raw_bits
        return acc.to_bytes(self.nbytes, "big")

    def decode(self, msg: bytes) -> list[int]:
        if len(msg) != self.nbytes:
            raise TransferError("message length does not match layout")
        acc = int.from_bytes(msg, "big") >> (self.padded_bits - self.raw_bits)
        out = []
        for f in reversed(self.fields):
            out.append(acc & ((1 << f.bits) - 1))
            acc >>= f.bits
        return out[::-1]

    def data_values(self, values: Sequence[int]) -> list[int]:
        return [int(v) for f, v in zip(self.fields, values) if f.data]

    def slot_positions(self, n_msgs: int, slots: int) -> list[int]:
        nd = self.n_data
        if self.packing == "contiguous":
            if n_msgs * nd > slots:
                raise TransferError("data does not fit in one ciphertext")
            return list(range(n_msgs * nd))
        block = slots // nd
        if n_msgs > block:
            raise TransferError("data does not fit in one ciphertext")
        return [j * block + i for i in range(n_msgs) for j in range(nd)]


def smart_layout(batch: int = 1) -> MessageLayout:
    f = [Field("nonce", 128), Field("uid", 16), Field("timestamp", 32)]
    f += [Field(f"reading{j}" if batch > 1 else "reading", 16, True) for j in range(batch)]
    return MessageLayout("smart" if batch == 1 else f"smart_b{batch}", tuple(f))


def disease_layout(n_snps: int = 869) -> MessageLayout:
    f = [Field("uid", 16), Field("nonce", 128)] + [Field(f"snp{j}", 2, True) for j in range(n_snps)]
    return MessageLayout(f"disease_{n_snps}", tuple(f))


def activity_layout() -> MessageLayout:
    f = (Field("uid", 16), Field("nonce", 128), Field("timestamp", 32),
         Field("easting", 24, True), Field("northing", 24, True))
    # Eastings fill slots [0, N/4), Northings [N/4, N/2)
    return MessageLayout("activity", f, packing="split")


def get_layout(name: str) -> MessageLayout:
    if name == "smart":
        return smart_layout()
    if name.startswith("smart_b"):
        return smart_layout(int(name[7:]))
    if name.startswith("disease_"):
        return disease_layout(int(name[8:]))
    if name == "activity":
        return activity_layout()
    raise TransferError(f"unknown layout {name}")


# ---------------------------------------------------------------- M0

@dataclass(frozen=True)
class SourceMessage:
    layout: str
    msg: bytes
    digest: bytes
    signature: bytes

    @classmethod
    def create(cls, layout: MessageLayout, values: Sequence[int], signer: SignerKeys) -> "SourceMessage":
        msg = layout.encode(values)
        d = hashlib.sha256(msg).digest()
        return cls(layout.name, msg, d, signer.sign(d))

    def values(self) -> list[int]:
        return get_layout(self.layout).decode(self.msg)

    def verify(self, source_pub) -> bool:
        return hashlib.sha256(self.msg).digest() == self.digest and verify_sig(source_pub, self.digest, self.signature)

    def to_bytes(self) -> bytes:
        name = self.layout.encode()
        return b"".join([M0_MAGIC, struct.pack(">BB", WIRE_VERSION, len(name)), name,
                         struct.pack(">I", len(self.msg)), self.msg, self.digest,
                         struct.pack(">H", len(self.signature)), self.signature])

    @classmethod
    def from_bytes(cls, data: bytes) -> tuple["SourceMessage", bytes]:
        if data[:4] != M0_MAGIC:
            raise TransferError("bad M0 magic")
        ver, nl = struct.unpack(">BB", data[4:6])
        if ver != WIRE_VERSION:
            raise TransferError("unsupported M0 version")
        pos = 6
        name = data[pos:pos + nl].decode(); pos += nl
        (ml,) = struct.unpack(">I", data[pos:pos + 4]); pos += 4
        msg = data[pos:pos + ml]; pos += ml
        dg = data[pos:pos + 32]; pos += 32
        (sl,) = struct.unpack(">H", data[pos:pos + 2]); pos += 2
        sig = data[pos:pos + sl]; pos += sl
        if len(sig) != sl or len(dg) != 32:
            raise TransferError("truncated M0")
        return cls(name, msg, dg, sig), data[pos:]


def pack_messages(msgs: Sequence[SourceMessage]) -> bytes:
    return struct.pack(">I", len(msgs)) + b"".join(m.to_bytes() for m in msgs)


def unpack_messages(data: bytes) -> list[SourceMessage]:
    (n,) = struct.unpack(">I", data[:4])
    rest = data[4:]
    out = []
    for _ in range(n):
        m, rest = SourceMessage.from_bytes(rest)
        out.append(m)
    if rest:
        raise TransferError("trailing bytes after messages")
    return out


# ---------------------------------------------------------------- public context

@dataclass
class TransferContext:
    """Everything both sides agree on before a transfer."""
    he: HeParams
    pk: tuple                       # (b, a) ring elements at the top level
    cp: CommitParams
    bp: BoundProofParams
    layout: MessageLayout
    kappa: int = 128
    t: int | None = None            # ZKB++ iterations, default from kappa
    ric: float = 1.0                # fraction of messages whose hashes are checked
    _circuits: dict = field(default_factory=dict, repr=False)

    @property
    def iterations(self) -> int:
        return zk.iterations(self.kappa) if self.t is None else self.t

    def pk_bytes(self) -> bytes:
        return b"".join(e.res.astype(">i8").tobytes() for e in self.pk)


def ric_indices(ct_bytes: bytes, pk_bytes: bytes, n_msgs: int, rho: float) -> list[int]:
    """First ceil(rho*n) distinct indices drawn from H(ct || "RIC" || pk) by rejection sampling."""
    if not 0 < rho <= 1:
        raise TransferError("RIC fraction must be in (0, 1]")
    k = min(n_msgs, math.ceil(round(rho * n_msgs, 9)))
    if k == n_msgs:
        return list(range(n_msgs))
    seed = hashlib.sha256(ct_bytes + b"RIC" + pk_bytes).digest()
    width = max(1, (n_msgs - 1).bit_length())
    nbytes = (width + 7) // 8
    out, seen, ctr = [], set(), 0
    while len(out) < k:
        block = hashlib.sha256(seed + ctr.to_bytes(4, "big")).digest()
        ctr += 1
        for i in range(0, 32 - nbytes + 1, nbytes):
            v = int.from_bytes(block[i:i + nbytes], "big") & ((1 << width) - 1)
            if v < n_msgs and v not in seen:
                seen.add(v)
                out.append(v)
                if len(out) == k:
                    break
    return sorted(out)


@dataclass
class CircuitInfo:
    circuit: CircuitDesc
    n_zero: int                     # public zero bits after the digests
    b_hash: int                     # AND gates in SHA blocks
    b_a2b: int                      # AND gates in conversion blocks


def build_transfer_circuit(ctx: TransferContext, n_msgs: int, challenged: Sequence[int]) -> CircuitInfo:
    key = (n_msgs, tuple(challenged))
    hit = ctx._circuits.get(key)
    if hit is not None:
        return hit
    he, layout = ctx.he, ctx.layout
    N = he.N
    b = CircuitBuilder(he.ring.primes)
    n_vals = n_msgs * layout.n_data
    x = b.a_input(n_vals)
    r0, e0, e1 = b.a_input(N), b.a_input(N), b.a_input(N)
    rc = [b.a_input(N) for _ in range(ctx.cp.k)]
    slots = layout.slot_positions(n_msgs, he.slots)
    c0, c1 = encryption_block(b, he, ctx.pk, x, slots, r0, e0, e1)
    com = commitment_block(b, ctx.cp, [r0, e0, e1], rc)
    for w in (c0, c1, *com):
        b.a_output(w)
    digests, zeros = [], []
    and_before = 0
    b_hash = b_a2b = 0
    for i in challenged:
        bits = []
        j = 0
        for f in layout.fields:
            if f.data:
                before = b.c.n_and
                vb, zs = conversion_block(b, x, i * layout.n_data + j, f.bits)
                b_a2b += b.c.n_and - before
                zeros += zs
                bits += vb[::-1]
                j += 1
            else:
                bits += b.b_inputs(f.bits)
        bits += [ZERO] * (layout.padded_bits - layout.raw_bits)
        before = b.c.n_and
        digests += sha256_circuit(b, bits)
        b_hash += b.c.n_and - before
    for w in digests + zeros:
        b.b_output(w)
    info = CircuitInfo(b.build(), len(zeros), b_hash, b_a2b)
    zk.compile_circuit(info.circuit)
    if len(ctx._circuits) > 4:
        ctx._circuits.clear()
    ctx._circuits[key] = info
    return info


# ---------------------------------------------------------------- M1

@dataclass
class TransferBundle:
    layout: str
    ct: Ciphertext
    com: Commitment
    zk_proof: bytes
    bound_proof: bytes
    digests: list
    signatures: list
    challenged: list
    ric: float = 1.0

    @property
    def n_msgs(self) -> int:
        return len(self.digests)

    def to_bytes(self) -> bytes:
        name = self.layout.encode()
        sections = [serialize_ct(self.ct), self.com.to_bytes(), self.zk_proof, self.bound_proof,
                    b"".join(self.digests),
                    b"".join(struct.pack(">H", len(s)) + s for s in self.signatures),
                    struct.pack(">I", len(self.challenged)) + b"".join(struct.pack(">I", i) for i in self.challenged)]
        out = [M1_MAGIC, struct.pack(">BB", WIRE_VERSION, len(name)), name,
               struct.pack(">IH", len(self.digests), int(round(self.ric * 10000)))]
        for s in sections:
            out += [struct.pack(">Q", len(s)), s]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, ring: RingParams, cp: CommitParams) -> "TransferBundle":
        if data[:4] != M1_MAGIC:
            raise TransferError("bad M1 magic")
        ver, nl = struct.unpack(">BB", data[4:6])
        if ver != WIRE_VERSION:
            raise TransferError("unsupported M1 version")
        pos = 6
        name = data[pos:pos + nl].decode(); pos += nl
        n, ric = struct.unpack(">IH", data[pos:pos + 6]); pos += 6
        secs = []
        for _ in range(7):
            (ln,) = struct.unpack(">Q", data[pos:pos + 8]); pos += 8
            secs.append(data[pos:pos + ln]); pos += ln
        if pos != len(data):
            raise TransferError("trailing bytes in M1")
        ct = deserialize_ct(secs[0], ring)
        com = commitment_from_bytes(secs[1], cp)
        dg = [secs[4][32 * i:32 * i + 32] for i in range(n)]
        sigs, p = [], 0
        for _ in range(n):
            (sl,) = struct.unpack(">H", secs[5][p:p + 2]); p += 2
            sigs.append(secs[5][p:p + sl]); p += sl
        (nc,) = struct.unpack(">I", secs[6][:4])
        ch = [struct.unpack(">I", secs[6][4 + 4 * i:8 + 4 * i])[0] for i in range(nc)]
        return cls(name, ct, com, secs[2], secs[3], dg, sigs, ch, ric / 10000)


def commitment_from_bytes(data: bytes, cp: CommitParams) -> Commitment:
    ring = cp.ring
    per = ring.L * ring.N * 8
    cnt = cp.n + cp.l_c
    if len(data) != cnt * per:
        raise TransferError("commitment length mismatch")
    pc = prime_column(ring.primes)
    elems = []
    for i in range(cnt):
        res = np.frombuffer(data[i * per:(i + 1) * per], dtype=">i8").astype(np.int64).reshape(ring.L, ring.N)
        if np.any((res < 0) | (res >= pc)):
            raise TransferError("commitment residue out of range")
        elems.append(RingElem(ring, res))
    return Commitment(tuple(elems[: cp.n]), tuple(elems[cp.n:]))


def _bound_context(ct: Ciphertext, com: Commitment) -> bytes:
    return hashlib.sha256(b"crisp-bound|" + serialize_ct(ct) + com.to_bytes()).digest()


def _statement(ctx: TransferContext, info: CircuitInfo, ct: Ciphertext, com: Commitment,
               digests: Sequence[bytes], challenged: Sequence[int]):
    y_a = [ct.c0.res, ct.c1.res] + [e.res for e in com.elems()]
    y_b = []
    for i in challenged:
        d = digests[i]
        y_b += [(d[k // 8] >> (7 - k % 8)) & 1 for k in range(256)]
    y_b += [0] * info.n_zero
    return y_a, y_b


def prove_transfer(ctx: TransferContext, messages: Sequence[SourceMessage], source_pub, seed: bytes,
                   cheat: str | None = None, stats: dict | None = None) -> TransferBundle:
    """Encrypt the messages' data and prove the transfer statement.

    `cheat` drives the tamper harness: "flip" encrypts a changed value while
    keeping the signed digest, "noise" plants an oversized encryption noise.
    """
    import time
    layout = ctx.layout
    for m in messages:
        if m.layout != layout.name:
            raise TransferError("message layout does not match the context")
        if not m.verify(source_pub):
            raise TransferError("source signature does not verify")
    he = ctx.he
    n_msgs = len(messages)
    if n_msgs == 0:
        raise TransferError("no messages")
    rows = [m.values() for m in messages]
    data = [v for r in rows for v in layout.data_values(r)]
    if cheat == "flip":
        # the user changes one signed value before encrypting it
        data = list(data)
        data[0] = (data[0] + 1) % (1 << layout.data_fields[0].bits)
    slots = layout.slot_positions(n_msgs, he.slots)
    pt = encode_ints(data, he, slots=slots)
    noise = sample_enc_noise(he, seed + b"|enc")
    if cheat == "noise":
        e0 = noise.e0.copy()
        e0[0] = he.ring.q // 8
        noise = EncNoise(noise.r0, e0, noise.e1)
    ct = encrypt_with(pt, ctx.pk, noise)
    m_small = np.stack([noise.r0, noise.e0, noise.e1])
    r_c = sample_randomness(ctx.cp, seed + b"|com")
    com = commit_small(ctx.cp, m_small, r_c)
    ct_bytes = serialize_ct(ct)
    challenged = ric_indices(ct_bytes, ctx.pk_bytes(), n_msgs, ctx.ric)
    t0 = time.perf_counter()
    info = build_transfer_circuit(ctx, n_msgs, challenged)
    t1 = time.perf_counter()
    primes = he.ring.primes
    pc = prime_column(primes)
    a_in = [np.asarray(data, dtype=np.int64)[None, :] % pc]
    a_in += [np.asarray(v, dtype=np.int64)[None, :] % pc for v in (noise.r0, noise.e0, noise.e1)]
    a_in += [np.asarray(r, dtype=np.int64)[None, :] % pc for r in r_c]
    b_in = []
    for i in challenged:
        for f, v in zip(layout.fields, rows[i]):
            if not f.data:
                b_in += [(int(v) >> (f.bits - 1 - k)) & 1 for k in range(f.bits)]
    digests = [m.digest for m in messages]
    y_a, y_b = _statement(ctx, info, ct, com, digests, challenged)
    proof = zk.prove(info.circuit, a_in, b_in, y_a, y_b, kappa=ctx.kappa, seed=seed + b"|zk",
                     t=ctx.iterations, forge=(cheat == "flip"))
    t2 = time.perf_counter()
    bproof = bound_prove(ctx.cp, ctx.bp, m_small, r_c, com, _bound_context(ct, com), rng_seed=seed + b"|bp",
                         enforce=(cheat != "noise"))
    t3 = time.perf_counter()
    if stats is not None:
        stats.update(build_s=t1 - t0, zk_prove_s=t2 - t1, bound_prove_s=t3 - t2,
                     n_and=info.circuit.n_and, b_hash=info.b_hash, b_a2b=info.b_a2b)
    return TransferBundle(layout.name, ct, com, proof.to_bytes(), serialize_bound_proof(bproof, ctx.bp),
                          digests, [m.signature for m in messages], list(challenged), ctx.ric)


def verify_transfer(ctx: TransferContext, bundle: TransferBundle, source_pub, reasons: list | None = None) -> bool:
    def fail(why):
        if reasons is not None:
            reasons.append(why)
        return False

    he = ctx.he
    if bundle.layout != ctx.layout.name or abs(bundle.ric - ctx.ric) > 1e-9:
        return fail("context mismatch")
    n = bundle.n_msgs
    if n == 0 or len(bundle.signatures) != n:
        return fail("malformed bundle")
    for d, s in zip(bundle.digests, bundle.signatures):
        if not verify_sig(source_pub, d, s):
            return fail("signature")
    ct = bundle.ct
    if ct.level != he.ring.top or ct.scale != (1 << he.delta_e_bits):
        return fail("ciphertext level or scale")
    try:
        layout_ok = len(ctx.layout.slot_positions(n, he.slots)) == n * ctx.layout.n_data
    except TransferError:
        layout_ok = False
    if not layout_ok:
        return fail("packing")
    challenged = ric_indices(serialize_ct(ct), ctx.pk_bytes(), n, ctx.ric)
    if challenged != list(bundle.challenged):
        return fail("ric challenge")
    info = build_transfer_circuit(ctx, n, challenged)
    y_a, y_b = _statement(ctx, info, ct, bundle.com, bundle.digests, challenged)
    try:
        proof = zk.ZkProof.from_bytes(bundle.zk_proof, info.circuit)
    except (zk.CircuitError, ValueError, struct.error):
        return fail("zk proof format")
    if proof.t != ctx.iterations or proof.kappa != ctx.kappa:
        return fail("zk proof parameters")
    if not zk.verify(info.circuit, y_a, y_b, proof):
        return fail("zk proof")
    try:
        bp = deserialize_bound_proof(bundle.bound_proof, ctx.bp)
    except (ValueError, struct.error):
        return fail("bound proof format")
    if not bound_verify(ctx.cp, ctx.bp, bundle.com, bp, _bound_context(ct, bundle.com)):
        return fail("bound proof")
    return True
