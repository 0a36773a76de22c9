import dataclasses

import numpy as np
import pytest

from crisp.bdop_commit import BoundProofParams, CommitParams
from crisp.ckks_he import HeParams, decode_ints, decrypt, keygen
from crisp.crisp_circuit import (
    SourceMessage, TransferBundle, TransferContext, TransferError, activity_layout, build_transfer_circuit,
    disease_layout, get_layout, pack_messages, prove_transfer, ric_indices, smart_layout, unpack_messages,
    verify_transfer,
)
from crisp.ring_core import RingParams
from crisp.signing import SignerKeys, verify_sig

RING = RingParams.make(2048, [23, 22])
T = 5


@pytest.fixture(scope="module")
def world():
    he = HeParams(RING, 18, 0, digit_bits=4)
    ks = keygen(he, b"k", rotations=[])
    ctx = TransferContext(he, ks.pk, CommitParams(RING), BoundProofParams(N=2048), smart_layout(), t=T)
    sk = SignerKeys.generate(b"src")
    rng = np.random.default_rng(0)
    msgs = [SourceMessage.create(ctx.layout, [int.from_bytes(rng.bytes(16), "big"), 7, 1000 + i,
                                              int(rng.integers(0, 65536))], sk) for i in range(3)]
    return he, ks, ctx, sk, msgs


@pytest.fixture(scope="module")
def honest(world):
    he, ks, ctx, sk, msgs = world
    st: dict = {}
    return prove_transfer(ctx, msgs, sk.public_bytes(), b"seed", stats=st), st


def test_layout_sizes():
    assert smart_layout().raw_bits == 192
    assert smart_layout(16).raw_bits == 432 and smart_layout(16).n_data == 16
    assert disease_layout(869).raw_bits == 16 + 128 + 2 * 869
    assert activity_layout().raw_bits == 224 and activity_layout().aux_bits == 176
    assert get_layout("smart_b4") == smart_layout(4)
    with pytest.raises(TransferError):
        get_layout("nope")


def test_layout_encoding_roundtrip():
    lay = activity_layout()
    vals = [3, (1 << 128) - 1, 1_700_000_000, 12345, (1 << 24) - 1]
    msg = lay.encode(vals)
    assert len(msg) == lay.nbytes == 28 and lay.decode(msg) == vals
    with pytest.raises(TransferError):
        lay.encode([3, 0, 0, 1 << 24, 0])
    with pytest.raises(TransferError):
        lay.encode(vals[:4])
    d = disease_layout(5)
    assert d.decode(d.encode([1, 2, 0, 1, 2, 2, 1])) == [1, 2, 0, 1, 2, 2, 1]
    assert d.nbytes == 20                       # 154 bits padded to a whole byte


def test_slot_positions():
    assert smart_layout(2).slot_positions(3, 1024) == list(range(6))
    assert activity_layout().slot_positions(2, 1024) == [0, 512, 1, 513]
    with pytest.raises(TransferError):
        smart_layout().slot_positions(1025, 1024)


def test_ric_indices():
    ct, pk = b"c" * 40, b"p" * 40
    idx = ric_indices(ct, pk, 10, 0.2)
    assert len(idx) == 2 and len(set(idx)) == 2 and all(0 <= i < 10 for i in idx)
    assert idx == ric_indices(ct, pk, 10, 0.2)
    assert ric_indices(ct, pk, 10, 1.0) == list(range(10))
    assert ric_indices(ct, pk, 7, 0.01) and len(ric_indices(ct, pk, 7, 0.01)) == 1
    assert ric_indices(b"d" * 40, pk, 1000, 0.1) != ric_indices(ct, pk, 1000, 0.1)
    with pytest.raises(TransferError):
        ric_indices(ct, pk, 10, 0.0)


def test_ric_covers_indices_uniformly():
    counts = np.zeros(10, int)
    for k in range(3000):
        for i in ric_indices(b"%d" % k, b"pk", 10, 0.2):
            counts[i] += 1
    expected = 600
    assert ((counts - expected) ** 2 / expected).sum() < 27.9      # 9 dof, p = 0.001


def test_messages_wire_roundtrip(world):
    *_, sk, msgs = world
    back = unpack_messages(pack_messages(msgs))
    assert back == msgs and all(m.verify(sk.public_bytes()) for m in back)
    with pytest.raises(TransferError):
        unpack_messages(pack_messages(msgs) + b"x")


def test_signatures():
    sk = SignerKeys.generate(b"a")
    d = b"\x01" * 32
    sig = sk.sign(d)
    assert verify_sig(sk.public_bytes(), d, sig)
    assert not verify_sig(sk.public_bytes(), b"\x02" * 32, sig)
    assert not verify_sig(SignerKeys.generate(b"b").public_bytes(), d, sig)
    assert SignerKeys.from_private(sk.private_bytes()).public_bytes() == sk.public_bytes()


def test_honest_transfer_verifies(world, honest):
    he, ks, ctx, sk, msgs = world
    bundle, st = honest
    reasons: list = []
    back = TransferBundle.from_bytes(bundle.to_bytes(), RING, ctx.cp)
    assert verify_transfer(ctx, back, sk.public_bytes(), reasons), reasons
    assert st["b_a2b"] == 3 * (3 * RING.q.bit_length() + 2)
    assert st["b_hash"] == st["n_and"] - st["b_a2b"]


def test_ciphertext_carries_signed_values(world, honest):
    he, ks, ctx, sk, msgs = world
    bundle, _ = honest
    got = decode_ints(decrypt(bundle.ct, ks.s), he, [0, 1, 2])
    assert list(got) == [m.values()[3] for m in msgs]


def test_circuit_is_cached_and_deterministic(world):
    he, ks, ctx, sk, msgs = world
    a = build_transfer_circuit(ctx, 3, [0, 1, 2])
    assert build_transfer_circuit(ctx, 3, [0, 1, 2]) is a
    assert a.circuit.digest() == build_transfer_circuit(dataclasses.replace(ctx, _circuits={}), 3,
                                                         [0, 1, 2]).circuit.digest()


def test_rejects_on_wrong_source_key(world, honest):
    he, ks, ctx, sk, msgs = world
    r: list = []
    assert not verify_transfer(ctx, honest[0], SignerKeys.generate(b"other").public_bytes(), r)
    assert r == ["signature"]


def test_rejects_swapped_ciphertext(world, honest):
    he, ks, ctx, sk, msgs = world
    other = prove_transfer(ctx, msgs[:1] + msgs[1:], sk.public_bytes(), b"seed-2")
    forged = dataclasses.replace(honest[0], ct=other.ct)
    r: list = []
    assert not verify_transfer(ctx, forged, sk.public_bytes(), r)
    forged = dataclasses.replace(honest[0], com=other.com)
    assert not verify_transfer(ctx, forged, sk.public_bytes())
    forged = dataclasses.replace(honest[0], bound_proof=other.bound_proof)
    assert not verify_transfer(ctx, forged, sk.public_bytes())


@pytest.mark.parametrize("cheat,reason", [("flip", "zk proof"), ("noise", "bound proof")])
def test_cheating_user_rejected(world, cheat, reason):
    he, ks, ctx, sk, msgs = world
    b = prove_transfer(ctx, msgs, sk.public_bytes(), b"cheat-" + cheat.encode(), cheat=cheat)
    r: list = []
    assert not verify_transfer(ctx, b, sk.public_bytes(), r)
    assert r == [reason]


def test_unsigned_input_refused(world):
    he, ks, ctx, sk, msgs = world
    bad = dataclasses.replace(msgs[0], msg=msgs[0].msg[:-1] + b"\x00")
    with pytest.raises(TransferError):
        prove_transfer(ctx, [bad], sk.public_bytes(), b"s")
    with pytest.raises(TransferError):
        prove_transfer(ctx, [], sk.public_bytes(), b"s")


def test_partial_hash_checking(world):
    he, ks, _, sk, _ = world
    ctx = TransferContext(he, ks.pk, CommitParams(RING), BoundProofParams(N=2048), smart_layout(), t=3, ric=0.2)
    rng = np.random.default_rng(1)
    msgs = [SourceMessage.create(ctx.layout, [int.from_bytes(rng.bytes(16), "big"), 1, i, i * 11], sk)
            for i in range(10)]
    b = prove_transfer(ctx, msgs, sk.public_bytes(), b"ric")
    assert len(b.challenged) == 2
    assert verify_transfer(ctx, b, sk.public_bytes())
    full = build_transfer_circuit(dataclasses.replace(ctx, ric=1.0, _circuits={}), 10, list(range(10)))
    part = build_transfer_circuit(ctx, 10, b.challenged)
    assert part.circuit.n_and < full.circuit.n_and / 4
