import math

import pytest

from crisp.bdop_commit import BoundProofParams, CommitParams
from crisp.ckks_he import keygen
from crisp.crisp_circuit import SourceMessage, TransferContext, build_transfer_circuit, prove_transfer, smart_layout
from crisp.estimator import estimate_published, expected_proof_bytes, per_iteration_bits
from crisp.signing import SignerKeys
from crisp.usecases import DataError, make_config
from crisp.zkb_engine import ZkProof


def by_hand(n_vals, data_bits, logq, N, aux_bits, n_msgs, blocks, checked=None, kappa=128, t=219):
    """Independent transcription of the per-iteration accounting, in MB."""
    checked = n_msgs if checked is None else checked
    per = 256 + 2 * kappa + math.log2(3) + 2 / 3 * (n_vals * logq + 5 * N * logq + 3 * N * logq
                                                   + aux_bits * n_msgs)
    per += checked * blocks * 22272 + 2 * data_bits * checked * (n_vals // n_msgs)
    return t * per / 8 / 1e6


@pytest.mark.parametrize("kind,mb", [("smart", 643.4), ("disease", 36.6), ("activity", 1499.2)])
def test_published_sizes(kind, mb):
    assert abs(estimate_published(kind).mb / mb - 1) < 0.01


def test_partial_checking_size():
    assert abs(estimate_published("smart", ric=0.2).mb / 142.2 - 1) < 0.01


def test_matches_hand_accounting():
    assert estimate_published("smart").mb == pytest.approx(by_hand(1024, 16, 45, 2048, 176, 1024, 1), rel=1e-6)
    assert estimate_published("disease").mb == pytest.approx(by_hand(869, 2, 56, 4096, 144, 1, 4), rel=1e-6)
    assert estimate_published("activity").mb == pytest.approx(by_hand(4096, 24, 184, 8192, 176, 2048, 1), rel=1e-6)


def test_options_shrink_the_proof():
    base = estimate_published("smart").mb
    bg = estimate_published("smart", batch=16)
    assert bg.n_msgs == 64 and bg.mb < base / 2
    both = estimate_published("smart", batch=16, ric=0.2)
    assert both.checked_msgs == 13 and both.mb < bg.mb
    pp = estimate_published("smart", preprocessing=True)
    assert pp.t == 81 and pp.mb < base
    assert estimate_published("smart", kappa=64).t == 110


def test_bad_options():
    with pytest.raises(ValueError):
        estimate_published("smart", ric=0)
    with pytest.raises(DataError):
        estimate_published("median")


def test_expected_size_matches_serialized_proof():
    cfg = make_config("smart")
    he = cfg.he
    ks = keygen(he, b"est", rotations=[])
    ctx = TransferContext(he, ks.pk, CommitParams(he.ring), BoundProofParams(N=he.N), smart_layout(), t=10)
    sk = SignerKeys.generate(b"e")
    msg = SourceMessage.create(ctx.layout, [7, 1, 2, 3], sk)
    b = prove_transfer(ctx, [msg], sk.public_bytes(), b"s")
    c = build_transfer_circuit(ctx, 1, [0]).circuit
    exp = expected_proof_bytes(c, 128, 10)
    # x3 travels in a random subset of iterations, so compare the realized layout exactly ...
    trits = ZkProof.from_bytes(b.zk_proof, c).trits
    assert len(b.zk_proof) == c.proof_bytes(128, 10, sum(1 for e in trits if e))
    # ... and the expectation within the spread of the x3 count
    base, x3 = c.record_sizes(128)
    assert abs(len(b.zk_proof) - exp) <= 10 * x3
    assert per_iteration_bits(c, 128) == pytest.approx(8 * (base + 2 / 3 * x3))
