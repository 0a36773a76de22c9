"""Proof-size estimates.

Two profiles:
  "published"  the analytic accounting at the published parameter sets
  "crisp"  the exact byte layout of this implementation's proofs
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

from .crisp_circuit import MessageLayout, activity_layout, disease_layout, smart_layout
from .gadgets import sha_blocks
from .usecases import PUBLISHED_POINTS, PUBLISHED_SIZES, canonical
from .zkb_engine import CircuitDesc, iterations

AND_PER_BLOCK = 22272
A2B_PER_BIT = 2
PP_M, PP_TAU = 300, 81


@dataclass
class Estimate:
    use_case: str
    n_points: int
    n_msgs: int
    checked_msgs: int
    t: int
    bits_per_iter: float
    total_bytes: int

    @property
    def mb(self) -> float:
        return self.total_bytes / 1e6

    def as_dict(self) -> dict:
        d = asdict(self)
        d["mb"] = self.mb
        return d


def _layout(kind: str, batch: int) -> MessageLayout:
    if kind == "smart_meter_sum":
        return smart_layout(batch)
    if kind == "disease_weighted_sum":
        return disease_layout(PUBLISHED_POINTS[kind])
    return activity_layout()


def _msgs_for(kind: str, n_points: int, batch: int) -> int:
    if kind == "smart_meter_sum":
        return math.ceil(n_points / batch)
    if kind == "disease_weighted_sum":
        return 1
    return n_points


def estimate_published(kind: str, n_points: int | None = None, ric: float = 1.0, batch: int = 1,
                   preprocessing: bool = False, kappa: int = 128) -> Estimate:
    """Per-iteration size

        |p_i| = |c| + 2 kappa + log2 3 + 2/3 (|d| + |Com| + |Enc| + |t|) + b_hash + b_A2B

    with |c| = 256, |d| = values * log q, |Com| = 5 N log q, |Enc| = 3 N log q,
    |t| = auxiliary bits of every message, b_hash = 22272 per SHA-256 block of a
    checked message and b_A2B = 2 AND gates per converted data bit.
    """
    kind = canonical(kind)
    if not 0 < ric <= 1:
        raise ValueError("ric must be in (0, 1]")
    N, logq = PUBLISHED_SIZES[kind]
    n_points = PUBLISHED_POINTS[kind] if n_points is None else n_points
    lay = _layout(kind, batch)
    n_msgs = _msgs_for(kind, n_points, batch)
    n_vals = n_msgs * lay.n_data
    chk = math.ceil(ric * n_msgs)
    data_bits = lay.data_fields[0].bits
    d = n_vals * logq
    com = 5 * N * logq
    enc = 3 * N * logq
    aux = lay.aux_bits * n_msgs
    b_hash = chk * sha_blocks(lay.raw_bits) * AND_PER_BLOCK
    b_a2b = A2B_PER_BIT * data_bits * chk * lay.n_data
    t = iterations(kappa)
    if preprocessing:
        bits = 2 * kappa + PP_TAU * math.log2(PP_M / PP_TAU) * 3 * kappa \
            + PP_TAU * (kappa * math.log2(3) + 2 * kappa + (d + com + enc + aux) + 2 * (b_hash + b_a2b))
        return Estimate(kind, n_points, n_msgs, chk, PP_TAU, bits / PP_TAU, math.ceil(bits / 8))
    per = 256 + 2 * kappa + math.log2(3) + 2 / 3 * (d + com + enc + aux) + b_hash + b_a2b
    return Estimate(kind, n_points, n_msgs, chk, t, per, math.ceil(t * per / 8))


def expected_proof_bytes(c: CircuitDesc, kappa: int, t: int) -> float:
    """Expected serialized ZKB++ size for a concrete circuit: x3 is sent in 2/3 of the iterations."""
    base, x3 = c.record_sizes(kappa)
    return c.header_bytes(t) + t * (base + 2 / 3 * x3)


def per_iteration_bits(c: CircuitDesc, kappa: int) -> float:
    """|p_i| evaluated on a built circuit, in bits."""
    base, x3 = c.record_sizes(kappa)
    return 8 * (base + 2 / 3 * x3)
