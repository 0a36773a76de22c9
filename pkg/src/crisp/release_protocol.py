"""Blinded two-round release of a computation result.

The provider blinds the result ciphertext with B(x) = nu*x + eta, the user
decrypts both and commits to the pair, the provider opens (nu, eta), the user
checks the blinding and opens the pair, and the provider checks it and decodes.
All checks are exact equalities of ring elements, so CKKS noise does not matter.
"""
from __future__ import annotations

import hashlib
import math
import os
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ckks_he import Ciphertext, HeParams, Plaintext, decode, decrypt, deserialize_ct, serialize_ct
from .ring_core import RingElem, RingParams, deserialize, serialize

REL_VERSION = 1


class ReleaseError(ValueError):
    pass


# ---------------------------------------------------------------- hash commitments

@dataclass(frozen=True)
class HashCommitment:
    digest: bytes
    randomness: bytes | None = None

    @classmethod
    def commit(cls, value: bytes, randomness: bytes | None = None) -> "HashCommitment":
        r = os.urandom(16) if randomness is None else randomness
        if len(r) != 16:
            raise ReleaseError("commitment randomness must be 128 bits")
        return cls(hashlib.sha256(value + r).digest(), r)

    def opens(self, value: bytes, randomness: bytes) -> bool:
        return len(randomness) == 16 and hashlib.sha256(value + randomness).digest() == self.digest


# ---------------------------------------------------------------- blinding

def sample_blinding(ring: RingParams, level: int, seed: bytes | None) -> tuple[int, RingElem]:
    """nu uniform in Z_q^* (rejecting non-units, q is composite) and eta uniform in R_q."""
    q = ring.q_at(level)
    h = hashlib.sha256(b"blind|" + (os.urandom(32) if seed is None else seed)).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(h, "big")))
    while True:
        nu = int.from_bytes(rng.bytes((q.bit_length() + 71) // 8), "big") % q
        if nu and math.gcd(nu, q) == 1:
            break
    primes = ring.primes_at(level)
    res = np.stack([rng.integers(0, p, ring.N) for p in primes])
    return nu, RingElem(ring, res, level)


def blind(ct: Ciphertext, nu: int, eta: RingElem) -> Ciphertext:
    return Ciphertext(ct.c0 * nu + eta, ct.c1 * nu, ct.scale)


def _elem_bytes(e: RingElem) -> bytes:
    return serialize(e)


def _blind_value(nu: int, eta: RingElem) -> bytes:
    return struct.pack(">H", (nu.bit_length() + 7) // 8) + nu.to_bytes((nu.bit_length() + 7) // 8, "big") \
        + _elem_bytes(eta)


# ---------------------------------------------------------------- wire messages

def _sections(tag: bytes, parts: Sequence[bytes]) -> bytes:
    out = [tag, struct.pack(">BB", REL_VERSION, len(parts))]
    for p in parts:
        out += [struct.pack(">I", len(p)), p]
    return b"".join(out)


def _parse(tag: bytes, data: bytes, count: int) -> list[bytes]:
    if data[:4] != tag:
        raise ReleaseError(f"expected {tag.decode()} message")
    ver, n = struct.unpack(">BB", data[4:6])
    if ver != REL_VERSION or n != count:
        raise ReleaseError("bad message header")
    pos, out = 6, []
    for _ in range(n):
        (ln,) = struct.unpack(">I", data[pos:pos + 4])
        pos += 4
        out.append(data[pos:pos + ln])
        pos += ln
    if pos != len(data):
        raise ReleaseError("trailing bytes")
    return out


@dataclass
class Msg1:
    ct_psi: Ciphertext
    ct_blind: Ciphertext
    c0: bytes
    psi: str

    def to_bytes(self) -> bytes:
        return _sections(b"CRR1", [serialize_ct(self.ct_psi), serialize_ct(self.ct_blind), self.c0,
                                   self.psi.encode()])

    @classmethod
    def from_bytes(cls, data: bytes, ring: RingParams) -> "Msg1":
        a, b, c, d = _parse(b"CRR1", data, 4)
        return cls(deserialize_ct(a, ring), deserialize_ct(b, ring), c, d.decode())


@dataclass
class Msg2:
    c1: bytes

    def to_bytes(self) -> bytes:
        return _sections(b"CRR2", [self.c1])

    @classmethod
    def from_bytes(cls, data: bytes) -> "Msg2":
        return cls(*_parse(b"CRR2", data, 1))


@dataclass
class Msg3:
    nu: int
    eta: RingElem
    rand: bytes

    def to_bytes(self) -> bytes:
        return _sections(b"CRR3", [self.nu.to_bytes((self.nu.bit_length() + 7) // 8 or 1, "big"),
                                   _elem_bytes(self.eta), self.rand])

    @classmethod
    def from_bytes(cls, data: bytes, ring: RingParams) -> "Msg3":
        a, b, c = _parse(b"CRR3", data, 3)
        return cls(int.from_bytes(a, "big"), deserialize(b, ring), c)


@dataclass
class Msg4:
    m_hat: RingElem
    m_hat_b: RingElem
    rand: bytes

    def to_bytes(self) -> bytes:
        return _sections(b"CRR4", [_elem_bytes(self.m_hat), _elem_bytes(self.m_hat_b), self.rand])

    @classmethod
    def from_bytes(cls, data: bytes, ring: RingParams) -> "Msg4":
        a, b, c = _parse(b"CRR4", data, 3)
        return cls(deserialize(a, ring), deserialize(b, ring), c)


def _pair_bytes(m: RingElem, mb: RingElem) -> bytes:
    return _elem_bytes(m) + _elem_bytes(mb)


# ---------------------------------------------------------------- sessions

@dataclass
class Policy:
    allowed: tuple = ("sum", "weighted_sum", "distance")
    min_level: int = 0

    def admits(self, psi: str, ct: Ciphertext) -> bool:
        return psi in self.allowed and ct.level >= self.min_level


@dataclass
class ReleaseSession:
    role: str
    state: str = "init"
    he: HeParams | None = None
    psi: str = ""
    nu: int | None = None
    eta: RingElem | None = None
    ct_psi: Ciphertext | None = None
    ct_blind: Ciphertext | None = None
    c0: HashCommitment | None = None
    c1: HashCommitment | None = None
    m_hat: RingElem | None = None
    m_hat_b: RingElem | None = None
    result: float | None = None
    trace: list = field(default_factory=list)

    def _expect(self, role: str, state: str):
        if self.role != role or self.state != state:
            self.state = "rejected"
            raise ReleaseError(f"out-of-order message for {self.role} in state {state}")

    def _move(self, state: str):
        self.trace.append(state)
        self.state = state


def sp_blind_init(ct_psi: Ciphertext, psi: str, he: HeParams, seed: bytes | None = None,
                  identity: bool = False) -> tuple[Msg1, ReleaseSession]:
    """Provider: blind the result ciphertext and commit to the blinding."""
    s = ReleaseSession("provider", he=he, psi=psi, ct_psi=ct_psi)
    ring = he.ring
    if identity:
        nu, eta = 1, RingElem.zero(ring, ct_psi.level)
    else:
        nu, eta = sample_blinding(ring, ct_psi.level, seed)
    s.nu, s.eta = nu, eta
    s.ct_blind = blind(ct_psi, nu, eta)
    rand = None if seed is None else hashlib.sha256(b"c0|" + seed).digest()[:16]
    s.c0 = HashCommitment.commit(_blind_value(nu, eta), rand)
    s._move("blinded_sent")
    return Msg1(ct_psi, s.ct_blind, s.c0.digest, psi), s


def user_decrypt_commit(msg1: Msg1, sk: RingElem, he: HeParams, policy: Policy | None = None,
                        seed: bytes | None = None) -> tuple[Msg2, ReleaseSession]:
    """User: check the request, decrypt both ciphertexts and commit to the raw ring elements."""
    s = ReleaseSession("user", he=he, psi=msg1.psi, ct_psi=msg1.ct_psi, ct_blind=msg1.ct_blind)
    s.c0 = HashCommitment(msg1.c0)
    policy = Policy() if policy is None else policy
    if not policy.admits(msg1.psi, msg1.ct_psi) or msg1.ct_blind.level != msg1.ct_psi.level:
        s._move("rejected")
        raise ReleaseError(f"computation {msg1.psi!r} is not admissible")
    s.m_hat = decrypt(msg1.ct_psi, sk).poly
    s.m_hat_b = decrypt(msg1.ct_blind, sk).poly
    rand = None if seed is None else hashlib.sha256(b"c1|" + seed).digest()[:16]
    s.c1 = HashCommitment.commit(_pair_bytes(s.m_hat, s.m_hat_b), rand)
    s._move("result_committed")
    return Msg2(s.c1.digest), s


def sp_receive_commit(s: ReleaseSession, msg2: Msg2):
    s._expect("provider", "blinded_sent")
    s.c1 = HashCommitment(msg2.c1)
    s._move("result_committed")


def sp_open_blind(s: ReleaseSession) -> Msg3:
    s._expect("provider", "result_committed")
    s._move("blind_opened")
    return Msg3(s.nu, s.eta, s.c0.randomness)


def user_verify_blind(s: ReleaseSession, msg3: Msg3) -> bool:
    """User: the opening must match C_0 and nu*m + eta must equal the blinded decryption exactly."""
    s._expect("user", "result_committed")
    ok = (msg3.eta.level == s.m_hat.level and s.c0.opens(_blind_value(msg3.nu, msg3.eta), msg3.rand)
          and s.m_hat * msg3.nu + msg3.eta == s.m_hat_b)
    if not ok:
        s._move("rejected")
        return False
    s.nu, s.eta = msg3.nu, msg3.eta
    s._move("blind_opened")
    return True


def user_open_result(s: ReleaseSession) -> Msg4:
    s._expect("user", "blind_opened")
    s._move("result_opened")
    return Msg4(s.m_hat, s.m_hat_b, s.c1.randomness)


def sp_verify_result(s: ReleaseSession, msg4: Msg4) -> float | None:
    """Provider: check C_1 and the blinding relation, then decode slot 0."""
    s._expect("provider", "blind_opened")
    m, mb = msg4.m_hat, msg4.m_hat_b
    ok = (m.level == s.ct_psi.level and mb.level == m.level
          and s.c1.opens(_pair_bytes(m, mb), msg4.rand)
          and m * s.nu + s.eta == mb)
    if not ok:
        s._move("rejected")
        return None
    s.m_hat, s.m_hat_b = m, mb
    s.result = float(decode(Plaintext(m, s.ct_psi.scale), s.he, 1)[0])
    s._move("accepted")
    return s.result


def run_release(ct_psi: Ciphertext, psi: str, he: HeParams, sk: RingElem, seed: bytes | None = None,
                policy: Policy | None = None) -> tuple[float | None, ReleaseSession, ReleaseSession]:
    """Honest in-process run of all four messages."""
    ring = he.ring
    m1, sp = sp_blind_init(ct_psi, psi, he, seed)
    m1 = Msg1.from_bytes(m1.to_bytes(), ring)
    m2, us = user_decrypt_commit(m1, sk, he, policy, None if seed is None else seed + b"|u")
    sp_receive_commit(sp, Msg2.from_bytes(m2.to_bytes()))
    m3 = Msg3.from_bytes(sp_open_blind(sp).to_bytes(), ring)
    if not user_verify_blind(us, m3):
        return None, sp, us
    m4 = Msg4.from_bytes(user_open_result(us).to_bytes(), ring)
    return sp_verify_result(sp, m4), sp, us
