"""Leveled CKKS with an exactly-linear slot encoding.

Encoding of secret data is the integer matrix product m = E.z mod q, where E
is a public fixed-point quantization of the real canonical embedding. This
keeps the whole encryption step affine in the secrets, so it can be
replayed share-wise inside the zero-knowledge circuit.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .ring_core import (
    MAGIC, NoiseSpec, RingElem, RingError, RingParams, crt_to_bits, deserialize_prefix,
    find_primes, prime_column, rns_intt, rns_ntt, sample, sample_small, serialize,
)

HE_VERSION = 1


class HeError(ValueError):
    pass


def b_clean(N: int, sigma: float, h: int) -> float:
    """Fresh-encryption noise bound."""
    return 8 * math.sqrt(2) * sigma * N + 6 * sigma * math.sqrt(N) + 16 * sigma * math.sqrt(h * N)


@dataclass(frozen=True)
class HeParams:
    ring: RingParams
    delta_e_bits: int          # scale of the public encoding matrix E
    frac_bits: int = 0         # extra fixed-point bits applied to real inputs
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    digit_bits: int = 8        # base 2^digit_bits for key switching

    @property
    def N(self) -> int:
        return self.ring.N

    @property
    def slots(self) -> int:
        return self.ring.N // 2

    @property
    def delta(self) -> int:
        return 1 << (self.delta_e_bits + self.frac_bits)

    @property
    def b_clean(self) -> float:
        return b_clean(self.N, self.noise.sigma, self.noise.h)

    def validate(self):
        if self.delta <= self.N + 2 * self.b_clean:
            raise HeError(
                f"scale 2^{self.delta_e_bits + self.frac_bits} violates delta > N + 2*B_clean "
                f"(needs > {self.N + 2 * self.b_clean:.0f})")
        if (1 << self.delta_e_bits) < self.N // 2:
            raise HeError("delta_e must be at least N/2")
        if 2 * (1 << self.delta_e_bits) // self.N >= 1 << 52:
            raise HeError("delta_e too large for double-precision matrix entries")
        if self.noise.h > self.N:
            raise HeError("secret weight exceeds N")


# ---------------------------------------------------------------- encoding matrix

@lru_cache(maxsize=8)
def _rot_group(N: int) -> np.ndarray:
    """5^k mod 2N for k < N/2."""
    out = np.empty(N // 2, dtype=np.int64)
    acc = 1
    for k in range(N // 2):
        out[k] = acc
        acc = acc * 5 % (2 * N)
    return out


class EncodingMatrix:
    """E[j, k] = round(delta_e * (2/N) * cos(pi * (5^k j mod 2N) / N)).

    Columns are produced on demand; the full matrix at N = 2^13 would need
    a quarter gigabyte.
    """

    def __init__(self, N: int, delta_e_bits: int):
        self.N = N
        self.delta_e_bits = delta_e_bits
        self.delta_e = 1 << delta_e_bits
        self._amp = 2.0 * self.delta_e / N
        self._cache: dict[tuple, np.ndarray] = {}

    def columns(self, idx: Sequence[int]) -> np.ndarray:
        """Integer block E[:, idx] shaped (N, len(idx))."""
        key = tuple(int(i) for i in idx)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        N = self.N
        g = _rot_group(N)[np.asarray(key, dtype=np.int64)]
        j = np.arange(N, dtype=np.int64)
        ang = (j[:, None] * g[None, :]) % (2 * N)
        block = np.rint(self._amp * np.cos(np.pi * ang / N)).astype(np.int64)
        if len(self._cache) < 16:
            self._cache[key] = block
        return block

    def full(self) -> np.ndarray:
        return self.columns(range(self.N // 2))

    def digest(self) -> bytes:
        return hashlib.sha256(b"E|%d|%d" % (self.N, self.delta_e_bits)).digest()


@lru_cache(maxsize=8)
def encoding_matrix(N: int, delta_e_bits: int) -> EncodingMatrix:
    return EncodingMatrix(N, delta_e_bits)


def mod_matmul(A: np.ndarray, X: np.ndarray, p: int) -> np.ndarray:
    """(A @ X) mod p exactly; A (r, n) and X (n, m) hold residues in [0, p), n <= 2^14."""
    A0 = (A & 0xFFFF).astype(np.float64)
    A1 = (A >> 16).astype(np.float64)
    X0 = (X & 0xFFFF).astype(np.float64)
    X1 = (X >> 16).astype(np.float64)
    s00 = (A0 @ X0).astype(np.int64) % p
    s01 = ((A0 @ X1).astype(np.int64) + (A1 @ X0).astype(np.int64)) % p
    s11 = (A1 @ X1).astype(np.int64) % p
    return (s00 + (s01 << 16) % p + s11 * ((1 << 32) % p) % p) % p


def rns_encode_cols(E: EncodingMatrix, idx: Sequence[int], X: np.ndarray, primes: Sequence[int]) -> np.ndarray:
    """E[:, idx] @ X for RNS data X shaped (..., L, n) -> (..., L, N)."""
    block = E.columns(idx)
    lead = X.shape[:-2]
    L, n = X.shape[-2:]
    flat = X.reshape((-1, L, n))
    out = np.empty((flat.shape[0], L, E.N), dtype=np.int64)
    for i, p in enumerate(primes):
        Ep = block % p
        out[:, i, :] = mod_matmul(Ep, flat[:, i, :].T, p).T
    return out.reshape(lead + (L, E.N))


# ---------------------------------------------------------------- plaintexts / ciphertexts

@dataclass(frozen=True)
class Plaintext:
    poly: RingElem
    scale: Fraction

    @property
    def level(self) -> int:
        return self.poly.level


@dataclass(frozen=True)
class Ciphertext:
    c0: RingElem
    c1: RingElem
    scale: Fraction

    def __post_init__(self):
        if self.c0.level != self.c1.level:
            raise HeError("ciphertext components at different levels")

    @property
    def level(self) -> int:
        return self.c0.level

    def to_bytes(self) -> bytes:
        return serialize_ct(self)


def encode_ints(z_int: Sequence[int], params: HeParams, level: int | None = None,
                slots: Sequence[int] | None = None) -> Plaintext:
    """Exactly linear: m = E[:, slots] . z_int mod q, scale delta_e."""
    ring = params.ring
    level = ring.top if level is None else level
    primes = ring.primes_at(level)
    z = [int(v) for v in z_int]
    slots = list(range(len(z))) if slots is None else list(slots)
    if len(slots) != len(z) or len(z) > params.slots:
        raise HeError("too many values for the available slots")
    E = encoding_matrix(params.N, params.delta_e_bits)
    X = np.stack([np.array([v % p for v in z], dtype=np.int64) for p in primes])
    m = rns_encode_cols(E, slots, X, primes)
    return Plaintext(RingElem(ring, m, level), Fraction(E.delta_e))


def encode(z: Sequence[float], params: HeParams, level: int | None = None) -> Plaintext:
    """Quantize real z with frac_bits, then apply E. Scale is delta_e * 2^frac_bits."""
    z = np.asarray(z, dtype=float)
    if z.size > params.slots:
        raise HeError("vector longer than slot count")
    zq = [int(v) for v in np.rint(z * (1 << params.frac_bits))]
    level = params.ring.top if level is None else level
    bound = params.ring.q_at(level) // 2
    if max((abs(v) for v in zq), default=0) * params.delta * 2 >= bound * (1 << params.frac_bits):
        raise HeError("value too large for the modulus headroom")
    pt = encode_ints(zq, params, level)
    return Plaintext(pt.poly, Fraction(params.delta))


def encode_float(z: Sequence[float], params: HeParams, scale: int, level: int | None = None) -> Plaintext:
    """Textbook CKKS encoding with rounding. Only for public plaintexts."""
    N = params.N
    z = np.zeros(N // 2) + 0.0 if len(z) == 0 else np.asarray(z, dtype=float)
    full = np.zeros(N // 2)
    full[: z.size] = z
    g = _rot_group(N)
    # m_j = (2/N) sum_k z_k cos(pi g_k j / N): evaluate through a length-2N FFT
    spec = np.zeros(2 * N, dtype=complex)
    np.add.at(spec, g, full)
    np.add.at(spec, (2 * N - g) % (2 * N), full)
    vals = np.fft.fft(spec)[:N].real / N
    coeffs = [int(round(v)) for v in (vals * float(scale))]
    if abs(scale) >= 1 << 52:
        # recompute with exact big-integer scaling to avoid float saturation
        coeffs = [int(round(float(v) * (scale >> 20))) << 20 for v in vals]
    level = params.ring.top if level is None else level
    return Plaintext(RingElem.from_coeffs(params.ring, coeffs, level), Fraction(scale))


@lru_cache(maxsize=4)
def _pinv(N: int, delta_e_bits: int) -> np.ndarray:
    E = encoding_matrix(N, delta_e_bits).full().astype(np.float64)
    return np.linalg.pinv(E) * float(1 << delta_e_bits)


EXACT_DECODE_MAX_N = 4096


def decode(pt: Plaintext, params: HeParams, n: int | None = None) -> np.ndarray:
    """Slot values. Up to N = 4096 this inverts the rounded matrix E itself, which is
    exact for anything built from E by additions and rotations; above that the
    ideal canonical embedding is inverted with an FFT."""
    N = params.N
    c = np.array([float(v) for v in pt.poly.centered()])
    if N <= EXACT_DECODE_MAX_N:
        z = _pinv(N, params.delta_e_bits) @ c / float(pt.scale)
        return z if n is None else z[:n]
    spec = np.fft.ifft(np.concatenate([c, np.zeros(N)])) * (2 * N)
    g = _rot_group(N)
    z = spec[g].real / float(pt.scale)
    return z if n is None else z[:n]


def decode_ints(pt: Plaintext, params: HeParams, slots: Sequence[int]) -> np.ndarray:
    """Recover the integers behind encode_ints exactly (up to noise) by least squares on E.

    The slot decoder is off by the quantization error of E, which grows with
    the magnitude of the data; solving against E itself removes it.
    """
    E = encoding_matrix(params.N, params.delta_e_bits).columns(list(slots)).astype(np.float64)
    m = np.array([float(v) for v in pt.poly.centered()])
    scale = float(pt.scale) / E.dtype.type(1 << params.delta_e_bits)
    sol = np.linalg.lstsq(E, m, rcond=None)[0] / scale
    return np.rint(sol).astype(np.int64)


# ---------------------------------------------------------------- keys

@dataclass(frozen=True)
class KeySwitchKey:
    b: tuple[RingElem, ...]
    a: tuple[RingElem, ...]


@dataclass(frozen=True)
class KeySet:
    params: HeParams
    s: RingElem
    pk: tuple[RingElem, RingElem]
    evk: KeySwitchKey
    rot_keys: dict = field(default_factory=dict)

    @property
    def sk(self) -> tuple[int, RingElem]:
        return (1, self.s)

    def public(self) -> "PublicKeys":
        return PublicKeys(self.params, self.pk, self.evk, self.rot_keys)


@dataclass(frozen=True)
class PublicKeys:
    params: HeParams
    pk: tuple[RingElem, RingElem]
    evk: KeySwitchKey
    rot_keys: dict


def _n_digits(modulus: int, digit_bits: int) -> int:
    # one extra digit absorbs the carry of the balanced representation
    return -(-modulus.bit_length() // digit_bits) + 1


def _ksk(params: HeParams, s: RingElem, target: RingElem, seed: bytes) -> KeySwitchKey:
    ring = params.ring
    D = _n_digits(ring.q, params.digit_bits)
    bs, as_ = [], []
    for i in range(D):
        a = sample("uniform_q", params.noise, seed + b"|a|%d" % i, ring)
        e = sample("gaussian", params.noise, seed + b"|e|%d" % i, ring)
        shift = target.scalar_mul(pow(2, params.digit_bits * i, ring.q))
        bs.append(-(a * s) + e + shift)
        as_.append(a)
    return KeySwitchKey(tuple(bs), tuple(as_))


def rotation_steps(params: HeParams) -> list[int]:
    """Power-of-two slot rotations up to N/4."""
    out, r = [], 1
    while r <= params.N // 4:
        out.append(r)
        r *= 2
    return out


def keygen(params: HeParams, seed: bytes, rotations: Sequence[int] | None = None) -> KeySet:
    params.validate()
    ring = params.ring
    s = sample("ternary", params.noise, seed + b"|s", ring)
    a = sample("uniform_q", params.noise, seed + b"|pka", ring)
    e = sample("gaussian", params.noise, seed + b"|pke", ring)
    b = -(a * s) + e
    evk = _ksk(params, s, s * s, seed + b"|evk")
    rots = {}
    for r in (rotation_steps(params) if rotations is None else rotations):
        g = pow(5, r, 2 * params.N)
        rots[r] = _ksk(params, s, s.automorphism(g), seed + b"|rot%d" % r)
    return KeySet(params, s, (b, a), evk, rots)


# ---------------------------------------------------------------- encryption

@dataclass(frozen=True)
class EncNoise:
    r0: np.ndarray
    e0: np.ndarray
    e1: np.ndarray


def sample_enc_noise(params: HeParams, seed: bytes) -> EncNoise:
    N = params.N
    return EncNoise(
        sample_small("ternary_dense", params.noise, N, seed + b"|r0"),
        sample_small("gaussian", params.noise, N, seed + b"|e0"),
        sample_small("gaussian", params.noise, N, seed + b"|e1"),
    )


def encrypt_with(m: Plaintext, pk: tuple[RingElem, RingElem], noise: EncNoise) -> Ciphertext:
    ring = pk[0].params
    if m.level != ring.top:
        raise HeError("plaintext must be at the top level")
    r0 = RingElem.from_small(ring, noise.r0)
    e0 = RingElem.from_small(ring, noise.e0)
    e1 = RingElem.from_small(ring, noise.e1)
    return Ciphertext(r0 * pk[0] + m.poly + e0, r0 * pk[1] + e1, m.scale)


def encrypt(m: Plaintext, pk: tuple[RingElem, RingElem], seed: bytes, params: HeParams,
            return_noise: bool = False):
    noise = sample_enc_noise(params, seed)
    ct = encrypt_with(m, pk, noise)
    return (ct, noise) if return_noise else ct


def decrypt(ct: Ciphertext, s: RingElem) -> Plaintext:
    sl = s.at_level(ct.level)
    return Plaintext(ct.c0 + ct.c1 * sl, ct.scale)


# ---------------------------------------------------------------- homomorphic ops

def _same(a: Ciphertext, b: Ciphertext):
    if a.level != b.level:
        raise HeError(f"level mismatch ({a.level} vs {b.level})")
    if a.scale != b.scale:
        raise HeError("scale mismatch")


def he_add(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    _same(a, b)
    return Ciphertext(a.c0 + b.c0, a.c1 + b.c1, a.scale)


def he_sub(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    _same(a, b)
    return Ciphertext(a.c0 - b.c0, a.c1 - b.c1, a.scale)


def he_add_plain(a: Ciphertext, p: Plaintext) -> Ciphertext:
    if p.level != a.level or p.scale != a.scale:
        raise HeError("plaintext level/scale mismatch")
    return Ciphertext(a.c0 + p.poly, a.c1, a.scale)


def he_add_const(a: Ciphertext, c: float) -> Ciphertext:
    """Add c to every slot (constant polynomial c * scale)."""
    k = int(round(c * a.scale))
    return Ciphertext(a.c0.add_const(k), a.c1, a.scale)


def he_mul_plain(a: Ciphertext, p: Plaintext) -> Ciphertext:
    if p.level != a.level:
        raise HeError("plaintext level mismatch")
    return Ciphertext(a.c0 * p.poly, a.c1 * p.poly, a.scale * p.scale)


def he_mul_int(a: Ciphertext, k: int) -> Ciphertext:
    """Multiply by an integer scalar; the slot values are multiplied by k."""
    return Ciphertext(a.c0.scalar_mul(k), a.c1.scalar_mul(k), a.scale)


def at_level(a: Ciphertext, level: int) -> Ciphertext:
    return Ciphertext(a.c0.at_level(level), a.c1.at_level(level), a.scale)


def rescale(a: Ciphertext) -> Ciphertext:
    """Divide by the last prime of the current level, rounding."""
    if a.level == 0:
        raise HeError("no level left to rescale")
    ring = a.c0.params
    p_last = ring.primes[a.level]
    lower = ring.primes_at(a.level - 1)
    out = []
    for c in (a.c0, a.c1):
        last = c.res[a.level]
        centered = np.where(last > p_last // 2, last - p_last, last)
        res = np.empty((a.level, ring.N), dtype=np.int64)
        for i, p in enumerate(lower):
            inv = pow(p_last, -1, p)
            res[i] = (c.res[i] - centered % p) % p * inv % p
        out.append(RingElem(ring, res, a.level - 1))
    return Ciphertext(out[0], out[1], a.scale / p_last)


def _digits(c: RingElem, digit_bits: int, count: int) -> np.ndarray:
    """Balanced base-2^w digits in [-2^(w-1), 2^(w-1)), shape (count, N).

    Zero-mean digits matter: unsigned ones multiply the key noise by a
    constant polynomial and the error concentrates in a few slots.
    """
    nbits = (count - 1) * digit_bits
    bits = crt_to_bits(c.res, c.primes, nbits).astype(np.int64)  # (N, nbits)
    w = bits.reshape(c.N, count - 1, digit_bits) << np.arange(digit_bits)
    d = np.zeros((count, c.N), dtype=np.int64)
    d[:-1] = w.sum(axis=2).T
    half = 1 << (digit_bits - 1)
    for i in range(count - 1):
        hi = d[i] >= half
        d[i] -= hi << digit_bits
        d[i + 1] += hi
    return d


def key_switch(c: RingElem, key: KeySwitchKey, digit_bits: int) -> tuple[RingElem, RingElem]:
    ring = c.params
    level = c.level
    primes = c.primes
    D = _n_digits(ring.q_at(level), digit_bits)
    digs = _digits(c, digit_bits, D)
    pc = prime_column(primes)
    dig_rns = digs[:, None, :] % pc[None]                       # (D, L, N)
    d_hat = rns_ntt(dig_rns, primes)
    kb = np.stack([k.res[: level + 1] for k in key.b[:D]])
    ka = np.stack([k.res[: level + 1] for k in key.a[:D]])
    acc_b = (d_hat * rns_ntt(kb, primes) % pc).sum(axis=0) % pc
    acc_a = (d_hat * rns_ntt(ka, primes) % pc).sum(axis=0) % pc
    return (RingElem(ring, rns_intt(acc_b, primes), level),
            RingElem(ring, rns_intt(acc_a, primes), level))


def he_mul(a: Ciphertext, b: Ciphertext, evk: KeySwitchKey, params: HeParams) -> Ciphertext:
    """Tensor and relinearize (no rescale)."""
    if a.level != b.level:
        raise HeError("level mismatch")
    d0 = a.c0 * b.c0
    d1 = a.c0 * b.c1 + a.c1 * b.c0
    d2 = a.c1 * b.c1
    k0, k1 = key_switch(d2, evk, params.digit_bits)
    return Ciphertext(d0 + k0, d1 + k1, a.scale * b.scale)


def he_mul_rescale(a: Ciphertext, b: Ciphertext, evk: KeySwitchKey, params: HeParams) -> Ciphertext:
    if a.level < 1:
        raise HeError("insufficient levels for multiplication")
    return rescale(he_mul(a, b, evk, params))


def he_rotate(a: Ciphertext, r: int, rot_keys: dict, params: HeParams) -> Ciphertext:
    r %= params.slots
    if r == 0:
        return a
    if r not in rot_keys:
        raise HeError(f"missing rotation key for shift {r}")
    g = pow(5, r, 2 * params.N)
    c0 = a.c0.automorphism(g)
    c1 = a.c1.automorphism(g)
    k0, k1 = key_switch(c1, rot_keys[r], params.digit_bits)
    return Ciphertext(c0 + k0, k1, a.scale)


def he_rotate_sum(a: Ciphertext, rot_keys: dict, params: HeParams, width: int | None = None) -> Ciphertext:
    """Every slot ends up holding the sum over `width` consecutive slots (default all)."""
    width = params.slots if width is None else width
    if width & (width - 1):
        raise HeError("width must be a power of two")
    r = 1
    while r < width:
        a = he_add(a, he_rotate(a, r, rot_keys, params))
        r *= 2
    return a


# ---------------------------------------------------------------- polynomial evaluation

def poly_depth(deg: int) -> int:
    return max(1, math.ceil(math.log2(deg + 1))) if deg >= 1 else 0


def _scalar_to(ct: Ciphertext, c: float, level: int, scale: Fraction) -> Ciphertext:
    """c * ct landing at `level` with declared `scale` (drops >= 1 prime)."""
    ring = ct.c0.params
    if ct.level <= level:
        raise HeError("insufficient levels")
    ct = at_level(ct, level + 1)
    p = ring.primes[level + 1]
    k = int(round(Fraction(c) * scale * p / ct.scale))
    out = rescale(he_mul_int(ct, k))
    return Ciphertext(out.c0, out.c1, scale)


def he_eval_poly(ct: Ciphertext, coeffs: Sequence[float], evk: KeySwitchKey, params: HeParams,
                 scale: Fraction | None = None) -> Ciphertext:
    """Slotwise p(x) = sum c_i x^i with depth ceil(log2(deg+1))."""
    coeffs = list(coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    deg = len(coeffs) - 1
    if deg < 1:
        raise HeError("polynomial must have degree >= 1")
    depth = poly_depth(deg)
    if depth > ct.level:
        raise HeError(f"need {depth} levels, have {ct.level}")
    target = ct.level - depth
    scale = ct.scale if scale is None else Fraction(scale)
    powers = {1: ct}

    def power(m: int) -> Ciphertext:
        if m not in powers:
            h = power(m // 2)
            powers[m] = he_mul_rescale(h, h, evk, params)
        return powers[m]

    def ev(cs: list, level: int, sc: Fraction):
        # returns (ciphertext or None, constant term)
        while len(cs) > 1 and cs[-1] == 0:
            cs = cs[:-1]
        d = len(cs) - 1
        if d == 0:
            return None, cs[0]
        m = 1 << (poly_depth(d) - 1)
        lo, hi = cs[:m], cs[m:]
        xm = power(m)
        if len(hi) == 1:
            term = _scalar_to(xm, hi[0], level, sc)
        else:
            ring = ct.c0.params
            p = ring.primes[level + 1]
            xm_l = at_level(xm, level + 1)
            sc_h = sc * p / xm_l.scale
            h_ct, h_c = ev(hi, level + 1, sc_h)
            # fold the constant of hi into a ciphertext at level+1
            if h_c != 0:
                cst = he_add_const(Ciphertext(RingElem.zero(ring, level + 1), RingElem.zero(ring, level + 1), sc_h), h_c)
                h_ct = cst if h_ct is None else he_add(h_ct, cst)
            term = rescale(he_mul(xm_l, h_ct, evk, params))
            term = Ciphertext(term.c0, term.c1, sc)
        lo_ct, lo_c = ev(lo, level, sc)
        if lo_ct is not None:
            term = he_add(term, lo_ct)
        return term, lo_c

    out, c0 = ev(coeffs, target, scale)
    return he_add_const(out, c0) if c0 != 0 else out


# ---------------------------------------------------------------- serialization

def _scale_fixed(scale: Fraction) -> int:
    v = int(round(scale * (1 << 16)))
    if not 0 < v < 1 << 64:
        raise HeError("scale does not fit 48.16 fixed point")
    return v


def serialize_ct(ct: Ciphertext) -> bytes:
    body = b"".join(serialize(c) for c in (ct.c0, ct.c1))
    return MAGIC + struct.pack(">BBQ", HE_VERSION, 2, _scale_fixed(ct.scale)) + body


def deserialize_ct(data: bytes, ring: RingParams) -> Ciphertext:
    ct, rest = deserialize_ct_prefix(data, ring)
    if rest:
        raise HeError("trailing bytes after ciphertext")
    return ct


def deserialize_ct_prefix(data: bytes, ring: RingParams) -> tuple[Ciphertext, bytes]:
    if data[:4] != MAGIC:
        raise HeError("bad magic")
    version, count, scale = struct.unpack(">BBQ", data[4:14])
    if version != HE_VERSION or count != 2:
        raise HeError("unsupported ciphertext header")
    c0, rest = deserialize_prefix(data[14:], ring)
    c1, rest = deserialize_prefix(rest, ring)
    return Ciphertext(c0, c1, Fraction(scale, 1 << 16)), rest


def ct_digest(ct: Ciphertext) -> bytes:
    return hashlib.sha256(serialize_ct(ct)).digest()
