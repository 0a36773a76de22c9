"""Arithmetic in R_q = Z_q[X]/(X^N+1) over an RNS basis of NTT-friendly primes.

Coefficients are stored per prime (residue number system). Every prime is
kept below 2^31 so that products of two residues fit in a signed 64-bit
integer and numpy can do all the heavy lifting.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from sympy import isprime
from sympy.ntheory import primitive_root

MAGIC = b"CRSP"
VERSION = 1
MAX_PRIME_BITS = 31


class RingError(ValueError):
    pass


# ---------------------------------------------------------------- primes

def find_primes(N: int, bits: Sequence[int], exclude: Iterable[int] = ()) -> tuple[int, ...]:
    """Return distinct primes p = 1 mod 2N, the i-th one just below 2^bits[i]."""
    taken = set(exclude)
    out = []
    m = 2 * N
    for b in bits:
        if b > MAX_PRIME_BITS:
            raise RingError(f"prime size {b} exceeds {MAX_PRIME_BITS} bits")
        p = ((1 << b) - 1) // m * m + 1
        while p > m:
            if p not in taken and isprime(p):
                break
            p -= m
        else:
            raise RingError(f"no NTT prime of {b} bits for N={N}")
        taken.add(p)
        out.append(p)
    return tuple(out)


# ---------------------------------------------------------------- NTT

@lru_cache(maxsize=None)
def _ntt_tables(p: int, N: int):
    g = primitive_root(p)
    psi = pow(g, (p - 1) // (2 * N), p)
    omega = psi * psi % p
    psi_inv = pow(psi, p - 2, p)
    omega_inv = pow(omega, p - 2, p)
    n_inv = pow(N, p - 2, p)

    def powers(base, count):
        out = np.empty(count, dtype=np.int64)
        acc = 1
        for i in range(count):
            out[i] = acc
            acc = acc * base % p
        return out

    psi_pow = powers(psi, N)
    psi_inv_pow = powers(psi_inv, N) * n_inv % p
    logn = N.bit_length() - 1
    rev = np.zeros(N, dtype=np.int64)
    for i in range(N):
        rev[i] = int(format(i, f"0{logn}b")[::-1], 2) if logn else 0
    # twiddles for each stage of the iterative transform
    fwd, inv = [], []
    length = 2
    while length <= N:
        half = length // 2
        w = pow(omega, N // length, p)
        wi = pow(omega_inv, N // length, p)
        fwd.append(powers(w, half))
        inv.append(powers(wi, half))
        length *= 2
    return psi_pow, psi_inv_pow, rev, fwd, inv


def _cyclic(a: np.ndarray, p: int, rev, tw) -> np.ndarray:
    N = a.shape[-1]
    a = a[..., rev]
    lead = a.shape[:-1]
    out = np.empty_like(a)
    length = 2
    for w in tw:
        half = length // 2
        a3 = a.reshape(lead + (N // length, 2, half))
        o3 = out.reshape(lead + (N // length, 2, half))
        u = a3[..., 0, :]
        v = a3[..., 1, :] * w
        v %= p
        s = o3[..., 0, :]
        np.add(u, v, out=s)
        s -= p * (s >= p)
        d = o3[..., 1, :]
        np.subtract(u, v, out=d)
        d += p * (d < 0)
        a, out = out, a
        length *= 2
    return a.reshape(lead + (N,))


def ntt(a: np.ndarray, p: int) -> np.ndarray:
    """Negacyclic forward transform along the last axis (values in [0, p))."""
    N = a.shape[-1]
    psi_pow, _, rev, fwd, _ = _ntt_tables(p, N)
    return _cyclic(a * psi_pow % p, p, rev, fwd)


def intt(a: np.ndarray, p: int) -> np.ndarray:
    N = a.shape[-1]
    _, psi_inv_pow, rev, _, inv = _ntt_tables(p, N)
    return _cyclic(a, p, rev, inv) * psi_inv_pow % p


def rns_ntt(a: np.ndarray, primes: Sequence[int]) -> np.ndarray:
    """NTT of an array shaped (..., L, N) where axis -2 indexes the primes."""
    out = np.empty_like(a)
    for i, p in enumerate(primes):
        out[..., i, :] = ntt(a[..., i, :], p)
    return out


def rns_intt(a: np.ndarray, primes: Sequence[int]) -> np.ndarray:
    out = np.empty_like(a)
    for i, p in enumerate(primes):
        out[..., i, :] = intt(a[..., i, :], p)
    return out


def prime_column(primes: Sequence[int]) -> np.ndarray:
    return np.array(primes, dtype=np.int64)[:, None]


def rns_polymul(a: np.ndarray, b: np.ndarray, primes: Sequence[int]) -> np.ndarray:
    """Negacyclic product of RNS arrays, broadcasting over leading axes."""
    pc = prime_column(primes)
    return rns_intt(rns_ntt(a, primes) * rns_ntt(b, primes) % pc, primes)


# ---------------------------------------------------------------- CRT helpers

@lru_cache(maxsize=None)
def _crt_basis(primes: tuple[int, ...]):
    q = math.prod(primes)
    coeffs = []
    for p in primes:
        qi = q // p
        coeffs.append(qi * pow(qi, -1, p) % q)
    return q, tuple(coeffs)


def crt_to_int(res: np.ndarray, primes: Sequence[int]) -> list[int]:
    """Combine residues shaped (L, n) into n Python integers in [0, q)."""
    primes = tuple(int(p) for p in primes)
    q, basis = _crt_basis(primes)
    if len(primes) == 1:
        return [int(v) for v in res[0]]
    acc = None
    for i, c in enumerate(basis):
        col = res[i].astype(object) * c
        acc = col if acc is None else acc + col
    return [int(v) % q for v in acc]


def ints_to_rns(values: Sequence[int], primes: Sequence[int]) -> np.ndarray:
    obj = np.array([int(v) for v in values], dtype=object)
    return np.stack([(obj % p).astype(np.int64) for p in primes]) if len(obj) else \
        np.zeros((len(primes), 0), dtype=np.int64)


def crt_to_bits(res: np.ndarray, primes: Sequence[int], nbits: int) -> np.ndarray:
    """Little-endian bit decomposition of CRT values, shape (..., n) -> (..., n, nbits).

    Works on arrays of residues shaped (..., L, n) without Python big
    integers: residues are combined with the CRT basis split into 16-bit limbs.
    """
    primes = tuple(int(p) for p in primes)
    q = math.prod(primes)
    lead = res.shape[:-2]
    n = res.shape[-1]
    nlimb = (q.bit_length() + 31) // 16 + 2
    # value = sum_i (q/p_i) * s_i with s_i = r_i * (q/p_i)^-1 mod p_i, so value < L*q
    acc = np.zeros(lead + (n, nlimb), dtype=np.int64)
    for i, p in enumerate(primes):
        qi = q // p
        s = res[..., i, :] * (pow(qi, -1, p) % p) % p
        limbs = np.array([(qi >> (16 * k)) & 0xFFFF for k in range(nlimb)], dtype=np.int64)
        acc += (s & 0xFFFF)[..., None] * limbs
        acc[..., 1:] += (s >> 16)[..., None] * limbs[:-1]
    acc = _carry(acc)
    # subtract multiples of q: value < L*q, so reduce by trial subtraction
    qlimbs = np.array([(q >> (16 * k)) & 0xFFFF for k in range(nlimb)], dtype=np.int64)
    for mult in range(len(primes), 0, -1):
        cand = _carry(acc - mult * qlimbs)
        ok = cand[..., -1] >= 0
        acc = np.where(ok[..., None], cand, acc)
    bits = ((acc[..., :, None] >> np.arange(16)) & 1).reshape(lead + (n, nlimb * 16))
    return bits[..., :nbits].astype(np.uint8)


def _carry(acc: np.ndarray) -> np.ndarray:
    acc = acc.copy()
    for k in range(acc.shape[-1] - 1):
        c = acc[..., k] >> 16
        acc[..., k] -= c << 16
        acc[..., k + 1] += c
    return acc


# ---------------------------------------------------------------- params

@dataclass(frozen=True)
class RingParams:
    N: int
    primes: tuple[int, ...]

    def __post_init__(self):
        N = self.N
        if N < 2 or N & (N - 1):
            raise RingError("N must be a power of two")
        if not self.primes:
            raise RingError("need at least one prime")
        if len(set(self.primes)) != len(self.primes):
            raise RingError("primes must be distinct")
        for p in self.primes:
            if p % (2 * N) != 1:
                raise RingError(f"prime {p} is not 1 mod 2N")
            if p >= 1 << MAX_PRIME_BITS:
                raise RingError(f"prime {p} too large for int64 residue products")

    @classmethod
    def make(cls, N: int, bits: Sequence[int]) -> "RingParams":
        return cls(N, find_primes(N, bits))

    @property
    def L(self) -> int:
        return len(self.primes)

    @property
    def q(self) -> int:
        return math.prod(self.primes)

    @property
    def top(self) -> int:
        return self.L - 1

    @property
    def l_min_bits(self) -> int:
        return min(p.bit_length() for p in self.primes)

    def q_at(self, level: int) -> int:
        return math.prod(self.primes[: level + 1])

    def primes_at(self, level: int) -> tuple[int, ...]:
        if not 0 <= level < self.L:
            raise RingError(f"level {level} out of range")
        return self.primes[: level + 1]

    def pcol(self, level: int) -> np.ndarray:
        return prime_column(self.primes_at(level))


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 3.2
    ternary_density: float = 0.5  # P(coefficient != 0) for encryption randomness
    beta: int = 1
    h: int = 64

    def __post_init__(self):
        if self.sigma <= 0:
            raise RingError("sigma must be positive")
        if self.beta < 1:
            raise RingError("beta must be >= 1")
        if self.h <= 0:
            raise RingError("h must be positive")

    @property
    def gauss_bound(self) -> int:
        return int(math.floor(6 * self.sigma))


# ---------------------------------------------------------------- ring elements

class RingElem:
    """Immutable element of R_{q_l}; `res` has shape (level+1, N)."""

    __slots__ = ("params", "level", "res")

    def __init__(self, params: RingParams, res: np.ndarray, level: int | None = None):
        if level is None:
            level = res.shape[0] - 1
        res = np.asarray(res, dtype=np.int64)
        if res.shape != (level + 1, params.N):
            raise RingError(f"residue shape {res.shape} does not match level {level}, N={params.N}")
        res.setflags(write=False)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "res", res)

    def __setattr__(self, name, value):
        raise AttributeError("RingElem is immutable")

    # constructors
    @classmethod
    def zero(cls, params: RingParams, level: int | None = None) -> "RingElem":
        level = params.top if level is None else level
        return cls(params, np.zeros((level + 1, params.N), dtype=np.int64), level)

    @classmethod
    def from_coeffs(cls, params: RingParams, coeffs: Sequence[int], level: int | None = None) -> "RingElem":
        level = params.top if level is None else level
        if len(coeffs) != params.N:
            raise RingError(f"expected {params.N} coefficients, got {len(coeffs)}")
        return cls(params, ints_to_rns(coeffs, params.primes_at(level)), level)

    @classmethod
    def from_small(cls, params: RingParams, coeffs, level: int | None = None) -> "RingElem":
        """Build from small signed integers (numpy friendly)."""
        level = params.top if level is None else level
        c = np.asarray(coeffs, dtype=np.int64)
        return cls(params, c[None, :] % params.pcol(level), level)

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def primes(self) -> tuple[int, ...]:
        return self.params.primes_at(self.level)

    @property
    def modulus(self) -> int:
        return self.params.q_at(self.level)

    @property
    def coeffs(self) -> list[int]:
        return crt_to_int(self.res, self.primes)

    def centered(self) -> list[int]:
        q = self.modulus
        half = q // 2
        return [c - q if c > half else c for c in self.coeffs]

    def _check(self, other: "RingElem"):
        if not isinstance(other, RingElem):
            raise TypeError("expected RingElem")
        if other.N != self.N or other.params.primes[: self.level + 1] != self.primes:
            raise RingError("degree or modulus mismatch")
        if other.level != self.level:
            raise RingError(f"level mismatch ({self.level} vs {other.level})")

    def __add__(self, other):
        self._check(other)
        return RingElem(self.params, (self.res + other.res) % self.params.pcol(self.level), self.level)

    def __sub__(self, other):
        self._check(other)
        return RingElem(self.params, (self.res - other.res) % self.params.pcol(self.level), self.level)

    def __neg__(self):
        return RingElem(self.params, (-self.res) % self.params.pcol(self.level), self.level)

    def __mul__(self, other):
        if isinstance(other, (int, np.integer)):
            return self.scalar_mul(int(other))
        self._check(other)
        return RingElem(self.params, rns_polymul(self.res, other.res, self.primes), self.level)

    __rmul__ = __mul__

    def scalar_mul(self, c: int) -> "RingElem":
        col = np.array([c % p for p in self.primes], dtype=np.int64)[:, None]
        return RingElem(self.params, self.res * col % self.params.pcol(self.level), self.level)

    def add_const(self, c: int) -> "RingElem":
        res = self.res.copy()
        for i, p in enumerate(self.primes):
            res[i, 0] = (res[i, 0] + c) % p
        return RingElem(self.params, res, self.level)

    def __eq__(self, other):
        return (isinstance(other, RingElem) and other.level == self.level
                and other.primes == self.primes and np.array_equal(self.res, other.res))

    def __hash__(self):
        return hash((self.level, self.res.tobytes()))

    def __repr__(self):
        return f"RingElem(N={self.N}, level={self.level})"

    def at_level(self, level: int) -> "RingElem":
        """Reduce to a lower level (drops the upper primes)."""
        if level > self.level:
            raise RingError("cannot raise level")
        return RingElem(self.params, self.res[: level + 1].copy(), level)

    def automorphism(self, g: int) -> "RingElem":
        """Apply X -> X^g for odd g."""
        N = self.N
        idx = np.arange(N) * g % (2 * N)
        sign = idx >= N
        dst = idx % N
        out = np.zeros_like(self.res)
        pc = self.params.pcol(self.level)
        vals = np.where(sign[None, :], (-self.res) % pc, self.res)
        out[:, dst] = vals
        return RingElem(self.params, out, self.level)

    def to_bytes(self) -> bytes:
        return serialize(self)


# ---------------------------------------------------------------- operations

def ring_add(a: RingElem, b: RingElem) -> RingElem:
    return a + b


def ring_mul(a: RingElem, b: RingElem) -> RingElem:
    return a * b


def inf_norm(a: RingElem) -> int:
    """Largest absolute centered coefficient, representatives in (-q/2, q/2]."""
    if len(a.primes) == 1:
        p = a.primes[0]
        r = a.res[0]
        return int(np.max(np.where(r > p // 2, p - r, r))) if a.N else 0
    return max((abs(c) for c in a.centered()), default=0)


def small_norm(a: RingElem, bound: int) -> int:
    """Centered infinity norm, computed fast when it is known to be below `bound` < p0/2.

    Falls back to the exact big-integer path when the residues disagree.
    """
    p0 = a.primes[0]
    r0 = a.res[0]
    c = np.where(r0 > p0 // 2, r0 - p0, r0)
    pc = a.params.pcol(a.level)
    if bound < p0 // 2 and np.array_equal(c[None, :] % pc, a.res):
        return int(np.max(np.abs(c)))
    return inf_norm(a)


def _rng(seed: bytes, label: str) -> np.random.Generator:
    if not seed:
        raise RingError("seed must be nonempty")
    digest = hashlib.sha256(b"crisp-sample|" + label.encode() + b"|" + seed).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest, "big")))


def gaussian_ints(rng: np.random.Generator, n: int, sigma: float) -> np.ndarray:
    """Discrete Gaussian over Z by rejection, truncated at 6 sigma."""
    bound = int(math.floor(6 * sigma))
    out = np.empty(0, dtype=np.int64)
    while out.size < n:
        need = n - out.size
        cand = rng.integers(-bound, bound + 1, size=2 * need + 16)
        keep = rng.random(cand.size) < np.exp(-(cand.astype(float) ** 2) / (2 * sigma * sigma))
        out = np.concatenate([out, cand[keep]])
    return out[:n]


def ternary_hw(rng: np.random.Generator, N: int, h: int) -> np.ndarray:
    out = np.zeros(N, dtype=np.int64)
    pos = rng.choice(N, size=h, replace=False)
    out[pos] = rng.choice(np.array([-1, 1]), size=h)
    return out


def ternary_density(rng: np.random.Generator, N: int, rho: float) -> np.ndarray:
    u = rng.random(N)
    return np.where(u < rho / 2, -1, np.where(u < rho, 1, 0)).astype(np.int64)


def sample_small(dist: str, spec: NoiseSpec, N: int, seed: bytes) -> np.ndarray:
    """Signed integer coefficients for the small distributions."""
    rng = _rng(seed, dist)
    if dist == "gaussian":
        return gaussian_ints(rng, N, spec.sigma)
    if dist == "ternary":
        return ternary_hw(rng, N, min(spec.h, N))
    if dist == "ternary_dense":
        return ternary_density(rng, N, spec.ternary_density)
    if dist == "bounded_beta":
        return rng.integers(-spec.beta, spec.beta + 1, size=N)
    raise RingError(f"unknown distribution {dist!r}")


def sample(dist: str, spec: NoiseSpec, seed: bytes, params: RingParams, level: int | None = None) -> RingElem:
    level = params.top if level is None else level
    if dist == "uniform_q":
        rng = _rng(seed, dist)
        res = np.stack([rng.integers(0, p, size=params.N) for p in params.primes_at(level)])
        return RingElem(params, res, level)
    return RingElem.from_small(params, sample_small(dist, spec, params.N, seed), level)


# ---------------------------------------------------------------- serialization

def coeff_width(modulus: int) -> int:
    return (modulus.bit_length() + 7) // 8


def _coeff_bytes(a: RingElem) -> bytes:
    w = coeff_width(a.modulus)
    return b"".join(c.to_bytes(w, "big") for c in a.coeffs)


def serialize(a: RingElem) -> bytes:
    return MAGIC + struct.pack(">BIB", VERSION, a.N, a.level) + _coeff_bytes(a)


def deserialize(data: bytes, params: RingParams) -> RingElem:
    elem, rest = deserialize_prefix(data, params)
    if rest:
        raise RingError("trailing bytes after ring element")
    return elem


def deserialize_prefix(data: bytes, params: RingParams) -> tuple[RingElem, bytes]:
    if data[:4] != MAGIC:
        raise RingError("bad magic")
    version, N, level = struct.unpack(">BIB", data[4:10])
    if version != VERSION:
        raise RingError(f"unsupported version {version}")
    if N != params.N:
        raise RingError("degree mismatch")
    if level >= params.L:
        raise RingError("level out of range")
    q = params.q_at(level)
    w = coeff_width(q)
    body = data[10: 10 + w * N]
    if len(body) != w * N:
        raise RingError("truncated ring element")
    coeffs = [int.from_bytes(body[i * w:(i + 1) * w], "big") for i in range(N)]
    if any(c >= q for c in coeffs):
        raise RingError("coefficient out of range")
    return RingElem.from_coeffs(params, coeffs, level), data[10 + w * N:]
