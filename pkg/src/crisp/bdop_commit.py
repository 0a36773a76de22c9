"""Lattice commitment (c1; c2) = A.r + (0; m) and its Fiat-Shamir bound proof.

The bound proof is a binary-challenge Sigma protocol repeated `iterations`
times. Masks are uniform in a box and the response is released only if it
falls in a smaller box that does not depend on the secret (rejection
sampling); if any iteration aborts the whole transcript is redone, because
the challenge bits are derived jointly from every aux commitment.
"""
from __future__ import annotations

import hashlib
import math
import os
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ring_core import RingElem, RingError, RingParams, prime_column, rns_intt, rns_ntt, sample

BP_MAGIC = b"CRBP"
BP_VERSION = 1
AUX_RAND_BYTES = 16


class CommitError(ValueError):
    pass


def challenge_space_ok(beta_c: int, N: int, L: int, l_bits: int) -> bool:
    """(beta_c+1)^N * (1 - N*L/2^l) >= 2^256, evaluated in log2."""
    frac = 1 - N * L / 2.0 ** l_bits
    if frac <= 0:
        return False
    return N * math.log2(beta_c + 1) + math.log2(frac) >= 256


@dataclass(frozen=True)
class CommitParams:
    ring: RingParams
    n: int = 1
    k: int = 5
    l_c: int = 3
    beta: int = 1
    seed: bytes = b"crisp-bdop-A"
    beta_c: int = 1
    check_challenge_space: bool = True

    def __post_init__(self):
        if self.k <= self.n + self.l_c:
            raise CommitError("need k > n + l_c")
        if self.check_challenge_space and not challenge_space_ok(
                self.beta_c, self.ring.N, self.ring.L, self.ring.l_min_bits):
            raise CommitError("challenge space too small for these ring parameters")

    @property
    def A1p(self) -> tuple[tuple[RingElem, ...], ...]:
        return _matrices(self)[0]

    @property
    def A2p(self) -> tuple[tuple[RingElem, ...], ...]:
        return _matrices(self)[1]

    def digest(self) -> bytes:
        h = hashlib.sha256(b"bdop|%d|%d|%d|%d|" % (self.n, self.k, self.l_c, self.beta))
        h.update(self.seed)
        h.update(b"".join(p.to_bytes(4, "big") for p in self.ring.primes))
        return h.digest()


_MAT_CACHE: dict = {}


def _matrices(cp: CommitParams):
    key = (cp.ring, cp.n, cp.k, cp.l_c, cp.seed)
    if key not in _MAT_CACHE:
        ring = cp.ring
        a1 = tuple(tuple(sample("uniform_q", None, cp.seed + b"|A1|%d|%d" % (i, j), ring)
                         for j in range(cp.k - cp.n)) for i in range(cp.n))
        w2 = cp.k - cp.n - cp.l_c
        a2 = tuple(tuple(sample("uniform_q", None, cp.seed + b"|A2|%d|%d" % (i, j), ring)
                         for j in range(w2)) for i in range(cp.l_c))
        ntt1 = np.stack([np.stack([rns_ntt(e.res, ring.primes) for e in row]) for row in a1])
        ntt2 = np.stack([np.stack([rns_ntt(e.res, ring.primes) for e in row]) for row in a2])
        _MAT_CACHE[key] = (a1, a2, ntt1, ntt2)
    return _MAT_CACHE[key]


@dataclass(frozen=True)
class Commitment:
    c1: tuple[RingElem, ...]
    c2: tuple[RingElem, ...]

    def elems(self) -> tuple[RingElem, ...]:
        return self.c1 + self.c2

    def to_bytes(self) -> bytes:
        return b"".join(e.res.astype(">i8").tobytes() for e in self.elems())

    def __eq__(self, other):
        return isinstance(other, Commitment) and self.elems() == other.elems()

    def __hash__(self):
        return hash(self.to_bytes())


def commit_arrays(cp: CommitParams, m: np.ndarray | None, r: np.ndarray) -> np.ndarray:
    """Vectorised commitment on RNS arrays.

    r has shape (..., k, L, N); m (..., l_c, L, N) or None.
    Returns (..., n + l_c, L, N).
    """
    ring = cp.ring
    primes = ring.primes
    pc = prime_column(primes)
    _, _, ntt1, ntt2 = _matrices(cp)
    n, l_c = cp.n, cp.l_c
    r_hat = rns_ntt(r, primes)
    tail1 = r_hat[..., n:, :, :]                           # (..., k-n, L, N)
    c1 = (ntt1 * tail1[..., None, :, :, :] % pc).sum(axis=-3) % pc
    tail2 = r_hat[..., n + l_c:, :, :]
    c2 = (ntt2 * tail2[..., None, :, :, :] % pc).sum(axis=-3) % pc
    c1 = rns_intt(c1, primes)
    c2 = rns_intt(c2, primes)
    c1 = (c1 + r[..., :n, :, :]) % pc
    c2 = (c2 + r[..., n:n + l_c, :, :]) % pc
    if m is not None:
        c2 = (c2 + m) % pc
    return np.concatenate([c1, c2], axis=-3)


def _as_array(ring: RingParams, elems: Sequence[RingElem]) -> np.ndarray:
    for e in elems:
        if e.level != ring.top or e.N != ring.N:
            raise CommitError("commitment inputs must be top-level elements of the ring")
    return np.stack([e.res for e in elems])


def small_to_rns(ring: RingParams, x: np.ndarray) -> np.ndarray:
    """Signed small integers (..., N) -> residues (..., L, N)."""
    pc = prime_column(ring.primes)
    return np.asarray(x, dtype=np.int64)[..., None, :] % pc


def commit(cp: CommitParams, m: Sequence[RingElem], r_c: Sequence[RingElem], check: bool = True) -> Commitment:
    if len(m) != cp.l_c or len(r_c) != cp.k:
        raise CommitError("wrong vector lengths")
    if check:
        from .ring_core import inf_norm
        if any(inf_norm(r) > cp.beta for r in r_c):
            raise CommitError("randomness norm exceeds beta")
    out = commit_arrays(cp, _as_array(cp.ring, m), _as_array(cp.ring, r_c))
    elems = [RingElem(cp.ring, out[i]) for i in range(cp.n + cp.l_c)]
    return Commitment(tuple(elems[: cp.n]), tuple(elems[cp.n:]))


def commit_small(cp: CommitParams, m: np.ndarray, r: np.ndarray) -> Commitment:
    """Commit to small signed integer vectors m (l_c, N), r (k, N)."""
    out = commit_arrays(cp, small_to_rns(cp.ring, m), small_to_rns(cp.ring, r))
    elems = [RingElem(cp.ring, out[i]) for i in range(cp.n + cp.l_c)]
    return Commitment(tuple(elems[: cp.n]), tuple(elems[cp.n:]))


def verify_open(cp: CommitParams, c: Commitment, m: Sequence[RingElem], r_c: Sequence[RingElem]) -> bool:
    from .ring_core import inf_norm
    try:
        if any(inf_norm(r) > cp.beta for r in r_c):
            return False
        return commit(cp, m, r_c, check=False) == c
    except (CommitError, RingError):
        return False


def sample_randomness(cp: CommitParams, seed: bytes) -> np.ndarray:
    """r_c uniform in S_beta^k as signed ints (k, N)."""
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(hashlib.sha256(b"rc|" + seed).digest(), "big")))
    return rng.integers(-cp.beta, cp.beta + 1, size=(cp.k, cp.ring.N))


# ---------------------------------------------------------------- bound proof

@dataclass(frozen=True)
class BoundProofParams:
    N: int
    beta_x: tuple[int, ...] = (1, 20, 20)   # per committed component
    beta: int = 1
    k: int = 5
    gamma: int = 64
    gamma_x: int = 64
    iterations: int = 128

    @property
    def l_c(self) -> int:
        return len(self.beta_x)

    @property
    def beta_mu(self) -> tuple[int, ...]:
        return tuple(self.gamma_x * self.l_c * self.N * b for b in self.beta_x)

    @property
    def beta_rho(self) -> int:
        return self.gamma * self.k * self.N * self.beta

    @property
    def abort_bound(self) -> float:
        return 2 / self.gamma + 2 / self.gamma_x

    def abort_probability(self) -> float:
        """Exact per-iteration rejection probability when the challenge bit is 1."""
        N = self.N
        logp = 0.0
        for bm, bx in zip(self.beta_mu, self.beta_x):
            logp += N * math.log((2 * (bm - bx) + 1) / (2 * bm + 1))
        br = self.beta_rho
        logp += self.k * N * math.log((2 * (br - self.beta) + 1) / (2 * br + 1))
        return 1 - math.exp(logp)

    def widths(self) -> tuple[tuple[int, ...], int]:
        zw = tuple((2 * b + 1 - 1).bit_length() for b in self.beta_mu)
        rw = (2 * self.beta_rho).bit_length()
        return zw, rw

    def iteration_bytes(self) -> int:
        zw, rw = self.widths()
        bits = self.N * (sum(zw) + self.k * rw)
        return 32 + AUX_RAND_BYTES + (bits + 7) // 8

    def header_bytes(self) -> int:
        return 4 + 1 + 2 + 4 + (self.iterations + 7) // 8

    def proof_bytes(self) -> int:
        return self.header_bytes() + self.iterations * self.iteration_bytes()

    def soundness_norm(self) -> int:
        """Any extracted opening has norm at most twice the mask bound."""
        return 2 * max(self.beta_mu)


@dataclass(frozen=True)
class BoundProof:
    counter: int
    d: tuple[int, ...]
    c_aux: tuple[bytes, ...]
    aux_rand: tuple[bytes, ...]
    z: np.ndarray          # (iters, l_c, N) signed
    r_z: np.ndarray        # (iters, k, N) signed

    @property
    def iterations(self) -> int:
        return len(self.d)


def _t_digest(t: np.ndarray) -> bytes:
    return t.astype(">i8").tobytes()


def _aux_commit(t: np.ndarray, rand: bytes) -> bytes:
    return hashlib.sha256(b"aux|" + _t_digest(t) + rand).digest()


def _challenge(c: Commitment, seed: bytes, counter: int, c_aux: Sequence[bytes], iters: int) -> list[int]:
    h = hashlib.sha256(b"crisp-bound-fs|" + seed + struct.pack(">I", counter) + c.to_bytes())
    for a in c_aux:
        h.update(a)
    root = h.digest()
    stream = b""
    ctr = 0
    while len(stream) * 8 < iters:
        stream += hashlib.sha256(root + struct.pack(">I", ctr)).digest()
        ctr += 1
    bits = np.unpackbits(np.frombuffer(stream, dtype=np.uint8), bitorder="little")
    return [int(b) for b in bits[:iters]]


def _norm_ok(z: np.ndarray, r: np.ndarray, bp: BoundProofParams, shrink: bool) -> bool:
    for c, bm in enumerate(bp.beta_mu):
        lim = bm - bp.beta_x[c] if shrink else bm
        if np.abs(z[c]).max(initial=0) > lim:
            return False
    lim = bp.beta_rho - bp.beta if shrink else bp.beta_rho
    return np.abs(r).max(initial=0) <= lim


def bound_prove(cp: CommitParams, bp: BoundProofParams, m: np.ndarray, r_c: np.ndarray, c: Commitment,
                seed: bytes, rng_seed: bytes | None = None, enforce: bool = True,
                max_restarts: int = 2000, stats: dict | None = None) -> BoundProof:
    """Prove that the committed small vector m (l_c, N) has small norm.

    `enforce=False` lets a test harness run the prover on out-of-bound secrets.
    """
    m = np.asarray(m, dtype=np.int64)
    r_c = np.asarray(r_c, dtype=np.int64)
    if enforce:
        for comp, bx in zip(m, bp.beta_x):
            if np.abs(comp).max(initial=0) > bx:
                raise CommitError("secret exceeds beta_x")
        if np.abs(r_c).max(initial=0) > cp.beta:
            raise CommitError("commitment randomness exceeds beta")
        if commit_small(cp, m, r_c) != c:
            raise CommitError("opening does not match commitment")
    rng_seed = os.urandom(32) if rng_seed is None else rng_seed
    iters = bp.iterations
    N = cp.ring.N
    bmu = np.array(bp.beta_mu, dtype=np.int64)[:, None]
    mu = np.zeros((iters, bp.l_c, N), dtype=np.int64)
    rho = np.zeros((iters, cp.k, N), dtype=np.int64)
    rands: list = [b""] * iters
    c_aux: list = [b""] * iters
    fresh = np.arange(iters)
    for counter in range(max_restarts):
        # Masks that met a d=1 challenge are replaced after any abort, so every
        # surviving mask is one that was never tested against the secret.
        rng = np.random.Generator(np.random.PCG64(
            int.from_bytes(hashlib.sha256(rng_seed + struct.pack(">I", counter)).digest(), "big")))
        k = len(fresh)
        mu[fresh] = rng.integers(-bmu, bmu + 1, size=(k, bp.l_c, N))
        rho[fresh] = rng.integers(-bp.beta_rho, bp.beta_rho + 1, size=(k, cp.k, N))
        t = commit_arrays(cp, small_to_rns(cp.ring, mu[fresh]), small_to_rns(cp.ring, rho[fresh]))
        for j, i in enumerate(fresh):
            rands[i] = rng.bytes(AUX_RAND_BYTES)
            c_aux[i] = _aux_commit(t[j], rands[i])
        d = _challenge(c, seed, counter, c_aux, iters)
        dd = np.array(d, dtype=np.int64)
        z = mu + dd[:, None, None] * m[None]
        r_z = rho + dd[:, None, None] * r_c[None]
        aborted = [i for i in range(iters) if d[i] and not _norm_ok(z[i], r_z[i], bp, shrink=True)]
        if stats is not None:
            stats.setdefault("iterations", 0)
            stats.setdefault("aborts", 0)
            stats.setdefault("restarts", 0)
            stats.setdefault("challenged", 0)
            stats["iterations"] += k
            stats["challenged"] += int(dd.sum())
            stats["aborts"] += len(aborted)
        # a cheating prover (enforce=False) submits the transcript regardless
        if not aborted or not enforce:
            return BoundProof(counter, tuple(d), tuple(c_aux), tuple(rands), z, r_z)
        if stats is not None:
            stats["restarts"] += 1
        fresh = np.flatnonzero(dd)
    raise CommitError("bound proof kept aborting")


def bound_verify(cp: CommitParams, bp: BoundProofParams, c: Commitment, proof: BoundProof, seed: bytes) -> bool:
    try:
        iters = bp.iterations
        if proof.iterations != iters or proof.z.shape != (iters, bp.l_c, cp.ring.N) \
                or proof.r_z.shape != (iters, cp.k, cp.ring.N):
            return False
        d = _challenge(c, seed, proof.counter, proof.c_aux, iters)
        if tuple(d) != proof.d:
            return False
        for i in range(iters):
            if not _norm_ok(proof.z[i], proof.r_z[i], bp, shrink=False):
                return False
        t = commit_arrays(cp, small_to_rns(cp.ring, proof.z), small_to_rns(cp.ring, proof.r_z))
        carr = np.stack([e.res for e in c.elems()])
        pc = prime_column(cp.ring.primes)
        for i in range(iters):
            ti = (t[i] - d[i] * carr) % pc
            if _aux_commit(ti, proof.aux_rand[i]) != proof.c_aux[i]:
                return False
        return True
    except (ValueError, IndexError):
        return False


# ---------------------------------------------------------------- serialization

def _pack_signed(x: np.ndarray, bound: int, width: int) -> np.ndarray:
    v = (x.astype(np.int64) + bound).astype(np.uint64)
    shifts = np.arange(width, dtype=np.uint64)
    return ((v[..., None] >> shifts) & np.uint64(1)).astype(np.uint8).reshape(-1)


def _unpack_signed(bits: np.ndarray, bound: int, width: int, shape) -> np.ndarray:
    b = bits.reshape(-1, width).astype(np.int64)
    v = (b << np.arange(width, dtype=np.int64)).sum(axis=1)
    return (v - bound).reshape(shape)


def serialize_bound_proof(proof: BoundProof, bp: BoundProofParams) -> bytes:
    zw, rw = bp.widths()
    iters = proof.iterations
    dbits = np.packbits(np.array(proof.d, dtype=np.uint8), bitorder="little").tobytes()
    out = [BP_MAGIC, struct.pack(">BHI", BP_VERSION, iters, proof.counter), dbits]
    for i in range(iters):
        parts = [_pack_signed(proof.z[i, c], bp.beta_mu[c], zw[c]) for c in range(bp.l_c)]
        parts.append(_pack_signed(proof.r_z[i], bp.beta_rho, rw))
        bits = np.concatenate(parts)
        out += [proof.c_aux[i], proof.aux_rand[i], np.packbits(bits, bitorder="little").tobytes()]
    return b"".join(out)


def deserialize_bound_proof(data: bytes, bp: BoundProofParams) -> BoundProof:
    if data[:4] != BP_MAGIC:
        raise CommitError("bad magic")
    version, iters, counter = struct.unpack(">BHI", data[4:11])
    if version != BP_VERSION or iters != bp.iterations:
        raise CommitError("bound proof header mismatch")
    pos = 11
    nd = (iters + 7) // 8
    d = np.unpackbits(np.frombuffer(data[pos:pos + nd], dtype=np.uint8), bitorder="little")[:iters]
    pos += nd
    zw, rw = bp.widths()
    N = bp.N
    nbits = N * (sum(zw) + bp.k * rw)
    nbytes = (nbits + 7) // 8
    c_aux, rands, zs, rs = [], [], [], []
    for _ in range(iters):
        c_aux.append(data[pos:pos + 32])
        rands.append(data[pos + 32:pos + 32 + AUX_RAND_BYTES])
        pos += 32 + AUX_RAND_BYTES
        bits = np.unpackbits(np.frombuffer(data[pos:pos + nbytes], dtype=np.uint8), bitorder="little")[:nbits]
        if bits.size != nbits:
            raise CommitError("truncated bound proof")
        pos += nbytes
        off = 0
        z = []
        for c in range(bp.l_c):
            z.append(_unpack_signed(bits[off:off + N * zw[c]], bp.beta_mu[c], zw[c], (N,)))
            off += N * zw[c]
        zs.append(np.stack(z))
        rs.append(_unpack_signed(bits[off:], bp.beta_rho, rw, (bp.k, N)))
    if pos != len(data):
        raise CommitError("trailing bytes in bound proof")
    return BoundProof(counter, tuple(int(x) for x in d), tuple(c_aux), tuple(rands),
                      np.stack(zs), np.stack(rs))
