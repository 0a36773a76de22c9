"""Boolean and arithmetic circuit fragments: SHA-256, share conversion, encryption, commitment."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .bdop_commit import CommitParams, _matrices
from .ckks_he import HeParams, encoding_matrix
from .ring_core import prime_column
from .zkb_engine import ONE, ZERO, CircuitBuilder, CircuitError

SHA_K = [
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
]
SHA_IV = [0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19]

# a word is a list of 32 wires, index 0 = least significant bit


def const_word(v: int) -> list[int]:
    return [ONE if (v >> i) & 1 else ZERO for i in range(32)]


def add_words(b: CircuitBuilder, x: Sequence[int], y: Sequence[int]) -> list[int]:
    """Ripple-carry addition with one AND per carry."""
    out = []
    c = ZERO
    n = len(x)
    for i in range(n):
        out.append(b.xor(b.xor(x[i], y[i]), c))
        if i < n - 1:
            c = b.xor(c, b.and_(b.xor(x[i], c), b.xor(y[i], c)))
    return out


def _rotr(x, r):
    return [x[(i + r) % 32] for i in range(32)]


def _shr(x, r):
    return [x[i + r] if i + r < 32 else ZERO for i in range(32)]


def _xor3(b, x, y, z):
    return [b.xor(b.xor(u, v), w) for u, v, w in zip(x, y, z)]


def _ch(b, e, f, g):
    return [b.xor(gi, b.and_(ei, b.xor(fi, gi))) for ei, fi, gi in zip(e, f, g)]


def _maj(b, x, y, z):
    return [b.xor(b.and_(b.xor(xi, yi), b.xor(xi, zi)), xi) for xi, yi, zi in zip(x, y, z)]


def sha256_compress(b: CircuitBuilder, state: list, block_bits: Sequence[int]) -> list:
    """One compression; block_bits are 512 wires in message order (MSB first per word)."""
    w = [list(reversed(block_bits[32 * i:32 * i + 32])) for i in range(16)]
    for t in range(16, 64):
        s0 = _xor3(b, _rotr(w[t - 15], 7), _rotr(w[t - 15], 18), _shr(w[t - 15], 3))
        s1 = _xor3(b, _rotr(w[t - 2], 17), _rotr(w[t - 2], 19), _shr(w[t - 2], 10))
        w.append(add_words(b, add_words(b, add_words(b, w[t - 16], s0), w[t - 7]), s1))
    a, bb, c, d, e, f, g, h = state
    for t in range(64):
        S1 = _xor3(b, _rotr(e, 6), _rotr(e, 11), _rotr(e, 25))
        t1 = add_words(b, add_words(b, add_words(b, add_words(b, h, S1), _ch(b, e, f, g)),
                                    const_word(SHA_K[t])), w[t])
        S0 = _xor3(b, _rotr(a, 2), _rotr(a, 13), _rotr(a, 22))
        t2 = add_words(b, S0, _maj(b, a, bb, c))
        h, g, f = g, f, e
        e = add_words(b, d, t1)
        d, c, bb = c, bb, a
        a = add_words(b, t1, t2)
    return [add_words(b, s, v) for s, v in zip(state, (a, bb, c, d, e, f, g, h))]


def sha_blocks(nbits: int) -> int:
    return math.ceil((nbits + 65) / 512)


def sha256_circuit(b: CircuitBuilder, msg_bits: Sequence[int]) -> list[int]:
    """Digest wires (256, standard bit order) of a message given as wires in bit order."""
    n = len(msg_bits)
    nb = sha_blocks(n)
    padded = list(msg_bits) + [ONE] + [ZERO] * (512 * nb - n - 65)
    padded += [ONE if (n >> (63 - i)) & 1 else ZERO for i in range(64)]
    state = [const_word(v) for v in SHA_IV]
    for k in range(nb):
        state = sha256_compress(b, state, padded[512 * k:512 * (k + 1)])
    out = []
    for word in state:
        out.extend(reversed(word))
    return out


# ---------------------------------------------------------------- conversion

def maj_formula(b: CircuitBuilder, x0: int, x1: int, x2: int) -> int:
    """Majority with a single AND: (x0 ^ x2 ^ 1)(x1 ^ x2) ^ x1."""
    return b.xor(b.and_(b.not_(b.xor(x0, x2)), b.xor(x1, x2)), x1)


def conversion_block(b: CircuitBuilder, x_wire: int, elem: int, bit_width: int) -> tuple[list[int], list[int]]:
    """Arithmetic share of one element -> Boolean shares of its low `bit_width` bits.

    Returns (value bits LSB first, wires that must be public zeros).
    """
    q = math.prod(b.c.primes)
    qb = q.bit_length()
    if (1 << bit_width) > q:
        raise CircuitError("bit width exceeds the modulus")
    W = qb + 2
    xs = [b.share_bits(x_wire, elem, p) + [ZERO] * 2 for p in range(3)]
    # carry-save: S = s + 2c
    s = [b.xor(b.xor(xs[0][k], xs[1][k]), xs[2][k]) for k in range(W)]
    c = [ZERO] + [maj_formula(b, xs[0][k], xs[1][k], xs[2][k]) for k in range(W - 1)]
    S = add_words(b, s, c)
    # subtract w*q where w is one-hot (w==1, w==2)
    w1, w2 = b.wrap_hint(x_wire, elem)
    wq = []
    for k in range(W):
        bit1 = (q >> k) & 1
        bit2 = ((2 * q) >> k) & 1
        wq.append(b.xor(w1 if bit1 else ZERO, w2 if bit2 else ZERO))
    neg = [b.not_(v) for v in wq]
    # S + ~wq + 1: the +1 enters as the initial carry
    D = []
    carry = ONE
    for k in range(W):
        D.append(b.xor(b.xor(S[k], neg[k]), carry))
        if k < W - 1:
            carry = b.xor(carry, b.and_(b.xor(S[k], carry), b.xor(neg[k], carry)))
    zeros = D[bit_width:] + [b.and_(w1, w2)]
    return D[:bit_width], zeros


# ---------------------------------------------------------------- arithmetic blocks

def encryption_block(b: CircuitBuilder, he: HeParams, pk, x_wire: int, slots: Sequence[int],
                     r0: int, e0: int, e1: int) -> tuple[int, int]:
    """ct = (r0*pk0 + E.x + e0, r0*pk1 + e1), local gates only."""
    E = encoding_matrix(he.N, he.delta_e_bits)
    m = b.a_matmul(x_wire, E.columns(list(slots)))
    c0 = b.a_add(b.a_add(b.a_ring_mul(r0, pk[0].res), m), e0)
    c1 = b.a_add(b.a_ring_mul(r0, pk[1].res), e1)
    return c0, c1


def commitment_block(b: CircuitBuilder, cp: CommitParams, msg: Sequence[int], rand: Sequence[int]) -> list[int]:
    """BDOP commitment (c1; c2) = A.r + (0; m) over wires, local gates only."""
    a1, a2, _, _ = _matrices(cp)
    n, l_c, k = cp.n, cp.l_c, cp.k
    if len(msg) != l_c or len(rand) != k:
        raise CircuitError("commitment block: wrong vector lengths")
    out = []
    for i in range(n):
        acc = rand[i]
        for j, a in enumerate(a1[i]):
            acc = b.a_add(acc, b.a_ring_mul(rand[n + j], a.res))
        out.append(acc)
    for i in range(l_c):
        acc = rand[n + i]
        for j, a in enumerate(a2[i]):
            acc = b.a_add(acc, b.a_ring_mul(rand[n + l_c + j], a.res))
        out.append(b.a_add(acc, msg[i]))
    return out


def small_res(values, primes) -> np.ndarray:
    """Signed integers (n,) -> residues (L, n)."""
    return np.asarray(values, dtype=np.int64)[None, :] % prime_column(primes)
