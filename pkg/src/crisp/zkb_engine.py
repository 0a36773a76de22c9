"""ZKB++ (MPC-in-the-head with a (2,3)-decomposition) over mixed circuits.

A circuit carries vector-valued wires over Z_q (q given by an RNS basis) and
single-bit wires over Z_2. Arithmetic gates come first; `share_bits` gates
turn one player's arithmetic share into Boolean wires (a local operation),
and the Boolean gates follow. There is no Boolean-to-arithmetic gate.

All t iterations are evaluated at once: arithmetic shares are numpy arrays
with an iteration axis, and Boolean shares are Python ints whose bit i holds
iteration i (bit slicing).
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ckks_he import mod_matmul
from .ring_core import crt_to_bits, prime_column, rns_intt, rns_ntt

ZK_MAGIC = b"CRZK"
ZK_VERSION = 1
COMMIT_BYTES = 32

ZERO, ONE = -1, -2          # Boolean constants in the builder
XOR, AND, NOT = 0, 1, 2


class CircuitError(ValueError):
    pass


def iterations(kappa: int) -> int:
    """Repetitions for soundness 2^-kappa with per-iteration error 2/3."""
    return math.ceil(kappa / math.log2(1.5))


def trit_bytes(t: int) -> int:
    return math.ceil(t * math.log2(3) / 8)


# ---------------------------------------------------------------- circuit description

@dataclass
class CircuitDesc:
    primes: tuple[int, ...]
    a_sizes: list = field(default_factory=list)        # length of each arithmetic wire
    a_inputs: list = field(default_factory=list)       # secret arithmetic input wires
    a_gates: list = field(default_factory=list)        # (op, out, x, y_or_const)
    a_outputs: list = field(default_factory=list)
    n_bool: int = 0
    b_inputs: list = field(default_factory=list)
    bit_reqs: list = field(default_factory=list)       # (arith wire, element, player, first bool wire)
    hints: list = field(default_factory=list)          # (arith input wire, element, w==1 wire, w==2 wire)
    b_gates: list = field(default_factory=list)        # (op, out, a, b)
    b_outputs: list = field(default_factory=list)
    _hash: bytes | None = None
    _compiled: object = None

    @property
    def qbits(self) -> int:
        return math.prod(self.primes).bit_length()

    @property
    def L(self) -> int:
        return len(self.primes)

    @property
    def n_and(self) -> int:
        # cached against the gate count, the gate list only ever grows
        hit = self.__dict__.get("_n_and")
        if hit is None or hit[0] != len(self.b_gates):
            hit = (len(self.b_gates), sum(1 for g in self.b_gates if g[0] == AND))
            self.__dict__["_n_and"] = hit
        return hit[1]

    @property
    def n_mul_elems(self) -> int:
        return sum(self.a_sizes[g[1]] for g in self.a_gates if g[0] == "mul")

    @property
    def n_arith_in(self) -> int:
        return sum(self.a_sizes[w] for w in self.a_inputs)

    def x3_bits(self) -> int:
        return self.n_arith_in * self.qbits + len(self.b_inputs)

    def record_sizes(self, kappa: int) -> tuple[int, int]:
        """(bytes of a record without x3, bytes of x3) for one iteration."""
        base = COMMIT_BYTES + 2 * (kappa // 8) + (self.n_and + 7) // 8 \
            + (self.n_mul_elems * self.qbits + 7) // 8
        return base, (self.x3_bits() + 7) // 8

    def header_bytes(self, t: int) -> int:
        return len(ZK_MAGIC) + 1 + 2 + 2 + 32 + trit_bytes(t)

    def proof_bytes(self, kappa: int, t: int, n_x3: int) -> int:
        base, x3 = self.record_sizes(kappa)
        return self.header_bytes(t) + t * base + n_x3 * x3

    def digest(self) -> bytes:
        if self._hash is None:
            h = hashlib.sha256(b"crisp-circuit|")
            h.update(b"".join(p.to_bytes(4, "big") for p in self.primes))
            h.update(np.array(self.a_sizes, dtype=">i8").tobytes())
            h.update(np.array(self.a_inputs, dtype=">i8").tobytes())
            for g in self.a_gates:
                h.update(repr(g[:3]).encode())
                if len(g) > 3 and g[3] is not None:
                    c = g[3]
                    h.update(c.tobytes() if isinstance(c, np.ndarray) else repr(c).encode())
            h.update(np.array(self.a_outputs, dtype=">i8").tobytes())
            h.update(struct.pack(">I", self.n_bool))
            h.update(np.array(self.b_inputs, dtype=">i8").tobytes())
            h.update(np.array(self.bit_reqs, dtype=">i8").tobytes())
            h.update(np.array(self.hints, dtype=">i8").tobytes())
            if self.b_gates:
                h.update(np.array(self.b_gates, dtype=">i8").tobytes())
            h.update(np.array(self.b_outputs, dtype=">i8").tobytes())
            self._hash = h.digest()
        return self._hash


class CircuitBuilder:
    """Builds a CircuitDesc; Boolean operations fold constants as they go."""

    def __init__(self, primes: Sequence[int]):
        self.c = CircuitDesc(tuple(int(p) for p in primes))
        self._pc = prime_column(self.c.primes)
        self._ntt_cache: dict = {}

    # arithmetic ----------------------------------------------------
    def _new_a(self, n: int) -> int:
        self.c.a_sizes.append(n)
        return len(self.c.a_sizes) - 1

    def a_input(self, n: int) -> int:
        w = self._new_a(n)
        self.c.a_inputs.append(w)
        return w

    def _size(self, w: int) -> int:
        return self.c.a_sizes[w]

    def a_add(self, x: int, y: int) -> int:
        if self._size(x) != self._size(y):
            raise CircuitError("size mismatch")
        out = self._new_a(self._size(x))
        self.c.a_gates.append(("add", out, x, y))
        return out

    def a_sub(self, x: int, y: int) -> int:
        if self._size(x) != self._size(y):
            raise CircuitError("size mismatch")
        out = self._new_a(self._size(x))
        self.c.a_gates.append(("sub", out, x, y))
        return out

    def a_add_const(self, x: int, const: np.ndarray) -> int:
        const = np.asarray(const, dtype=np.int64) % self._pc
        out = self._new_a(self._size(x))
        self.c.a_gates.append(("add_const", out, x, const))
        return out

    def a_mul_const(self, x: int, const: np.ndarray) -> int:
        """Elementwise product with a public vector given as residues (L, n) or (L, 1)."""
        const = np.asarray(const, dtype=np.int64) % self._pc
        out = self._new_a(self._size(x))
        self.c.a_gates.append(("mul_const", out, x, const))
        return out

    def a_ring_mul(self, x: int, poly_res: np.ndarray) -> int:
        """Negacyclic product with a public polynomial given as residues (L, N)."""
        key = poly_res.tobytes()
        if key not in self._ntt_cache:
            self._ntt_cache[key] = rns_ntt(np.asarray(poly_res, dtype=np.int64), self.c.primes)
        out = self._new_a(self._size(x))
        self.c.a_gates.append(("ring_mul", out, x, self._ntt_cache[key]))
        return out

    def a_matmul(self, x: int, mat: np.ndarray) -> int:
        """Public integer matrix (r, n) applied to an n-vector wire."""
        mat = np.asarray(mat, dtype=np.int64)
        if mat.shape[1] != self._size(x):
            raise CircuitError("matrix shape mismatch")
        out = self._new_a(mat.shape[0])
        self.c.a_gates.append(("matmul", out, x, mat))
        return out

    def a_mul(self, x: int, y: int) -> int:
        if self._size(x) != self._size(y):
            raise CircuitError("size mismatch")
        out = self._new_a(self._size(x))
        self.c.a_gates.append(("mul", out, x, y))
        return out

    def a_output(self, w: int):
        self.c.a_outputs.append(w)

    # Boolean --------------------------------------------------------
    def _new_b(self) -> int:
        self.c.n_bool += 1
        return self.c.n_bool - 1

    def b_input(self) -> int:
        w = self._new_b()
        self.c.b_inputs.append(w)
        return w

    def b_inputs(self, n: int) -> list[int]:
        return [self.b_input() for _ in range(n)]

    def wrap_hint(self, x: int, elem: int) -> tuple[int, int]:
        """Two Boolean inputs holding the wrap count w of x0+x1+x2 = x + w*q, one-hot (w==1, w==2).

        The prover fills them per iteration from its own shares, so they are not
        part of the caller's Boolean inputs. Circuits using them must make a wrong
        value detectable.
        """
        if x not in self.c.a_inputs:
            raise CircuitError("wrap hints need an arithmetic input wire")
        w1, w2 = self._new_b(), self._new_b()
        self.c.b_inputs += [w1, w2]
        self.c.hints.append((x, elem, w1, w2))
        return w1, w2

    def share_bits(self, x: int, elem: int, player: int) -> list[int]:
        """Bits (LSB first) of `player`'s share of element `elem` of wire x; zero for others."""
        if not 0 <= player < 3:
            raise CircuitError("player index out of range")
        first = self.c.n_bool
        self.c.bit_reqs.append((x, elem, player, first))
        self.c.n_bool += self.c.qbits
        return list(range(first, first + self.c.qbits))

    def xor(self, a: int, b: int) -> int:
        if a < 0 and b < 0:
            return ZERO if a == b else ONE
        if a < 0:
            a, b = b, a
        if b == ZERO:
            return a
        if b == ONE:
            return self.not_(a)
        if a == b:
            return ZERO
        out = self._new_b()
        self.c.b_gates.append((XOR, out, a, b))
        return out

    def and_(self, a: int, b: int) -> int:
        if a < 0:
            a, b = b, a
        if b == ZERO:
            return ZERO
        if b == ONE:
            return a
        if a == b:
            return a
        out = self._new_b()
        self.c.b_gates.append((AND, out, a, b))
        return out

    def not_(self, a: int) -> int:
        if a == ZERO:
            return ONE
        if a == ONE:
            return ZERO
        out = self._new_b()
        self.c.b_gates.append((NOT, out, a, -1))
        return out

    def const(self, bit: int) -> int:
        return ONE if bit else ZERO

    def materialize(self, a: int) -> int:
        """Turn a constant into a real wire (needed for outputs)."""
        if a >= 0:
            return a
        # x xor x is 0 for any wire x; reuse the first available wire
        if self.c.n_bool == 0:
            raise CircuitError("no wire to derive a constant from")
        zero = self._new_b()
        self.c.b_gates.append((XOR, zero, 0, 0))
        if a == ZERO:
            return zero
        out = self._new_b()
        self.c.b_gates.append((NOT, out, zero, -1))
        return out

    def b_output(self, a: int):
        self.c.b_outputs.append(self.materialize(a))

    def build(self) -> CircuitDesc:
        c = self.c
        for w in c.a_outputs:
            if not 0 <= w < len(c.a_sizes):
                raise CircuitError("bad arithmetic output")
        return c


# ---------------------------------------------------------------- compilation

@dataclass
class _Compiled:
    n_slots: int
    preload: list          # slot for each preloaded wire (inputs, then share bits)
    ops: list
    xs: list
    ys: list
    outs: list
    b_out_slots: list
    a_last_use: dict


def compile_circuit(c: CircuitDesc) -> _Compiled:
    """Assign register slots to Boolean wires so dead values can be dropped."""
    if c._compiled is not None:
        return c._compiled
    last = {}
    for gi, (op, out, a, b) in enumerate(c.b_gates):
        last[a] = gi
        if op != NOT:
            last[b] = gi
    keep = set(c.b_outputs)
    preload_wires = list(c.b_inputs)
    for (_, _, _, first) in c.bit_reqs:
        preload_wires.extend(range(first, first + c.qbits))
    slot = {}
    free: list[int] = []
    n_slots = 0

    def alloc():
        nonlocal n_slots
        if free:
            return free.pop()
        n_slots += 1
        return n_slots - 1

    for w in preload_wires:
        slot[w] = alloc()
    # preloaded wires never used by a gate are dead immediately (unless outputs)
    for w in preload_wires:
        if w not in last and w not in keep:
            free.append(slot[w])
    ops, xs, ys, outs = [], [], [], []
    for gi, (op, out, a, b) in enumerate(c.b_gates):
        sa = slot[a]
        sb = slot[b] if op != NOT else -1
        # release operands whose last use is this gate before allocating the output
        for w in ((a,) if op == NOT else (a, b)):
            if last.get(w) == gi and w not in keep:
                free.append(slot[w])
                last[w] = -1
        so = alloc()
        slot[out] = so
        if out not in last and out not in keep:
            free.append(so)
        ops.append(op)
        xs.append(sa)
        ys.append(sb)
        outs.append(so)
    a_last = {}
    for gi, g in enumerate(c.a_gates):
        a_last[g[2]] = gi
        if g[0] in ("add", "sub", "mul"):
            a_last[g[3]] = gi
    comp = _Compiled(n_slots, [slot[w] for w in preload_wires], ops, xs, ys, outs,
                     [slot[w] for w in c.b_outputs], a_last)
    c._compiled = comp
    return comp


# ---------------------------------------------------------------- tapes

def expand(seed: bytes, label: bytes, nbytes: int) -> bytes:
    """SHA-256 in counter mode keyed by the seed."""
    if nbytes <= 0:
        return b""
    prefix = seed + b"|" + label + b"|"
    sha = hashlib.sha256
    n = (nbytes + 31) // 32
    return b"".join(sha(prefix + i.to_bytes(4, "big")).digest() for i in range(n))[:nbytes]


def tape_residues(seed: bytes, label: bytes, count: int, primes: Sequence[int]) -> np.ndarray:
    """Pseudorandom residues shaped (L, count), one 64-bit word per residue."""
    L = len(primes)
    raw = np.frombuffer(expand(seed, label, 8 * L * count), dtype="<u8").reshape(L, count)
    pc = np.array(primes, dtype=np.uint64)[:, None]
    return (raw % pc).astype(np.int64)


def tape_bits(seed: bytes, label: bytes, count: int) -> np.ndarray:
    raw = np.frombuffer(expand(seed, label, (count + 7) // 8), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:count]


# ---------------------------------------------------------------- bit-slicing helpers

def slice_bits(bits: np.ndarray) -> list[int]:
    """bits shaped (T, n) -> n ints with bit i = bits[i, j]."""
    T, n = bits.shape
    if n == 0:
        return []
    packed = np.packbits(np.ascontiguousarray(bits.T), axis=1, bitorder="little")
    nb = packed.shape[1]
    raw = packed.tobytes()
    fb = int.from_bytes
    return [fb(raw[j * nb:(j + 1) * nb], "little") for j in range(n)]


def unslice_bytes(buf: bytes, n: int, T: int) -> np.ndarray:
    """Inverse of the per-gate int packing: buf holds n records of ceil(T/8) bytes -> (T, n) bits."""
    nb = (T + 7) // 8
    if n == 0:
        return np.zeros((T, 0), dtype=np.uint8)
    arr = np.frombuffer(buf, dtype=np.uint8).reshape(n, nb)
    return np.ascontiguousarray(np.unpackbits(arr, axis=1, bitorder="little")[:, :T].T)


def ints_to_buf(vals: Sequence[int], T: int) -> bytes:
    nb = (T + 7) // 8
    return b"".join(v.to_bytes(nb, "little") for v in vals)


def pack_elems(res: np.ndarray, primes: Sequence[int], qbits: int) -> np.ndarray:
    """RNS array (..., L, n) -> bits (..., n*qbits) little endian per element."""
    bits = crt_to_bits(res, primes, qbits)
    return bits.reshape(res.shape[:-2] + (-1,))


def unpack_elems(bits: np.ndarray, primes: Sequence[int], qbits: int, n: int) -> tuple[np.ndarray, bool]:
    """bits (n*qbits,) -> residues (L, n); the flag reports a non-canonical value >= q."""
    b = bits[: n * qbits].reshape(n, qbits).astype(np.int64)
    nl = (qbits + 15) // 16
    padded = np.zeros((n, nl * 16), dtype=np.int64)
    padded[:, :qbits] = b
    limbs = (padded.reshape(n, nl, 16) << np.arange(16)).sum(axis=2)
    out = np.empty((len(primes), n), dtype=np.int64)
    for i, p in enumerate(primes):
        acc = np.zeros(n, dtype=np.int64)
        for j in range(nl - 1, -1, -1):
            acc = (acc * (1 << 16) + limbs[:, j]) % p
        out[i] = acc
    q = math.prod(primes)
    qlimbs = [(q >> (16 * j)) & 0xFFFF for j in range(nl)]
    # lexicographic compare against q from the top limb
    less = np.zeros(n, dtype=bool)
    decided = np.zeros(n, dtype=bool)
    for j in range(nl - 1, -1, -1):
        lt = (~decided) & (limbs[:, j] < qlimbs[j])
        gt = (~decided) & (limbs[:, j] > qlimbs[j])
        less |= lt
        decided |= lt | gt
    return out, bool(np.all(less))


def _merge_hints(c: CircuitDesc, user_bits: list, hint_vals: dict) -> list:
    """Interleave caller-supplied Boolean inputs with the prover-filled hint wires."""
    hint_wires = {}
    for (_, _, w1, w2) in c.hints:
        hint_wires[w1] = hint_vals.get(w1, 0)
        hint_wires[w2] = hint_vals.get(w2, 0)
    it = iter(user_bits)
    return [hint_wires[w] if w in hint_wires else next(it) for w in c.b_inputs]


def _wrap_counts(c: CircuitDesc, shares, a_in) -> dict:
    """Bit-sliced one-hot wrap counts for every hint, from the three players' input shares."""
    if not c.hints:
        return {}
    primes = c.primes
    q = math.prod(primes)
    inv = np.array([pow(q // p, -1, p) for p in primes], dtype=np.int64)
    pf = np.array(primes, dtype=np.float64)
    pos = {w: k for k, w in enumerate(c.a_inputs)}
    out = {}
    for (x, e, w1, w2) in c.hints:
        k = pos[x]
        total = 0.0
        for sh in shares:
            r = sh[k][0, :, :, e]                                   # (T, L)
            s = r * inv % np.array(primes, dtype=np.int64)
            f = (s / pf).sum(axis=1)
            total = total + (f - np.floor(f))
        xv = int(crt_int(a_in[k][:, e], primes))
        w = np.rint(total - xv / q).astype(np.int64)
        if np.any((w < 0) | (w > 2)):
            raise CircuitError("wrap count out of range")
        out[w1] = sum(1 << int(i) for i in np.flatnonzero(w == 1))
        out[w2] = sum(1 << int(i) for i in np.flatnonzero(w == 2))
    return out


def crt_int(res: np.ndarray, primes: Sequence[int]) -> int:
    q = math.prod(primes)
    return sum(int(r) * (q // p) * pow(q // p, -1, p) for r, p in zip(res, primes)) % q


# ---------------------------------------------------------------- evaluation

def evaluate(c: CircuitDesc, a_in: Sequence[np.ndarray], b_in: Sequence[int]):
    """Plain evaluation: returns (arith outputs as (L, n) arrays, Boolean output bits)."""
    a_sh = [np.asarray(x, dtype=np.int64)[None, None] for x in a_in]
    b_sh = _merge_hints(c, [int(b) & 1 for b in b_in], {})
    outs = _eval_shares(c, [a_sh], [b_sh], [[]], [[]], np.ones(1, dtype=bool)[None], T=1, mode="plain")
    ya, yb, _, _ = outs
    return [y[0, 0] for y in ya], [int(v) & 1 for v in yb[0]]


def _arith_eval(c: CircuitDesc, vals: dict, players: int, const_mask: np.ndarray, mul_rand, mul_view, mode):
    """Evaluate the arithmetic gates. vals maps wire -> (P, T, L, n) arrays.

    const_mask (P, T) says which entries belong to player 0 (who adds constants).
    mode: 'plain' (one player), 'prove' (three players), 'verify' (slots A, B).
    """
    primes = c.primes
    pc = prime_column(primes)
    comp = compile_circuit(c)
    keep = set(c.a_outputs) | {r[0] for r in c.bit_reqs}
    mul_idx = 0
    mul_out = []
    for gi, g in enumerate(c.a_gates):
        op, out, x = g[0], g[1], g[2]
        xv = vals[x]
        if op == "add":
            r = (xv + vals[g[3]]) % pc
        elif op == "sub":
            r = (xv - vals[g[3]]) % pc
        elif op == "add_const":
            r = (xv + g[3] * const_mask[:, :, None, None]) % pc
        elif op == "mul_const":
            r = xv * g[3] % pc
        elif op == "ring_mul":
            r = rns_intt(rns_ntt(xv, primes) * g[3] % pc, primes)
        elif op == "matmul":
            P, T, L, n = xv.shape
            flat = xv.reshape(P * T, L, n)
            r = np.empty((P * T, L, g[3].shape[0]), dtype=np.int64)
            for i, p in enumerate(primes):
                r[:, i, :] = mod_matmul(g[3] % p, flat[:, i, :].T, p).T
            r = r.reshape(P, T, L, -1)
        elif op == "mul":
            yv = vals[g[3]]
            if mode == "plain":
                r = xv * yv % pc
            else:
                R = mul_rand(mul_idx)               # (P, T, L, n)
                if mode == "prove":
                    x1 = np.roll(xv, -1, axis=0)
                    y1 = np.roll(yv, -1, axis=0)
                    R1 = np.roll(R, -1, axis=0)
                    r = (xv * yv % pc + x1 * yv % pc + xv * y1 % pc + R - R1) % pc
                else:
                    zA = (xv[0] * yv[0] % pc + xv[1] * yv[0] % pc + xv[0] * yv[1] % pc + R[0] - R[1]) % pc
                    r = np.stack([zA, mul_view(mul_idx)])
                mul_out.append(r)
            mul_idx += 1
        else:
            raise CircuitError(f"unknown arithmetic gate {op}")
        vals[out] = r
        for w in ((x, g[3]) if op in ("add", "sub", "mul") else (x,)):
            if comp.a_last_use.get(w) == gi and w not in keep:
                vals.pop(w, None)
    return mul_out


def _eval_shares(c: CircuitDesc, a_sh, b_sh, and_rand, and_view, player_of, T: int, mode: str,
                 mul_rand=None, mul_view=None):
    """Shared evaluation core.

    a_sh[p][k]: arith input k for player/slot p as (1, T, L, n) arrays.
    b_sh[p][k]: bit-sliced Boolean input ints.
    player_of: (P, T) int array of which player sits in each slot (or a bool mask in plain mode).
    """
    comp = compile_circuit(c)
    P = len(a_sh)
    full = (1 << T) - 1
    if mode == "plain":
        const_mask = np.ones((1, 1), dtype=np.int64)
    else:
        const_mask = (player_of == 0).astype(np.int64)
    vals = {}
    for k, w in enumerate(c.a_inputs):
        vals[w] = np.concatenate([a_sh[p][k] for p in range(P)], axis=0)
    mul_out = _arith_eval(c, vals, P, const_mask, mul_rand, mul_view, mode)
    ya = [vals[w] for w in c.a_outputs]

    # share_bits: each slot holds its own share's bits when it is the designated player
    regs = [[0] * comp.n_slots for _ in range(P)]
    for p in range(P):
        for k, s in enumerate(comp.preload[: len(c.b_inputs)]):
            regs[p][s] = b_sh[p][k]
    if c.bit_reqs:
        qb = c.qbits
        base = len(c.b_inputs)
        for p in range(P):
            stack = np.stack([vals[x][p, :, :, e] for (x, e, _, _) in c.bit_reqs], axis=-1)  # (T, L, R)
            bits = crt_to_bits(stack, c.primes, qb)                                       # (T, R, qb)
            if mode == "plain":
                # a plain run behaves as if player 1 held the whole value
                own = np.array([[pl == 0] for (_, _, pl, _) in c.bit_reqs], dtype=bool)
            else:
                own = np.stack([player_of[p] == pl for (_, _, pl, _) in c.bit_reqs])      # (R, T)
            bits = bits * own.T[:, :, None]
            ints = slice_bits(bits.reshape(T, -1))
            for j, v in enumerate(ints):
                regs[p][comp.preload[base + j]] = v
    if mode == "prove":
        yb, views = _bool_prove(comp, regs, and_rand, full, T)
    elif mode == "verify":
        yb, views = _bool_verify(comp, regs, and_rand, and_view, player_of, full, T)
    else:
        yb, views = _bool_plain(comp, regs[0]), None
    return ya, yb, views, mul_out


def _bool_plain(comp: _Compiled, r: list):
    for op, a, b, o in zip(comp.ops, comp.xs, comp.ys, comp.outs):
        if op == XOR:
            r[o] = r[a] ^ r[b]
        elif op == AND:
            r[o] = r[a] & r[b]
        else:
            r[o] = r[a] ^ 1
    return [[r[s] for s in comp.b_out_slots]]


def _bool_prove(comp: _Compiled, regs, and_rand, full: int, T: int):
    r0, r1, r2 = regs
    R0, R1, R2 = and_rand           # bytes, ceil(T/8) per AND gate
    nb = (T + 7) // 8
    fb = int.from_bytes
    v0, v1, v2 = bytearray(), bytearray(), bytearray()
    g = 0
    for op, a, b, o in zip(comp.ops, comp.xs, comp.ys, comp.outs):
        if op == XOR:
            r0[o] = r0[a] ^ r0[b]
            r1[o] = r1[a] ^ r1[b]
            r2[o] = r2[a] ^ r2[b]
        elif op == AND:
            a0, a1, a2 = r0[a], r1[a], r2[a]
            b0, b1, b2 = r0[b], r1[b], r2[b]
            lo, hi = g * nb, g * nb + nb
            t0 = fb(R0[lo:hi], "little")
            t1 = fb(R1[lo:hi], "little")
            t2 = fb(R2[lo:hi], "little")
            z0 = (a0 & (b0 ^ b1)) ^ (a1 & b0) ^ t0 ^ t1
            z1 = (a1 & (b1 ^ b2)) ^ (a2 & b1) ^ t1 ^ t2
            z2 = (a2 & (b2 ^ b0)) ^ (a0 & b2) ^ t2 ^ t0
            r0[o], r1[o], r2[o] = z0, z1, z2
            v0 += z0.to_bytes(nb, "little")
            v1 += z1.to_bytes(nb, "little")
            v2 += z2.to_bytes(nb, "little")
            g += 1
        else:
            r0[o] = r0[a] ^ full
            r1[o] = r1[a]
            r2[o] = r2[a]
    outs = [[r[s] for s in comp.b_out_slots] for r in (r0, r1, r2)]
    return outs, (bytes(v0), bytes(v1), bytes(v2))


def _bool_verify(comp: _Compiled, regs, and_rand, and_view, player_of, full: int, T: int):
    rA, rB = regs
    RA, RB = and_rand
    VB = and_view                  # bytes, ceil(T/8) per AND gate, slot B's outputs
    nb = (T + 7) // 8
    fb = int.from_bytes
    notA = sum(1 << i for i in range(T) if player_of[0, i] == 0)
    notB = sum(1 << i for i in range(T) if player_of[1, i] == 0)
    vA = bytearray()
    g = 0
    for op, a, b, o in zip(comp.ops, comp.xs, comp.ys, comp.outs):
        if op == XOR:
            rA[o] = rA[a] ^ rA[b]
            rB[o] = rB[a] ^ rB[b]
        elif op == AND:
            aA, aB = rA[a], rB[a]
            bA, bB = rA[b], rB[b]
            lo, hi = g * nb, g * nb + nb
            zA = (aA & (bA ^ bB)) ^ (aB & bA) ^ fb(RA[lo:hi], "little") ^ fb(RB[lo:hi], "little")
            rA[o] = zA
            rB[o] = fb(VB[lo:hi], "little")
            vA += zA.to_bytes(nb, "little")
            g += 1
        else:
            rA[o] = rA[a] ^ notA
            rB[o] = rB[a] ^ notB
    outs = [[r[s] for s in comp.b_out_slots] for r in (rA, rB)]
    return outs, bytes(vA)


# ---------------------------------------------------------------- proof object

@dataclass
class IterRecord:
    commit: bytes           # C_{e+2}
    seed_a: bytes           # k_e
    seed_b: bytes           # k_{e+1}
    x3: bytes               # player 3 input share, present iff e in {1, 2} (0-based)
    view_and: bytes         # AND outputs of player e+1, one bit each
    view_mul: bytes         # mul outputs of player e+1, qbits each


@dataclass
class ZkProof:
    kappa: int
    t: int
    circuit_hash: bytes
    trits: list
    records: list

    def to_bytes(self) -> bytes:
        out = [ZK_MAGIC, struct.pack(">BHH", ZK_VERSION, self.kappa, self.t), self.circuit_hash,
               pack_trits(self.trits)]
        for r in self.records:
            out += [r.commit, r.seed_a, r.seed_b, r.x3, r.view_and, r.view_mul]
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes, c: CircuitDesc) -> "ZkProof":
        if data[:4] != ZK_MAGIC:
            raise CircuitError("bad proof magic")
        version, kappa, t = struct.unpack(">BHH", data[4:9])
        if version != ZK_VERSION or kappa % 8 or t == 0:
            raise CircuitError("bad proof header")
        chash = data[9:41]
        tb = trit_bytes(t)
        trits = unpack_trits(data[41:41 + tb], t)
        pos = 41 + tb
        sb = kappa // 8
        base, x3b = c.record_sizes(kappa)
        and_b = (c.n_and + 7) // 8
        mul_b = (c.n_mul_elems * c.qbits + 7) // 8
        recs = []
        for e in trits:
            take = lambda k: data[pos:pos + k]
            cm = take(32); pos += 32
            sa = data[pos:pos + sb]; pos += sb
            sbb = data[pos:pos + sb]; pos += sb
            x3 = b""
            if e in (1, 2):
                x3 = data[pos:pos + x3b]; pos += x3b
            va = data[pos:pos + and_b]; pos += and_b
            vm = data[pos:pos + mul_b]; pos += mul_b
            recs.append(IterRecord(cm, sa, sbb, x3, va, vm))
        if pos != len(data):
            raise CircuitError("proof length mismatch")
        return cls(kappa, t, chash, trits, recs)


def pack_trits(trits: Sequence[int]) -> bytes:
    v = 0
    for x in reversed(trits):
        v = v * 3 + int(x)
    return v.to_bytes(trit_bytes(len(trits)), "big")


def unpack_trits(data: bytes, t: int) -> list[int]:
    v = int.from_bytes(data, "big")
    out = []
    for _ in range(t):
        v, r = divmod(v, 3)
        out.append(r)
    if v:
        raise CircuitError("trit encoding out of range")
    return out


def derive_trits(digest: bytes, t: int) -> list[int]:
    """Rejection-sample t trits from 2-bit chunks of a hash stream."""
    out = []
    ctr = 0
    while len(out) < t:
        block = hashlib.sha256(digest + ctr.to_bytes(4, "big")).digest()
        ctr += 1
        for byte in block:
            for sh in (0, 2, 4, 6):
                v = (byte >> sh) & 3
                if v < 3:
                    out.append(v)
                    if len(out) == t:
                        return out
    return out


# ---------------------------------------------------------------- serialization of shares

def _y_bytes(c: CircuitDesc, ya: list, yb: list, slot: int, T: int) -> list[bytes]:
    """Per-iteration serialization of one player's output shares."""
    parts = [np.ascontiguousarray(y[slot]).astype(">i8") for y in ya]   # (T, L, n) each
    if yb:
        bits = unslice_bytes(ints_to_buf(yb[slot], T), len(yb[slot]), T)
        bpk = np.packbits(bits, axis=1, bitorder="little")
    out = []
    for i in range(T):
        chunk = b"".join(p[i].tobytes() for p in parts)
        if yb:
            chunk += bpk[i].tobytes()
        out.append(chunk)
    return out


def _public_y_bytes(c: CircuitDesc, ya: Sequence[np.ndarray], yb: Sequence[int]) -> bytes:
    out = b"".join(np.asarray(y, dtype=np.int64).astype(">i8").tobytes() for y in ya)
    if yb:
        out += np.packbits(np.array(yb, dtype=np.uint8), bitorder="little").tobytes()
    return out


def _x3_bytes(c: CircuitDesc, a_sh2: list, b_sh2: list, T: int) -> list[bytes]:
    """Pack player 3's input shares per iteration."""
    qb = c.qbits
    parts = []
    for arr in a_sh2:                          # (1, T, L, n)
        parts.append(pack_elems(arr[0], c.primes, qb))      # (T, n*qb)
    if b_sh2:
        parts.append(unslice_bytes(ints_to_buf(b_sh2, T), len(b_sh2), T))
    bits = np.concatenate(parts, axis=1) if parts else np.zeros((T, 0), dtype=np.uint8)
    packed = np.packbits(bits, axis=1, bitorder="little")
    return [packed[i].tobytes() for i in range(T)]


def _parse_x3(c: CircuitDesc, blob: bytes):
    qb = c.qbits
    bits = np.unpackbits(np.frombuffer(blob, dtype=np.uint8), bitorder="little")
    pos = 0
    arith = []
    ok = True
    for w in c.a_inputs:
        n = c.a_sizes[w]
        res, canon = unpack_elems(bits[pos:pos + n * qb], c.primes, qb, n)
        ok &= canon
        arith.append(res)
        pos += n * qb
    boolean = bits[pos:pos + len(c.b_inputs)]
    ok &= int(bits[pos + len(c.b_inputs):].sum()) == 0
    return arith, boolean, ok


def _mul_bytes(c: CircuitDesc, mul_out: list, slot: int, T: int) -> list[bytes]:
    if not mul_out:
        return [b""] * T
    bits = np.concatenate([pack_elems(m[slot], c.primes, c.qbits) for m in mul_out], axis=1)
    packed = np.packbits(bits, axis=1, bitorder="little")
    return [packed[i].tobytes() for i in range(T)]


def _and_bytes_per_iter(view: bytes, n_and: int, T: int) -> list[bytes]:
    bits = unslice_bytes(view, n_and, T)             # (T, n_and)
    packed = np.packbits(bits, axis=1, bitorder="little")
    return [packed[i].tobytes() for i in range(T)]


def _commit(seed: bytes, x3: bytes, view_and: bytes, view_mul: bytes) -> bytes:
    h = hashlib.sha256(b"crisp-view|")
    h.update(seed)
    h.update(struct.pack(">I", len(x3)))
    h.update(x3)
    h.update(view_and)
    h.update(view_mul)
    return h.digest()


def _challenge(c: CircuitDesc, y_pub: bytes, a_digests: Sequence[bytes], t: int) -> list[int]:
    h = hashlib.sha256(b"crisp-zkb-fs|")
    h.update(c.digest())
    h.update(hashlib.sha256(y_pub).digest())
    for d in a_digests:
        h.update(d)
    return derive_trits(h.digest(), t)


def _a_digest(ys: Sequence[bytes], cs: Sequence[bytes]) -> bytes:
    h = hashlib.sha256(b"crisp-a|")
    for y in ys:
        h.update(hashlib.sha256(y).digest())
    for cm in cs:
        h.update(cm)
    return h.digest()


# ---------------------------------------------------------------- tape bundles

def _seed(master: bytes, i: int, p: int, kappa: int) -> bytes:
    return hashlib.sha256(master + struct.pack(">II", i, p)).digest()[: kappa // 8]


def _input_shares(c: CircuitDesc, seeds: Sequence[bytes]):
    """Tape-derived input shares for a list of per-iteration seeds (players 1, 2)."""
    T = len(seeds)
    n_a = c.n_arith_in
    L = c.L
    a = np.empty((T, L, n_a), dtype=np.int64)
    bbits = np.empty((T, len(c.b_inputs)), dtype=np.uint8)
    for i, s in enumerate(seeds):
        if n_a:
            a[i] = tape_residues(s, b"in-a", n_a, c.primes)
        bbits[i] = tape_bits(s, b"in-b", len(c.b_inputs))
    out_a = []
    pos = 0
    for w in c.a_inputs:
        n = c.a_sizes[w]
        out_a.append(a[None, :, :, pos:pos + n])
        pos += n
    return out_a, slice_bits(bbits)


def _and_tapes(seeds: Sequence[bytes], n_and: int) -> bytes:
    T = len(seeds)
    if n_and == 0:
        return b""
    bits = np.stack([tape_bits(s, b"and", n_and) for s in seeds])      # (T, n_and)
    packed = np.packbits(np.ascontiguousarray(bits.T), axis=1, bitorder="little")
    return packed.tobytes()


def _mul_tapes(c: CircuitDesc, seeds: Sequence[bytes]):
    """Returns a function idx -> (1, T, L, n) randomness for the idx-th mul gate."""
    sizes = [c.a_sizes[g[1]] for g in c.a_gates if g[0] == "mul"]
    if not sizes:
        return lambda idx: None
    total = sum(sizes)
    arr = np.stack([tape_residues(s, b"mul", total, c.primes) for s in seeds])   # (T, L, total)
    offs = np.cumsum([0] + sizes)
    return lambda idx: arr[None, :, :, offs[idx]:offs[idx + 1]]


# ---------------------------------------------------------------- prove / verify

def _check_inputs(c: CircuitDesc, a_in, b_in):
    if len(a_in) != len(c.a_inputs) or len(b_in) != len(c.b_inputs) - 2 * len(c.hints):
        raise CircuitError("input layout mismatch")
    out = []
    for w, x in zip(c.a_inputs, a_in):
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (c.L, c.a_sizes[w]):
            raise CircuitError("arithmetic input has wrong shape")
        out.append(x % prime_column(c.primes))
    return out


def prove(c: CircuitDesc, a_in: Sequence[np.ndarray], b_in: Sequence[int], y_a, y_b, kappa: int = 128,
          seed: bytes = b"", t: int | None = None, forge: bool = False) -> ZkProof:
    """Prove knowledge of (a_in, b_in) with circuit output (y_a, y_b).

    forge=True is a cheating prover for test harnesses: it skips the output
    check and patches player 3's output shares so the claimed outputs
    reconstruct. Such a proof survives an iteration only when player 3 stays closed.
    """
    a_in = _check_inputs(c, a_in, b_in)
    ya_plain, yb_plain = evaluate(c, a_in, b_in) if not forge else (y_a, y_b)
    if len(ya_plain) != len(y_a) or any(not np.array_equal(u, np.asarray(v) % prime_column(c.primes))
                                        for u, v in zip(ya_plain, y_a)) \
            or list(yb_plain) != [int(b) for b in y_b]:
        raise CircuitError("circuit output does not match the claimed statement")
    t = iterations(kappa) if t is None else t
    T = t
    master = hashlib.sha256(b"crisp-zkb-master|" + seed + c.digest()).digest()
    seeds = [[_seed(master, i, p, kappa) for i in range(T)] for p in range(3)]
    pc = prime_column(c.primes)
    # shares: players 0 and 1 from tapes, player 2 fixes the sum
    a0, b0 = _input_shares(c, seeds[0])
    a1, b1 = _input_shares(c, seeds[1])
    full = (1 << T) - 1
    a2 = [(x[None, None] - s0 - s1) % pc for x, s0, s1 in zip(a_in, a0, a1)]
    b_full = _merge_hints(c, [full if b else 0 for b in b_in], _wrap_counts(c, [a0, a1, a2], a_in))
    b2 = [bit ^ s0 ^ s1 for bit, s0, s1 in zip(b_full, b0, b1)]
    and_r = [_and_tapes(seeds[p], c.n_and) for p in range(3)]
    mt = [_mul_tapes(c, seeds[p]) for p in range(3)]
    mul_rand = (lambda idx: np.concatenate([mt[p](idx) for p in range(3)], axis=0))
    player_of = np.repeat(np.arange(3)[:, None], T, axis=1)
    ya, yb, views, mul_out = _eval_shares(c, [a0, a1, a2], [b0, b1, b2], and_r, None, player_of, T,
                                          "prove", mul_rand=mul_rand)
    if forge:
        for k, y in enumerate(y_a):
            ya[k][2] = (np.asarray(y)[None] - ya[k][0] - ya[k][1]) % pc
        yb[2] = [(full if bit else 0) ^ u ^ v for bit, u, v in zip(y_b, yb[0], yb[1])]
    x3 = _x3_bytes(c, a2, b2, T)
    y_ser = [_y_bytes(c, ya, yb, p, T) for p in range(3)]
    and_it = [_and_bytes_per_iter(views[p], c.n_and, T) for p in range(3)]
    mul_it = [_mul_bytes(c, mul_out, p, T) for p in range(3)]
    commits = [[_commit(seeds[p][i], x3[i] if p == 2 else b"", and_it[p][i], mul_it[p][i])
                for i in range(T)] for p in range(3)]
    a_dig = [_a_digest([y_ser[p][i] for p in range(3)], [commits[p][i] for p in range(3)]) for i in range(T)]
    y_pub = _public_y_bytes(c, [np.asarray(v) % pc for v in y_a], list(y_b))
    trits = _challenge(c, y_pub, a_dig, T)
    recs = []
    for i, e in enumerate(trits):
        pa, pb, pcmt = e, (e + 1) % 3, (e + 2) % 3
        recs.append(IterRecord(commits[pcmt][i], seeds[pa][i], seeds[pb][i],
                               x3[i] if e in (1, 2) else b"", and_it[pb][i], mul_it[pb][i]))
    return ZkProof(kappa, T, c.digest(), trits, recs)


def verify(c: CircuitDesc, y_a, y_b, proof: ZkProof) -> bool:
    try:
        return _verify(c, y_a, y_b, proof)
    except (CircuitError, ValueError, IndexError, KeyError):
        return False


def _verify(c: CircuitDesc, y_a, y_b, proof: ZkProof) -> bool:
    if proof.circuit_hash != c.digest() or proof.kappa % 8 or proof.kappa < 8:
        return False
    T = proof.t
    if len(proof.trits) != T or len(proof.records) != T:
        return False
    sb = proof.kappa // 8
    pc = prime_column(c.primes)
    y_a = [np.asarray(v, dtype=np.int64) % pc for v in y_a]
    y_b = [int(b) & 1 for b in y_b]
    if len(y_a) != len(c.a_outputs) or len(y_b) != len(c.b_outputs):
        return False
    e = np.array(proof.trits, dtype=np.int64)
    if np.any((e < 0) | (e > 2)):
        return False
    player_of = np.stack([e, (e + 1) % 3])
    seeds_a = [r.seed_a for r in proof.records]
    seeds_b = [r.seed_b for r in proof.records]
    if any(len(s) != sb for s in seeds_a + seeds_b):
        return False
    # input shares per slot: tapes for players 0/1, x3 from the proof for player 2
    a_from_a, b_from_a = _input_shares(c, seeds_a)
    a_from_b, b_from_b = _input_shares(c, seeds_b)
    n_b = len(c.b_inputs)
    x3_a = [np.zeros((1, T, c.L, c.a_sizes[w]), dtype=np.int64) for w in c.a_inputs]
    x3_bits = np.zeros((T, n_b), dtype=np.uint8)
    _, x3len = c.record_sizes(proof.kappa)
    for i, r in enumerate(proof.records):
        if proof.trits[i] in (1, 2):
            if len(r.x3) != x3len:
                return False
            arith, boolean, ok = _parse_x3(c, r.x3)
            if not ok:
                return False
            for k, arr in enumerate(arith):
                x3_a[k][0, i] = arr
            x3_bits[i] = boolean
        elif r.x3:
            return False
    x3_b = slice_bits(x3_bits)
    is2_A = (player_of[0] == 2)
    is2_B = (player_of[1] == 2)
    mA = is2_A[None, :, None, None]
    mB = is2_B[None, :, None, None]
    aA = [np.where(mA, x3, s) for x3, s in zip(x3_a, a_from_a)]
    aB = [np.where(mB, x3, s) for x3, s in zip(x3_a, a_from_b)]
    m2A = sum(1 << i for i in range(T) if is2_A[i])
    m2B = sum(1 << i for i in range(T) if is2_B[i])
    bA = [(x & m2A) | (s & ~m2A) for x, s in zip(x3_b, b_from_a)]
    bB = [(x & m2B) | (s & ~m2B) for x, s in zip(x3_b, b_from_b)]
    and_b = (c.n_and + 7) // 8
    if any(len(r.view_and) != and_b for r in proof.records):
        return False
    and_rand = (_and_tapes(seeds_a, c.n_and), _and_tapes(seeds_b, c.n_and))
    vb_bits = np.stack([np.unpackbits(np.frombuffer(r.view_and, dtype=np.uint8), bitorder="little")[: c.n_and]
                        for r in proof.records]) if c.n_and else np.zeros((T, 0), dtype=np.uint8)
    vb_ints = slice_bits(vb_bits)
    view_buf = ints_to_buf(vb_ints, T)
    # mul gates
    mtA, mtB = _mul_tapes(c, seeds_a), _mul_tapes(c, seeds_b)
    mul_sizes = [c.a_sizes[g[1]] for g in c.a_gates if g[0] == "mul"]
    mul_b = (c.n_mul_elems * c.qbits + 7) // 8
    mul_views = []
    if mul_sizes:
        per_it = []
        for r in proof.records:
            if len(r.view_mul) != mul_b:
                return False
            bits = np.unpackbits(np.frombuffer(r.view_mul, dtype=np.uint8), bitorder="little")
            pos = 0
            gates = []
            for n in mul_sizes:
                res, ok = unpack_elems(bits[pos:pos + n * c.qbits], c.primes, c.qbits, n)
                if not ok:
                    return False
                gates.append(res)
                pos += n * c.qbits
            per_it.append(gates)
        mul_views = [np.stack([per_it[i][k] for i in range(T)]) for k in range(len(mul_sizes))]
    elif any(r.view_mul for r in proof.records):
        return False
    mul_rand = (lambda idx: np.concatenate([mtA(idx), mtB(idx)], axis=0))
    mul_view = (lambda idx: mul_views[idx])
    ya, yb, vA, mul_out = _eval_shares(c, [aA, aB], [bA, bB], and_rand, view_buf, player_of, T, "verify",
                                       mul_rand=mul_rand, mul_view=mul_view)
    # third player's outputs follow from the public output
    full = (1 << T) - 1
    yC_a = [(y[None, None] - s[0:1] - s[1:2]) % pc for y, s in zip(y_a, ya)]
    yC_b = [(full if bit else 0) ^ u ^ v for bit, u, v in zip(y_b, yb[0], yb[1])]
    ya3 = [np.concatenate([s, yc], axis=0) for s, yc in zip(ya, yC_a)]
    yb3 = [yb[0], yb[1], yC_b]
    y_ser = [_y_bytes(c, ya3, yb3, s, T) for s in range(3)]
    and_A = _and_bytes_per_iter(vA, c.n_and, T)
    mul_A = _mul_bytes(c, mul_out, 0, T) if mul_out else [b""] * T
    a_dig = []
    for i, r in enumerate(proof.records):
        ei = proof.trits[i]
        pa, pb, pcm = ei, (ei + 1) % 3, (ei + 2) % 3
        cA = _commit(r.seed_a, r.x3 if pa == 2 else b"", and_A[i], mul_A[i])
        cB = _commit(r.seed_b, r.x3 if pb == 2 else b"", r.view_and, r.view_mul)
        by_player = {pa: (y_ser[0][i], cA), pb: (y_ser[1][i], cB), pcm: (y_ser[2][i], r.commit)}
        a_dig.append(_a_digest([by_player[p][0] for p in range(3)], [by_player[p][1] for p in range(3)]))
    y_pub = _public_y_bytes(c, y_a, y_b)
    return _challenge(c, y_pub, a_dig, T) == list(proof.trits)


# ---------------------------------------------------------------- small helpers for tests

def share(x_a: Sequence[np.ndarray], x_b: Sequence[int], seeds: Sequence[bytes], c: CircuitDesc):
    """Share inputs for a single iteration with three tapes; returns per-player shares."""
    if len(seeds) != 3 or len(set(seeds)) != 3:
        raise CircuitError("need three distinct tapes")
    pc = prime_column(c.primes)
    a0, b0 = _input_shares(c, [seeds[0]])
    a1, b1 = _input_shares(c, [seeds[1]])
    a2 = [(np.asarray(x) % pc - s0[0, 0] - s1[0, 0]) % pc for x, s0, s1 in zip(x_a, a0, a1)]
    a_full = [np.asarray(x) % pc for x in x_a]
    a2w = [a[None, None] for a in a2]
    bits = _merge_hints(c, [int(b) & 1 for b in x_b], _wrap_counts(c, [a0, a1, a2w], a_full))
    b2 = [b ^ s0 ^ s1 for b, s0, s1 in zip(bits, b0, b1)]
    return ([s[0, 0] for s in a0], b0), ([s[0, 0] for s in a1], b1), (a2, b2)


def eval_decomposition(c: CircuitDesc, shares, seeds: Sequence[bytes]):
    """Run the three-player evaluation for one iteration on explicit shares.

    Returns (views, (y_a, y_b)) where views[p] = (AND output bits, mul outputs).
    """
    T = 1
    a_sh = [[np.asarray(x)[None, None] for x in shares[p][0]] for p in range(3)]
    b_sh = [list(shares[p][1]) for p in range(3)]
    and_r = [_and_tapes([seeds[p]], c.n_and) for p in range(3)]
    mt = [_mul_tapes(c, [seeds[p]]) for p in range(3)]
    mul_rand = (lambda idx: np.concatenate([mt[p](idx) for p in range(3)], axis=0))
    player_of = np.arange(3)[:, None]
    ya, yb, views, mul_out = _eval_shares(c, a_sh, b_sh, and_r, None, player_of, T, "prove", mul_rand=mul_rand)
    pc = prime_column(c.primes)
    y_a = [y.sum(axis=0)[0] % pc for y in ya]
    y_b = [(yb[0][k] ^ yb[1][k] ^ yb[2][k]) & 1 for k in range(len(yb[0]))]
    view_out = []
    for p in range(3):
        bits = unslice_bytes(views[p], c.n_and, 1)[0]
        muls = [m[p, 0] for m in mul_out]
        view_out.append((bits, muls))
    return view_out, (y_a, y_b)
