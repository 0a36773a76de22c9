import random

import numpy as np
import pytest

from crisp.ring_core import (
    NoiseSpec, RingElem, RingError, RingParams, crt_to_bits, deserialize, find_primes, inf_norm, intt, ntt,
    ring_add, ring_mul, sample, serialize,
)

TOY = RingParams(4, (17,))


def schoolbook(a, b, q):
    n = len(a)
    out = [0] * n
    for i in range(n):
        for j in range(n):
            if i + j < n:
                out[i + j] += a[i] * b[j]
            else:
                out[i + j - n] -= a[i] * b[j]
    return [v % q for v in out]


def rand_elem(P, rng, level=None):
    level = P.top if level is None else level
    return RingElem.from_coeffs(P, [rng.randrange(P.q_at(level)) for _ in range(P.N)], level)


def test_params_invariants():
    with pytest.raises(RingError):
        RingParams(6, (13,))
    with pytest.raises(RingError):
        RingParams(4, (13,))          # 13 is not 1 mod 8
    with pytest.raises(RingError):
        RingParams(4, (17, 17))
    P = RingParams.make(1024, [30, 29, 28])
    assert all(p % 2048 == 1 for p in P.primes)
    assert P.l_min_bits == 28 and P.L == 3


def test_toy_add_and_mul():
    a = RingElem.from_coeffs(TOY, [1, 2, 3, 4])
    b = RingElem.from_coeffs(TOY, [16, 1, 2, 3])
    assert ring_add(a, b).coeffs == [0, 3, 5, 7]
    assert (a + RingElem.zero(TOY)) == a
    x = RingElem.from_coeffs(TOY, [0, 1, 0, 0])
    x3 = RingElem.from_coeffs(TOY, [0, 0, 0, 1])
    assert ring_mul(x, x3).coeffs == [16, 0, 0, 0]
    one = RingElem.from_coeffs(TOY, [1, 0, 0, 0])
    assert a * one == a


def test_level_and_degree_mismatch():
    P = RingParams.make(8, [20, 20])
    a = RingElem.zero(P, 1)
    with pytest.raises(RingError):
        a + RingElem.zero(P, 0)
    with pytest.raises(RingError):
        a + RingElem.zero(RingParams.make(16, [20, 20]), 1)


@pytest.mark.parametrize("N,bits", [(8, [20]), (32, [25, 24]), (64, [30, 25])])
def test_mul_matches_schoolbook(N, bits):
    P = RingParams.make(N, bits)
    rng = random.Random(N)
    for _ in range(5):
        a, b = rand_elem(P, rng), rand_elem(P, rng)
        assert (a * b).coeffs == schoolbook(a.coeffs, b.coeffs, P.q)


def test_add_matches_bigint_oracle():
    P = RingParams.make(1024, [30, 29, 28])
    rng = random.Random(3)
    a, b = rand_elem(P, rng), rand_elem(P, rng)
    assert (a + b).coeffs == [(x + y) % P.q for x, y in zip(a.coeffs, b.coeffs)]
    assert (a - b).coeffs == [(x - y) % P.q for x, y in zip(a.coeffs, b.coeffs)]


@pytest.mark.parametrize("N", [4, 8, 1024])
def test_ring_laws(N):
    P = RingParams(4, (17,)) if N == 4 else RingParams.make(N, [30, 29])
    rng = random.Random(N)
    for _ in range(3):
        a, b, c = (rand_elem(P, rng) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a * b == b * a
        assert a + b == b + a


def test_ntt_roundtrip_all_levels():
    P = RingParams.make(256, [30, 29, 28])
    rng = np.random.default_rng(0)
    for p in P.primes:
        a = rng.integers(0, p, 256)
        assert np.array_equal(intt(ntt(a, p), p), a)


def test_sampling_supports_and_determinism():
    P = RingParams.make(1024, [30, 29])
    spec = NoiseSpec()
    t = sample("ternary", spec, b"s", P)
    assert set(t.centered()) <= {-1, 0, 1}
    assert sum(1 for c in t.centered() if c) == spec.h
    assert all(c in (0, 1, P.q - 1) for c in t.coeffs)
    bb = sample("bounded_beta", NoiseSpec(beta=1), b"s", P)
    assert inf_norm(bb) <= 1
    assert sample("gaussian", spec, b"x", P) == sample("gaussian", spec, b"x", P)
    assert sample("gaussian", spec, b"x", P) != sample("gaussian", spec, b"y", P)
    with pytest.raises(RingError):
        sample("laplace", spec, b"x", P)
    with pytest.raises(RingError):
        sample("gaussian", spec, b"", P)


def test_gaussian_sigma():
    P = RingParams.make(1024, [30])
    draws = np.concatenate([np.array(sample("gaussian", NoiseSpec(), b"g%d" % i, P).centered()) for i in range(100)])
    assert draws.size >= 10 ** 5
    assert abs(draws.std() - 3.2) / 3.2 < 0.05
    assert np.abs(draws).max() <= 19


def test_inf_norm():
    assert inf_norm(RingElem.zero(TOY)) == 0
    assert inf_norm(RingElem.from_coeffs(TOY, [16, 0, 0, 0])) == 1
    P = RingParams.make(64, [30, 25])
    rng = random.Random(9)
    a = rand_elem(P, rng)
    brute = max(abs(c - P.q if c > P.q // 2 else c) for c in a.coeffs)
    assert inf_norm(a) == brute


def test_serialization_roundtrip():
    P = RingParams.make(64, [30, 25])
    a = rand_elem(P, random.Random(1))
    blob = serialize(a)
    assert blob[:4] == b"CRSP"
    assert deserialize(blob, P) == a
    lo = a.at_level(0)
    assert deserialize(serialize(lo), P) == lo
    with pytest.raises(RingError):
        deserialize(blob[:-1], P)
    with pytest.raises(RingError):
        deserialize(b"XXXX" + blob[4:], P)


def test_crt_to_bits():
    P = RingParams.make(64, [30, 29])
    a = rand_elem(P, random.Random(2))
    bits = crt_to_bits(a.res, P.primes, P.q.bit_length())
    assert all(sum(int(bits[i, k]) << k for k in range(bits.shape[1])) == a.coeffs[i] for i in range(64))


def test_find_primes_distinct():
    ps = find_primes(2048, [30, 30, 30])
    assert len(set(ps)) == 3 and all(p.bit_length() == 30 for p in ps)
