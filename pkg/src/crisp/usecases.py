"""Use-case configurations: parameter presets, data, validators and the homomorphic computations."""
from __future__ import annotations

import csv
import hashlib
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .ckks_he import (
    Ciphertext, he_add_const, HeParams, KeySet, decode, encode_float, he_add, he_eval_poly, he_mul, he_mul_plain,
    he_rotate, he_rotate_sum, he_sub, rescale,
)
from .crisp_circuit import MessageLayout, SourceMessage, activity_layout, disease_layout, smart_layout
from .ring_core import RingParams, find_primes
from .signing import SignerKeys

USE_CASES = ("smart_meter_sum", "disease_weighted_sum", "activity_distance")
ALIASES = {"smart": "smart_meter_sum", "sum": "smart_meter_sum", "disease": "disease_weighted_sum",
           "weighted_sum": "disease_weighted_sum", "activity": "activity_distance",
           "distance": "activity_distance"}

MAX_SEGMENT_M = 30.0
MAX_SPEED_MS = 10.0


class DataError(ValueError):
    pass


def canonical(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in USE_CASES:
        raise DataError(f"unknown use case {name!r}")
    return name


# ---------------------------------------------------------------- presets

@dataclass(frozen=True)
class HePreset:
    name: str
    N: int
    prime_bits: tuple
    delta_e_bits: int
    digit_bits: int
    mult_levels: int           # multiplicative depth the computation consumes (in primes)

    @property
    def log_q(self) -> int:
        return sum(self.prime_bits)

    def params(self) -> HeParams:
        return _he_params(self)


@lru_cache(maxsize=16)
def _he_params(p: HePreset) -> HeParams:
    ring = RingParams(p.N, find_primes(p.N, p.prime_bits))
    hp = HeParams(ring, p.delta_e_bits, 0, digit_bits=p.digit_bits)
    hp.validate()
    return hp


PRESETS = {
    # the sum of 1024 16-bit readings times 2^18 stays below q/2 ~ 2^44
    ("smart_meter_sum", "ci"): HePreset("smart-ci", 2048, (23, 22), 18, 4, 0),
    ("disease_weighted_sum", "ci"): HePreset("disease-ci", 2048, (30, 28), 19, 6, 1),
    ("activity_distance", "ci"): HePreset("activity-ci", 2048, (30,) * 8, 40, 10, 6),
}

# (N, log q) at the published parameter sets, used only for size estimates
PUBLISHED_SIZES = {"smart_meter_sum": (2048, 45), "disease_weighted_sum": (4096, 56), "activity_distance": (8192, 184)}

PUBLISHED_POINTS = {"smart_meter_sum": 1024, "disease_weighted_sum": 869, "activity_distance": 2048}
WEIGHT_SCALE_BITS = 25
MASK_SCALE_BITS = 50
RESULT_SCALE_BITS = 44


@dataclass
class UseCaseConfig:
    kind: str
    preset: HePreset
    layout: MessageLayout
    psi: str
    weights: np.ndarray | None = None
    normalization: float = 1.0
    fit_interval: tuple = (0.0, MAX_SEGMENT_M ** 2)
    fit_degree: int = 7
    sqrt_coeffs: tuple | None = None
    sqrt_const: float = 0.0

    @property
    def he(self) -> HeParams:
        return self.preset.params()


def make_config(kind: str, batch: int = 1, n_snps: int = 869, seed: bytes = b"weights",
                normalization: float = 1.0) -> UseCaseConfig:
    kind = canonical(kind)
    preset = PRESETS[(kind, "ci")]
    if kind == "smart_meter_sum":
        return UseCaseConfig(kind, preset, smart_layout(batch), "sum")
    if kind == "disease_weighted_sum":
        rng = np.random.default_rng(int.from_bytes(hashlib.sha256(seed).digest()[:8], "big"))
        w = rng.uniform(0.0, 1.0, n_snps)
        return UseCaseConfig(kind, preset, disease_layout(n_snps), "weighted_sum", weights=w,
                             normalization=normalization)
    cfg = UseCaseConfig(kind, preset, activity_layout(), "distance")
    c = scaled_sqrt_coeffs(cfg.fit_interval, cfg.fit_degree)
    cfg.sqrt_const, cfg.sqrt_coeffs = float(c[0]), tuple([0.0] + list(c[1:]))
    return cfg


# ---------------------------------------------------------------- sqrt fit

def fit_sqrt_poly(a: float, b: float, degree: int = 7, grid: int = 4001) -> np.ndarray:
    """Least-squares fit of sqrt on [a, b] in a Legendre basis; returns monomial coefficients in x."""
    if not (0 <= a < b) or degree < 1:
        raise ValueError("need 0 <= a < b and degree >= 1")
    x = np.linspace(a, b, grid)
    leg = np.polynomial.Legendre.fit(x, np.sqrt(x), degree, domain=[a, b])
    return leg.convert(kind=np.polynomial.Polynomial, domain=[a, b], window=[a, b]).coef


def sqrt_fit_error(coeffs: Sequence[float], a: float, b: float, grid: int = 4001) -> float:
    """Max relative error on [max(a, 0.05 b), b]."""
    x = np.linspace(max(a, 0.05 * b), b, grid)
    return float(np.max(np.abs(np.polynomial.polynomial.polyval(x, coeffs) - np.sqrt(x)) / np.sqrt(x)))


def scaled_sqrt_coeffs(interval: tuple, degree: int) -> np.ndarray:
    """Fit of sqrt(b*u) for u in [a/b, 1], so the encrypted argument stays in [0, 1].

    """
    a, b = interval
    u = np.linspace(a / b, 1.0, 4001)
    leg = np.polynomial.Legendre.fit(u, np.sqrt(b * u), degree, domain=[a / b, 1.0])
    c = leg.convert(kind=np.polynomial.Polynomial, domain=[a / b, 1.0], window=[a / b, 1.0]).coef
    return np.array(c, dtype=float)


# ---------------------------------------------------------------- datasets

@dataclass
class Dataset:
    kind: str
    rows: list
    provenance: str = "synthetic"


SCHEMAS = {
    "smart_meter_sum": ("uid", "timestamp", "reading"),
    "disease_weighted_sum": ("uid", "snps"),
    "activity_distance": ("uid", "timestamp", "easting", "northing"),
}


def synth(kind: str, n: int, seed: int = 0, n_snps: int = 869) -> Dataset:
    """Seeded synthetic records at the magnitudes of the original datasets."""
    kind = canonical(kind)
    rng = np.random.default_rng(seed)
    if kind == "smart_meter_sum":
        t0 = 1_500_000_000
        rows = [{"uid": int(rng.integers(0, 1 << 16)), "timestamp": t0 + 1800 * i,
                 "reading": int(rng.integers(0, 1 << 16))} for i in range(n)]
    elif kind == "disease_weighted_sum":
        rows = [{"uid": int(rng.integers(0, 1 << 16)),
                 "snps": [int(v) for v in rng.integers(0, 3, n_snps)]} for _ in range(n)]
    else:
        uid = int(rng.integers(0, 1 << 16))
        e, nn = int(rng.integers(200_000, 600_000)), int(rng.integers(100_000, 900_000))
        t = 1_500_000_000
        rows = []
        for i in range(n):
            if i:
                # walk on the metre grid: rounding adds at most sqrt(0.5) m to a step
                step = rng.uniform(3.0, MAX_SEGMENT_M - 1)
                ang = rng.uniform(0, 2 * math.pi)
                e += int(round(step * math.cos(ang)))
                nn += int(round(step * math.sin(ang)))
                t += int(math.ceil(step / rng.uniform(2.0, MAX_SPEED_MS))) + 1
            rows.append({"uid": uid, "timestamp": t, "easting": e, "northing": nn})
    ds = Dataset(kind, rows)
    validate(ds)
    return ds


def validate(ds: Dataset):
    if not ds.rows:
        raise DataError("no rows")
    kind = ds.kind
    for i, r in enumerate(ds.rows):
        try:
            if kind == "smart_meter_sum":
                _rng_check(r["reading"], 16, "reading")
                _rng_check(r["uid"], 16, "uid")
                _rng_check(r["timestamp"], 32, "timestamp")
            elif kind == "disease_weighted_sum":
                _rng_check(r["uid"], 16, "uid")
                if any(v not in (0, 1, 2) for v in r["snps"]):
                    raise DataError("snp values must be 0, 1 or 2")
            else:
                for k in ("easting", "northing"):
                    _rng_check(r[k], 24, k)
                _rng_check(r["timestamp"], 32, "timestamp")
                if i:
                    p = ds.rows[i - 1]
                    d = math.hypot(r["easting"] - p["easting"], r["northing"] - p["northing"])
                    if d >= MAX_SEGMENT_M:
                        raise DataError(f"segment of {d:.1f} m is not below {MAX_SEGMENT_M:.0f} m")
                    dt = r["timestamp"] - p["timestamp"]
                    if dt <= 0 or d / dt > MAX_SPEED_MS:
                        raise DataError("speed limit exceeded or timestamps not increasing")
        except KeyError as e:
            raise DataError(f"row {i}: missing column {e}") from None
        except DataError as e:
            raise DataError(f"row {i}: {e}") from None


def _rng_check(v, bits, name):
    if not isinstance(v, (int, np.integer)) or not 0 <= v < (1 << bits):
        raise DataError(f"{name}={v} is outside [0, 2^{bits})")


def ingest(path: str | os.PathLike, kind: str) -> Dataset:
    kind = canonical(kind)
    p = Path(path)
    with p.open(newline="") as fh:
        reader = csv.DictReader(fh)
        cols = SCHEMAS[kind]
        if reader.fieldnames is None:
            raise DataError("no rows")
        missing = [c for c in cols if c not in reader.fieldnames]
        if missing:
            raise DataError(f"missing columns {missing}")
        rows = []
        for r in reader:
            try:
                if kind == "disease_weighted_sum":
                    rows.append({"uid": int(r["uid"]), "snps": [int(c) for c in r["snps"].split()]})
                else:
                    rows.append({c: int(r[c]) for c in cols})
            except ValueError as e:
                raise DataError(f"row {len(rows)}: {e}") from None
    ds = Dataset(kind, rows, "file")
    validate(ds)
    return ds


def write_csv(ds: Dataset, path: str | os.PathLike):
    cols = SCHEMAS[ds.kind]
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in ds.rows:
            row = dict(r)
            if ds.kind == "disease_weighted_sum":
                row["snps"] = " ".join(str(v) for v in r["snps"])
            w.writerow(row)


# ---------------------------------------------------------------- signing

def _nonce(rng: np.random.Generator) -> int:
    return int.from_bytes(rng.bytes(16), "big")


def source_sign(ds: Dataset, cfg: UseCaseConfig, signer: SignerKeys, seed: int | None = None) -> list[SourceMessage]:
    """One signed message per record (or per batch of readings) with a fresh 128-bit nonce."""
    rng = np.random.default_rng(seed) if seed is not None else np.random.default_rng(
        int.from_bytes(os.urandom(8), "big"))
    lay = cfg.layout
    out = []
    if ds.kind == "smart_meter_sum":
        b = lay.n_data
        for i in range(0, len(ds.rows), b):
            chunk = ds.rows[i:i + b]
            readings = [r["reading"] for r in chunk] + [0] * (b - len(chunk))
            out.append(SourceMessage.create(lay, [_nonce(rng), chunk[0]["uid"], chunk[0]["timestamp"]] + readings,
                                            signer))
    elif ds.kind == "disease_weighted_sum":
        for r in ds.rows:
            if len(r["snps"]) != lay.n_data:
                raise DataError("SNP count does not match the layout")
            out.append(SourceMessage.create(lay, [r["uid"], _nonce(rng)] + list(r["snps"]), signer))
    else:
        for r in ds.rows:
            out.append(SourceMessage.create(lay, [r["uid"], _nonce(rng), r["timestamp"], r["easting"],
                                                 r["northing"]], signer))
    return out


# ---------------------------------------------------------------- cleartext and encrypted computation

def cleartext(kind: str, values: Sequence[int], cfg: UseCaseConfig, exact_sqrt: bool = True) -> float:
    """Reference result from the data values in message order."""
    v = np.asarray(values, dtype=np.float64)
    if kind == "smart_meter_sum":
        return float(v.sum())
    if kind == "disease_weighted_sum":
        return float(np.dot(cfg.weights[: v.size], v) / cfg.normalization)
    pts = v.reshape(-1, 2)
    seg = np.diff(pts, axis=0)
    d2 = (seg ** 2).sum(axis=1)
    if exact_sqrt:
        return float(np.sqrt(d2).sum())
    u = d2 / cfg.fit_interval[1]
    return float(np.polynomial.polynomial.polyval(u, cfg.sqrt_coeffs).sum() + cfg.sqrt_const * u.size)


def _pow2_at_least(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def compute_usecase(ct: Ciphertext, cfg: UseCaseConfig, keys, n_points: int) -> Ciphertext:
    """Homomorphic evaluation; slot 0 of the result holds the answer.

    n_points counts data points (readings, SNPs, or trace points).
    """
    he = cfg.he
    rk, evk = keys.rot_keys, keys.evk
    if cfg.kind == "smart_meter_sum":
        return he_rotate_sum(ct, rk, he, _pow2_at_least(n_points))
    if cfg.kind == "disease_weighted_sum":
        w = np.zeros(he.slots)
        w[:n_points] = cfg.weights[:n_points] / cfg.normalization
        pt = encode_float(w, he, 1 << WEIGHT_SCALE_BITS, ct.level)
        # rotate before rescaling so key-switching noise is small next to the product scale
        prod = he_rotate_sum(he_mul_plain(ct, pt), rk, he, _pow2_at_least(n_points))
        return rescale(prod)
    # activity: Eastings in [0, N/4), Northings in [N/4, N/2)
    quarter = he.N // 4
    if n_points < 2 or n_points > quarter:
        raise ValueError("trace length must be in [2, N/4]")
    b = cfg.fit_interval[1]
    diff = he_sub(he_rotate(ct, 1, rk, he), ct)
    mask = np.zeros(he.slots)
    mask[: n_points - 1] = 1.0 / math.sqrt(b)
    mask[quarter: quarter + n_points - 1] = 1.0 / math.sqrt(b)
    pt = encode_float(mask, he, 1 << MASK_SCALE_BITS, diff.level)
    d = rescale(rescale(he_mul_plain(diff, pt)))
    # fold Northings onto Eastings before rescaling, for the same reason as above
    sq = he_mul(d, d, evk, he)
    u = rescale(he_add(sq, he_rotate(sq, quarter, rk, he)))
    # the segment sum is taken at level 1, where a 2^30 scale would leave the key-switching noise
    # of the rotations near 0.1 m; 512 segments of 30 m at 2^44 still fit below q/2 ~ 2^59
    p = he_eval_poly(u, list(cfg.sqrt_coeffs), evk, he, scale=1 << RESULT_SCALE_BITS)
    # empty slots give p(0) - c0 = 0; the constant term of the n-1 real segments is added back
    return he_add_const(he_rotate_sum(p, rk, he, quarter), cfg.sqrt_const * (n_points - 1))


def decode_result(ct: Ciphertext, cfg: UseCaseConfig, keys: KeySet) -> float:
    from .ckks_he import decrypt
    return float(decode(decrypt(ct, keys.s), cfg.he, 1)[0])


def relative_error(m: float, m_hat: float) -> float:
    """Signed relative error (m - m_hat) / m."""
    return (m - m_hat) / m if m else (0.0 if m_hat == 0 else math.inf)
