"""On-disk storage of HE key sets and data-source signing keys."""
from __future__ import annotations

import hashlib
import os
from pathlib import Path

import numpy as np

from .ckks_he import HeParams, KeySet, KeySwitchKey, keygen
from .ring_core import RingElem
from .signing import SignerKeys

KEY_DIR_ENV = "CRISP_KEY_DIR"


def key_dir(override: str | os.PathLike | None = None) -> Path:
    d = override or os.environ.get(KEY_DIR_ENV) or Path.home() / ".cache" / "crisp" / "keys"
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _fingerprint(he: HeParams) -> str:
    primes = "-".join(str(p) for p in he.ring.primes)
    tag = hashlib.sha256(primes.encode()).hexdigest()[:10]
    return f"N{he.N}_d{he.delta_e_bits}_k{he.digit_bits}_{tag}"


def save_keyset(ks: KeySet, path: Path):
    arrs = {"s": ks.s.res, "pk0": ks.pk[0].res, "pk1": ks.pk[1].res,
            "primes": np.array(ks.params.ring.primes, dtype=np.int64)}
    for i, (b, a) in enumerate(zip(ks.evk.b, ks.evk.a)):
        arrs[f"evk_b{i}"], arrs[f"evk_a{i}"] = b.res, a.res
    for r, k in ks.rot_keys.items():
        for i, (b, a) in enumerate(zip(k.b, k.a)):
            arrs[f"rot{r}_b{i}"], arrs[f"rot{r}_a{i}"] = b.res, a.res
    tmp = path.with_suffix(".tmp.npz")
    np.savez(tmp, **arrs)
    os.replace(tmp, path)
    os.chmod(path, 0o600)


def load_keyset(he: HeParams, path: Path) -> KeySet:
    ring = he.ring
    with np.load(path) as z:
        if tuple(int(p) for p in z["primes"]) != tuple(ring.primes):
            raise ValueError("stored keys were made for other parameters")
        el = lambda name: RingElem(ring, z[name])

        def ksk(prefix):
            n = sum(1 for k in z.files if k.startswith(prefix + "_b"))
            return KeySwitchKey(tuple(el(f"{prefix}_b{i}") for i in range(n)),
                                tuple(el(f"{prefix}_a{i}") for i in range(n)))

        rots = sorted({int(k[3:].split("_")[0]) for k in z.files if k.startswith("rot")})
        return KeySet(he, el("s"), (el("pk0"), el("pk1")), ksk("evk"), {r: ksk(f"rot{r}") for r in rots})


_MEM: dict = {}


def user_keys(he: HeParams, directory: Path | None = None, seed: bytes | None = None) -> KeySet:
    """Load the user's key set for these parameters, generating and storing it on first use."""
    directory = key_dir(directory)
    path = directory / f"he_{_fingerprint(he)}.npz"
    hit = _MEM.get(path)
    if hit is not None:
        return hit
    if path.exists():
        ks = load_keyset(he, path)
    else:
        ks = keygen(he, seed if seed is not None else os.urandom(32))
        save_keyset(ks, path)
    _MEM[path] = ks
    return ks


def source_keys(directory: Path | None = None) -> SignerKeys:
    path = key_dir(directory) / "source_ed25519.key"
    if path.exists():
        return SignerKeys.from_private(path.read_bytes())
    sk = SignerKeys.generate()
    path.write_bytes(sk.private_bytes())
    os.chmod(path, 0o600)
    return sk
