"""Data-source signatures over SHA-256 digests (Ed25519 by default)."""
from __future__ import annotations

from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey


@dataclass
class SignerKeys:
    private: Ed25519PrivateKey | None
    public: Ed25519PublicKey
    scheme: str = "ed25519"

    @classmethod
    def generate(cls, seed: bytes | None = None) -> "SignerKeys":
        if seed is None:
            sk = Ed25519PrivateKey.generate()
        else:
            import hashlib
            sk = Ed25519PrivateKey.from_private_bytes(hashlib.sha256(b"signer|" + seed).digest())
        return cls(sk, sk.public_key())

    def sign(self, digest: bytes) -> bytes:
        if self.private is None:
            raise ValueError("no private key loaded")
        return self.private.sign(digest)

    def public_bytes(self) -> bytes:
        return self.public.public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)

    def private_bytes(self) -> bytes:
        return self.private.private_bytes(serialization.Encoding.Raw, serialization.PrivateFormat.Raw,
                                          serialization.NoEncryption())

    @classmethod
    def from_private(cls, raw: bytes) -> "SignerKeys":
        sk = Ed25519PrivateKey.from_private_bytes(raw)
        return cls(sk, sk.public_key())

    @classmethod
    def from_public(cls, raw: bytes) -> "SignerKeys":
        return cls(None, Ed25519PublicKey.from_public_bytes(raw))


def verify_sig(pub: bytes | SignerKeys, digest: bytes, sig: bytes) -> bool:
    key = pub.public if isinstance(pub, SignerKeys) else Ed25519PublicKey.from_public_bytes(pub)
    try:
        key.verify(sig, digest)
        return True
    except (InvalidSignature, ValueError):
        return False
