"""Hash commitments over bid messages, and the oracle's signature scheme.

A bid message is the one-time address (left-padded to 32 bytes) followed by
the price as a 32-byte big-endian word. The commitment digest is
``SHA256(message || r)`` over the resulting 96-byte (768-bit) preimage.

Oracle credentials use Ed25519.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from .ledger import MAX_WEI, Address


def _randbytes(rng, n: int) -> bytes:
    return os.urandom(n) if rng is None else rng.randbytes(n)


def _hex32(data: bytes) -> str:
    return "0x" + data.hex()


def _from_hex32(text: str) -> bytes:
    body = text[2:] if text[:2].lower() == "0x" else text
    if len(body) != 64:
        raise ValueError(f"expected 64 hex digits, got {len(body)}")
    return bytes.fromhex(body)


@dataclass(frozen=True)
class BidMessage:
    onetime_address: Address
    price: int

    def __post_init__(self):
        if not 0 <= self.price <= MAX_WEI:
            raise ValueError(f"price out of 256-bit range: {self.price}")

    def serialize(self) -> bytes:
        return self.onetime_address.padded() + self.price.to_bytes(32, "big")

    @classmethod
    def deserialize(cls, data: bytes) -> BidMessage:
        if len(data) != 64 or any(data[:12]):
            raise ValueError("not a serialized bid message")
        return cls(Address(data[12:32]), int.from_bytes(data[32:], "big"))


@dataclass(frozen=True)
class Commitment:
    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 32:
            raise ValueError("commitment digest must be 32 bytes")

    @property
    def hex(self) -> str:
        return _hex32(self.digest)

    @classmethod
    def from_hex(cls, text: str) -> Commitment:
        return cls(_from_hex32(text))


@dataclass(frozen=True)
class Decommitment:
    r: bytes

    def __post_init__(self):
        if len(self.r) != 32:
            raise ValueError("decommitment must be 32 bytes")

    @property
    def hex(self) -> str:
        return _hex32(self.r)

    @classmethod
    def from_hex(cls, text: str) -> Decommitment:
        return cls(_from_hex32(text))


def commitment_digest(msg: BidMessage, r: bytes) -> bytes:
    return hashlib.sha256(msg.serialize() + r).digest()


def commit(msg: BidMessage, rng=None) -> tuple[Commitment, Decommitment]:
    """Commit to ``msg`` with 32 fresh bytes drawn from ``rng``.

    ``rng`` is anything with a ``randbytes(n)`` method, such as
    :class:`random.Random`; ``None`` uses the OS entropy pool.
    """
    dec = Decommitment(_randbytes(rng, 32))
    return Commitment(commitment_digest(msg, dec.r)), dec


def com_open(com: Commitment, dec: Decommitment, msg: BidMessage) -> bool:
    return commitment_digest(msg, dec.r) == com.digest


# -- signatures ---------------------------------------------------------------


@dataclass(frozen=True)
class OracleKeypair:
    sigk: Ed25519PrivateKey
    vk: Ed25519PublicKey

    @classmethod
    def generate(cls, rng=None) -> OracleKeypair:
        sk = Ed25519PrivateKey.from_private_bytes(_randbytes(rng, 32))
        return cls(sk, sk.public_key())


def sign(sigk: Ed25519PrivateKey, message: bytes) -> bytes:
    return sigk.sign(message)


def verify(vk: Ed25519PublicKey, message: bytes, signature: bytes) -> bool:
    try:
        vk.verify(bytes(signature), message)
    except (InvalidSignature, ValueError, TypeError):
        return False
    return True


def vk_bytes(vk: Ed25519PublicKey) -> bytes:
    return vk.public_bytes(Encoding.Raw, PublicFormat.Raw)
