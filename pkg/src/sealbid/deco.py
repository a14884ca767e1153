"""Three-party balance attestation between a balance source, a bidder and an oracle.

The message flow follows DECO without its cryptography: the TLS session is
replaced by AES-GCM envelopes under a prover/source key, and the two-party
MAC computation is replaced by a broker function that sees both key shares
but hands the verifier nothing except ciphertext.

Flow::

    session = three_party_handshake(source, rng)
    price, tag = query_balance(session, onetime_address)
    proof = prove_bid(session, com_p, onetime_address, price, dec)
    credential = oracle.verify_and_attest(session, auction_id, bid_id, com_p, proof)

Everything the verifier stores lives in ``session.transcript`` and never
contains the one-time address.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
import json
import os
from dataclasses import dataclass, field
from typing import Callable, Protocol

from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .crypto import (
    BidMessage,
    Commitment,
    Decommitment,
    OracleKeypair,
    com_open,
    sign,
    verify,
)
from .errors import HandshakeRequired, MacCheckFailed, ProofRejected, UnknownBidId
from .ledger import Address

KEY_BYTES = 16
KEY_MODULUS = 2 ** (8 * KEY_BYTES)


def _rand(rng, n: int) -> bytes:
    return os.urandom(n) if rng is None else rng.randbytes(n)


def _add_keys(a: bytes, b: bytes) -> bytes:
    total = (int.from_bytes(a, "big") + int.from_bytes(b, "big")) % KEY_MODULUS
    return total.to_bytes(KEY_BYTES, "big")


def _sub_keys(a: bytes, b: bytes) -> bytes:
    diff = (int.from_bytes(a, "big") - int.from_bytes(b, "big")) % KEY_MODULUS
    return diff.to_bytes(KEY_BYTES, "big")


def balance_mac(k_mac: bytes, onetime_address: Address, price: int) -> bytes:
    """HMAC-SHA256 over the padded address and the 32-byte big-endian balance."""
    return hmac.new(k_mac, onetime_address.padded() + price.to_bytes(32, "big"), hashlib.sha256).digest()


def credential_message(auction_id: int, bid_id: int, com_p: Commitment) -> bytes:
    return auction_id.to_bytes(8, "big") + bid_id.to_bytes(8, "big") + com_p.digest


@dataclass(frozen=True)
class KeyShares:
    k_p: bytes
    k_v: bytes

    def reconstruct(self) -> bytes:
        return _add_keys(self.k_p, self.k_v)


class BalanceSource:
    """Stand-in for the block explorer: answers balance queries, MAC-tagged.

    ``lookup`` maps an address to its balance in wei; an unknown address has
    balance 0.
    """

    def __init__(self, lookup: Callable[[Address], int]):
        self.lookup = lookup
        self._keys: dict[bytes, tuple[bytes, bytes]] = {}

    def bind(self, session_id: bytes, k_mac: bytes, k_enc: bytes) -> None:
        self._keys[session_id] = (k_mac, k_enc)

    def mac_key(self, session_id: bytes) -> bytes:
        return self._keys[session_id][0]

    def respond(self, session_id: bytes, query_nonce: bytes, query_ct: bytes, reply_nonce: bytes):
        """Decrypt a query, look the balance up, and return (reply ciphertext, tag)."""
        k_mac, k_enc = self._keys[session_id]
        addr = Address(AESGCM(k_enc).decrypt(query_nonce, query_ct, session_id))
        price = self.lookup(addr)
        reply = AESGCM(k_enc).encrypt(reply_nonce, price.to_bytes(32, "big"), session_id)
        return reply, balance_mac(k_mac, addr, price)


class Stage(enum.IntEnum):
    HANDSHAKE = 1
    QUERIED = 2
    PROVED = 3
    DONE = 4


@dataclass
class AttestationTranscript:
    """Wire messages the oracle sees, in the order it sees them."""

    session_id: bytes
    prover_share_commitment: bytes
    query_nonce: bytes = b""
    query_envelope: bytes = b""
    query_mac: bytes = b""
    reply_nonce: bytes = b""
    reply_envelope: bytes = b""
    reply_tag: bytes = b""
    verifier_share_released: bool = False
    auction_id: int | None = None
    bid_id: int | None = None
    com_p: bytes = b""
    proof: dict | None = None
    credential: bytes = b""
    rejection: str = ""

    def to_dict(self) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            out[key] = "0x" + value.hex() if isinstance(value, bytes) else value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass
class _ProverState:
    k_p: bytes
    k_enc: bytes
    onetime_address: Address | None = None
    price: int | None = None
    k_mac: bytes | None = None


@dataclass
class AttestationSession:
    """One sequential attestation run. Not meant to be shared between threads."""

    source: BalanceSource
    shares: KeyShares
    transcript: AttestationTranscript
    rng: object = None
    stage: Stage = Stage.HANDSHAKE
    _prover: _ProverState = field(default=None, repr=False)

    @property
    def k_v(self) -> bytes:
        return self.shares.k_v


def three_party_handshake(source: BalanceSource, rng=None) -> AttestationSession:
    """Share a fresh MAC key additively between prover and verifier.

    The source learns the full key ``k_p + k_v (mod 2**128)``; the prover
    and the source also share an encryption key the verifier never sees.
    """
    session_id = _rand(rng, 16)
    shares = KeyShares(_rand(rng, KEY_BYTES), _rand(rng, KEY_BYTES))
    k_enc = _rand(rng, KEY_BYTES)
    source.bind(session_id, shares.reconstruct(), k_enc)
    transcript = AttestationTranscript(
        session_id=session_id,
        prover_share_commitment=hashlib.sha256(shares.k_p).digest(),
    )
    return AttestationSession(
        source=source,
        shares=shares,
        transcript=transcript,
        rng=rng,
        _prover=_ProverState(k_p=shares.k_p, k_enc=k_enc),
    )


def _broker_query_mac(k_p: bytes, k_v: bytes, envelope: bytes) -> bytes:
    # Stands in for the two-party MAC computation: each side contributes its
    # share, and only the already-encrypted query enters the MAC.
    return hmac.new(_add_keys(k_p, k_v), envelope, hashlib.sha256).digest()


def query_balance(session: AttestationSession, onetime_address: Address) -> tuple[int, bytes]:
    """Fetch the balance of ``onetime_address`` through the verifier-relayed channel."""
    if session.stage != Stage.HANDSHAKE:
        raise HandshakeRequired("query_balance needs a fresh handshake")
    prover, t = session._prover, session.transcript
    t.query_nonce = _rand(session.rng, 12)
    t.query_envelope = AESGCM(prover.k_enc).encrypt(t.query_nonce, onetime_address.raw, t.session_id)
    t.query_mac = _broker_query_mac(prover.k_p, session.shares.k_v, t.query_envelope)
    t.reply_nonce = _rand(session.rng, 12)
    t.reply_envelope, t.reply_tag = session.source.respond(
        t.session_id, t.query_nonce, t.query_envelope, t.reply_nonce
    )
    price = int.from_bytes(
        AESGCM(prover.k_enc).decrypt(t.reply_nonce, t.reply_envelope, t.session_id), "big"
    )
    prover.onetime_address, prover.price = onetime_address, price
    session.stage = Stage.QUERIED
    return price, t.reply_tag


# -- proof backends -----------------------------------------------------------


@dataclass(frozen=True)
class VerifierView:
    """What the checker may rely on: the oracle's own share and the recorded wire data."""

    k_v: bytes
    prover_share_commitment: bytes
    reply_tag: bytes


class ProofBackend(Protocol):
    def prove(
        self,
        com_p: Commitment,
        onetime_address: Address,
        price: int,
        dec: Decommitment,
        k_mac: bytes,
    ) -> dict: ...

    def check(self, com_p: Commitment, proof: dict, view: VerifierView) -> bool: ...


class ReferenceBackend:
    """Sound but not zero-knowledge.

    The proof carries the price and the decommitment in the clear. The
    one-time address and the reconstructed MAC key travel sealed under a key
    held by the backend itself (a trusted checker), so the address stays out
    of the oracle's transcript while ``check`` can still recompute both the
    commitment and the balance MAC. A SNARK backend with the same two methods
    can replace it.
    """

    def __init__(self, rng=None):
        self._seal_key = _rand(rng, 16)
        self._rng = rng

    def prove(self, com_p, onetime_address, price, dec, k_mac):
        nonce = _rand(self._rng, 12)
        sealed = AESGCM(self._seal_key).encrypt(nonce, onetime_address.raw + k_mac, com_p.digest)
        return {
            "backend": "reference",
            "price": str(price),
            "dec": dec.hex,
            "nonce": "0x" + nonce.hex(),
            "sealed": "0x" + sealed.hex(),
        }

    def check(self, com_p, proof, view):
        try:
            price = int(proof["price"])
            dec = Decommitment.from_hex(proof["dec"])
            nonce = bytes.fromhex(proof["nonce"][2:])
            opened = AESGCM(self._seal_key).decrypt(
                nonce, bytes.fromhex(proof["sealed"][2:]), com_p.digest
            )
        except Exception:
            return False
        addr, k_mac = Address(opened[:20]), opened[20:]
        if hashlib.sha256(_sub_keys(k_mac, view.k_v)).digest() != view.prover_share_commitment:
            return False
        if not hmac.compare_digest(balance_mac(k_mac, addr, price), view.reply_tag):
            return False
        return com_open(com_p, dec, BidMessage(addr, price))


def prove_bid(
    session: AttestationSession,
    com_p: Commitment,
    onetime_address: Address,
    price: int,
    dec: Decommitment,
    backend: ProofBackend,
) -> dict:
    """Check the source's MAC with the released verifier share, then prove.

    Raises :class:`MacCheckFailed` when the tagged reply does not match
    ``(onetime_address, price)`` under the reconstructed key.
    """
    if session.stage != Stage.QUERIED:
        raise HandshakeRequired("prove_bid needs a queried session")
    t, prover = session.transcript, session._prover
    t.com_p = com_p.digest
    # the oracle releases its share only once the reply is on record
    t.verifier_share_released = True
    k_mac = _add_keys(prover.k_p, session.shares.k_v)
    if not hmac.compare_digest(balance_mac(k_mac, onetime_address, price), t.reply_tag):
        raise MacCheckFailed("balance reply does not authenticate under the session key")
    prover.k_mac = k_mac
    proof = backend.prove(com_p, onetime_address, price, dec, k_mac)
    t.proof = proof
    session.stage = Stage.PROVED
    return proof


@dataclass(frozen=True)
class OracleCredential:
    auction_id: int
    bid_id: int
    signature: bytes


class Oracle:
    """The verifier: checks proofs and signs ``auction_id || bid_id || com_p``.

    ``registry(auction_id, bid_id)`` returns the commitment the auction
    contract stored for that bid, or raises :class:`UnknownBidId`.
    """

    def __init__(
        self,
        keypair: OracleKeypair,
        registry: Callable[[int, int], Commitment],
        backend: ProofBackend,
    ):
        self.keypair = keypair
        self.registry = registry
        self.backend = backend

    @property
    def vk(self):
        return self.keypair.vk

    def verify_and_attest(
        self,
        session: AttestationSession,
        auction_id: int,
        bid_id: int,
        com_p: Commitment,
        proof: dict,
    ) -> OracleCredential:
        t = session.transcript
        t.auction_id, t.bid_id = auction_id, bid_id
        try:
            registered = self.registry(auction_id, bid_id)
        except UnknownBidId:
            t.rejection = "unknown bid id"
            raise
        if session.stage != Stage.PROVED:
            t.rejection = "no proof on record"
            raise ProofRejected("session has not produced a proof")
        if registered != com_p or t.com_p != com_p.digest:
            t.rejection = "commitment mismatch"
            raise ProofRejected("commitment does not match the registered bid")
        view = VerifierView(session.k_v, t.prover_share_commitment, t.reply_tag)
        if not self.backend.check(com_p, proof, view):
            t.rejection = "proof rejected"
            raise ProofRejected("proof does not verify")
        signature = sign(self.keypair.sigk, credential_message(auction_id, bid_id, com_p))
        t.credential = signature
        session.stage = Stage.DONE
        return OracleCredential(auction_id, bid_id, signature)


def verify_credential(vk, credential: OracleCredential, com_p: Commitment) -> bool:
    msg = credential_message(credential.auction_id, credential.bid_id, com_p)
    return verify(vk, msg, credential.signature)
