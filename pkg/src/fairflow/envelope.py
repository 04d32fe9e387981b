"""Commit-reveal transaction envelopes with a minimal public view.

A sealed transaction exposes exactly three things: a blinded handle
(tx_id_public, derived from the salt so it carries no payload information),
the gas limit (needed for capacity packing) and a salted sender hash (needed
for per-sender dedup). Everything else stays hidden behind an XOR keystream
until the reveal key is presented; the commitment H(plaintext ‖ salt) binds
the reveal to the sealed bytes.

The keystream block j is H(key ‖ salt ‖ j) with an 8-byte big-endian
counter, so ciphertext length always equals plaintext length.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import HASH_LEN, Transaction, canonical_serialize, deserialize_transaction, encode_u64, sha256

SALT_LEN = 16

_DOMAIN_PUB_ID = b"pub-id"
_DOMAIN_ENV_ID = b"envelope-id"


class RevealFailure(Exception):
    """Reveal key or ciphertext does not match the commitment; tx dropped."""


@dataclass(frozen=True)
class PublicView:
    """Exactly the three declared fields; nothing else is ever exposed."""

    tx_id_public: bytes
    gas_limit: int
    sender_blinded: bytes

    def encode(self) -> bytes:
        return (
            self.tx_id_public
            + self.gas_limit.to_bytes(8, "big")
            + self.sender_blinded
        )


@dataclass(frozen=True)
class RevealKey:
    key: bytes
    salt: bytes

    def __post_init__(self) -> None:
        if len(self.key) != HASH_LEN:
            raise ValueError("key must be 32 bytes")
        if len(self.salt) != SALT_LEN:
            raise ValueError("salt must be 16 bytes")


@dataclass(frozen=True)
class EncryptedTransaction:
    envelope_id: bytes
    commitment: bytes
    ciphertext: bytes
    public_view: PublicView


def _keystream(key: bytes, salt: bytes, length: int) -> bytes:
    blocks = []
    counter = 0
    while len(blocks) * HASH_LEN < length:
        blocks.append(sha256(key, salt, encode_u64(counter)))
        counter += 1
    return b"".join(blocks)[:length]


def _xor(data: bytes, pad: bytes) -> bytes:
    return bytes(a ^ b for a, b in zip(data, pad))


def seal(tx: Transaction, key: bytes, salt: bytes) -> EncryptedTransaction:
    """Encrypt and commit; the caller keeps (key, salt) as the RevealKey."""
    if len(key) != HASH_LEN:
        raise ValueError("key must be 32 bytes")
    if len(salt) != SALT_LEN:
        raise ValueError("salt must be 16 bytes")
    plaintext = canonical_serialize(tx)
    ciphertext = _xor(plaintext, _keystream(key, salt, len(plaintext)))
    commitment = sha256(plaintext, salt)
    view = PublicView(
        tx_id_public=sha256(_DOMAIN_PUB_ID, salt),
        gas_limit=tx.gas_limit,
        sender_blinded=sha256(tx.sender.encode("utf-8"), salt),
    )
    return EncryptedTransaction(
        envelope_id=sha256(_DOMAIN_ENV_ID, commitment, ciphertext),
        commitment=commitment,
        ciphertext=ciphertext,
        public_view=view,
    )


def open_envelope(env: EncryptedTransaction, rk: RevealKey) -> Transaction:
    """Decrypt and check the commitment; any mismatch is a RevealFailure."""
    plaintext = _xor(env.ciphertext, _keystream(rk.key, rk.salt, len(env.ciphertext)))
    if sha256(plaintext, rk.salt) != env.commitment:
        raise RevealFailure("commitment mismatch")
    try:
        return deserialize_transaction(plaintext)
    except ValueError as exc:
        raise RevealFailure(f"undecodable plaintext: {exc}") from exc


def minimal_view(env: EncryptedTransaction) -> PublicView:
    return env.public_view


def _enc_chunk(data: bytes) -> bytes:
    return len(data).to_bytes(4, "big") + data


def encode_envelope(env: EncryptedTransaction) -> bytes:
    """Stable wire layout: commitment ‖ public_view ‖ ciphertext, each
    length-prefixed. The salt is never on the wire; it travels in the
    RevealKey."""
    return (
        _enc_chunk(env.commitment)
        + _enc_chunk(env.public_view.encode())
        + _enc_chunk(env.ciphertext)
    )


def decode_envelope(data: bytes) -> EncryptedTransaction:
    pos = 0

    def chunk() -> bytes:
        nonlocal pos
        if pos + 4 > len(data):
            raise ValueError("truncated envelope")
        n = int.from_bytes(data[pos : pos + 4], "big")
        pos_new = pos + 4 + n
        if pos_new > len(data):
            raise ValueError("truncated envelope")
        out = data[pos + 4 : pos_new]
        pos = pos_new
        return out

    commitment = chunk()
    view_raw = chunk()
    ciphertext = chunk()
    if pos != len(data):
        raise ValueError("trailing bytes after envelope")
    if len(commitment) != HASH_LEN or len(view_raw) != HASH_LEN + 8 + HASH_LEN:
        raise ValueError("malformed envelope")
    view = PublicView(
        tx_id_public=view_raw[:HASH_LEN],
        gas_limit=int.from_bytes(view_raw[HASH_LEN : HASH_LEN + 8], "big"),
        sender_blinded=view_raw[HASH_LEN + 8 :],
    )
    return EncryptedTransaction(
        envelope_id=sha256(_DOMAIN_ENV_ID, commitment, ciphertext),
        commitment=commitment,
        ciphertext=ciphertext,
        public_view=view,
    )


class PrivacyKeeper:
    """Holds reveal keys until execution time and tracks opened envelopes.

    Not thread-safe; one keeper per simulated world.
    """

    def __init__(self) -> None:
        self._keys: dict[bytes, RevealKey] = {}
        self._envelopes: dict[bytes, EncryptedTransaction] = {}
        self._opened: set[bytes] = set()
        self.failed_reveals: int = 0

    def register(self, env: EncryptedTransaction, rk: RevealKey) -> None:
        self._keys[env.envelope_id] = rk
        self._envelopes[env.envelope_id] = env

    def envelope(self, envelope_id: bytes) -> EncryptedTransaction:
        return self._envelopes[envelope_id]

    def reveal(self, envelope_id: bytes) -> Transaction | None:
        """Open an envelope; returns None (and logs) on reveal failure."""
        env = self._envelopes[envelope_id]
        rk = self._keys.get(envelope_id)
        if rk is None:
            self.failed_reveals += 1
            return None
        try:
            tx = open_envelope(env, rk)
        except RevealFailure:
            self.failed_reveals += 1
            return None
        self._opened.add(envelope_id)
        return tx

    def was_opened(self, envelope_id: bytes) -> bool:
        return envelope_id in self._opened
