"""Canonical value types shared by every stage of the pipeline.

Transactions, bids, slots and blocks are immutable values. A transaction's
identity is the SHA-256 hash of its canonical serialization: a fixed
field-order, length-prefixed binary encoding with no self-description, so
equal values serialize to equal bytes and distinct values never collide
short of a hash collision. Monetary quantities are plain integers (wei-like
units); exact rationals appear only where a rate is genuinely fractional.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .vrf import VrfProof

HASH_LEN = 32

BUY = "buy"
SELL = "sell"

URGENCY_MAX = 10

_PAYLOAD_NOOP = 0
_PAYLOAD_TRANSFER = 1
_PAYLOAD_SWAP = 2


def sha256(*parts: bytes) -> bytes:
    """Project-wide hash: SHA-256 over the concatenation of ``parts``."""
    h = hashlib.sha256()
    for p in parts:
        h.update(p)
    return h.digest()


def encode_u64(value: int) -> bytes:
    """8-byte big-endian encoding used for round indices and counters."""
    return value.to_bytes(8, "big")


@dataclass(frozen=True)
class Swap:
    pool_id: str
    direction: str  # BUY (eth -> token) or SELL (token -> eth)
    amount_in: int
    min_out: int

    def __post_init__(self) -> None:
        if self.direction not in (BUY, SELL):
            raise ValueError(f"direction must be {BUY!r} or {SELL!r}")
        if self.amount_in <= 0:
            raise ValueError("amount_in must be positive")
        if self.min_out < 0:
            raise ValueError("min_out must be non-negative")


@dataclass(frozen=True)
class Transfer:
    to: str
    amount: int

    def __post_init__(self) -> None:
        if self.amount < 0:
            raise ValueError("amount must be non-negative")


@dataclass(frozen=True)
class Noop:
    pass


Payload = Swap | Transfer | Noop


@dataclass(frozen=True)
class Transaction:
    """A user action; ``tx_id`` is derived, never stored, so it cannot drift."""

    sender: str
    nonce: int
    gas_limit: int
    max_fee_per_gas: int
    payload: Payload

    def __post_init__(self) -> None:
        if self.nonce < 0:
            raise ValueError("nonce must be non-negative")
        if self.gas_limit <= 0:
            raise ValueError("gas_limit must be positive")
        if self.max_fee_per_gas < 0:
            raise ValueError("max_fee_per_gas must be non-negative")

    @property
    def tx_id(self) -> bytes:
        return tx_hash(self)


def _enc_bytes(data: bytes) -> bytes:
    return len(data).to_bytes(4, "big") + data


def _enc_str(s: str) -> bytes:
    return _enc_bytes(s.encode("utf-8"))


def _enc_int(n: int) -> bytes:
    if n < 0:
        raise ValueError("negative integers are not serializable")
    return _enc_bytes(n.to_bytes((n.bit_length() + 7) // 8, "big") if n else b"")


def canonical_serialize(tx: Transaction) -> bytes:
    """Deterministic, injective byte encoding of a transaction.

    Fields appear in a fixed order, each length-prefixed (4-byte big-endian
    length); integers use minimal big-endian digits. Two transactions are
    equal iff their encodings are equal.
    """
    parts = [
        _enc_str(tx.sender),
        _enc_int(tx.nonce),
        _enc_int(tx.gas_limit),
        _enc_int(tx.max_fee_per_gas),
    ]
    p = tx.payload
    if isinstance(p, Noop):
        parts.append(bytes([_PAYLOAD_NOOP]))
    elif isinstance(p, Transfer):
        parts.append(bytes([_PAYLOAD_TRANSFER]))
        parts.append(_enc_str(p.to))
        parts.append(_enc_int(p.amount))
    elif isinstance(p, Swap):
        parts.append(bytes([_PAYLOAD_SWAP]))
        parts.append(_enc_str(p.pool_id))
        parts.append(bytes([0 if p.direction == BUY else 1]))
        parts.append(_enc_int(p.amount_in))
        parts.append(_enc_int(p.min_out))
    else:  # pragma: no cover - Payload union is closed
        raise TypeError(f"unknown payload type {type(p)!r}")
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated encoding")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def take_bytes(self) -> bytes:
        n = int.from_bytes(self.take(4), "big")
        return self.take(n)

    def take_str(self) -> str:
        return self.take_bytes().decode("utf-8")

    def take_int(self) -> int:
        raw = self.take_bytes()
        if raw and raw[0] == 0:
            raise ValueError("non-minimal integer encoding")
        return int.from_bytes(raw, "big")

    def done(self) -> None:
        if self.pos != len(self.data):
            raise ValueError("trailing bytes after encoding")


def deserialize_transaction(data: bytes) -> Transaction:
    """Inverse of :func:`canonical_serialize`; rejects malformed input."""
    r = _Reader(data)
    sender = r.take_str()
    nonce = r.take_int()
    gas_limit = r.take_int()
    max_fee = r.take_int()
    tag = r.take(1)[0]
    payload: Payload
    if tag == _PAYLOAD_NOOP:
        payload = Noop()
    elif tag == _PAYLOAD_TRANSFER:
        payload = Transfer(to=r.take_str(), amount=r.take_int())
    elif tag == _PAYLOAD_SWAP:
        pool_id = r.take_str()
        direction = BUY if r.take(1)[0] == 0 else SELL
        payload = Swap(
            pool_id=pool_id,
            direction=direction,
            amount_in=r.take_int(),
            min_out=r.take_int(),
        )
    else:
        raise ValueError(f"unknown payload tag {tag}")
    r.done()
    return Transaction(
        sender=sender,
        nonce=nonce,
        gas_limit=gas_limit,
        max_fee_per_gas=max_fee,
        payload=payload,
    )


def tx_hash(tx: Transaction) -> bytes:
    """32-byte transaction identity: SHA-256 of the canonical serialization."""
    return sha256(canonical_serialize(tx))


@dataclass(frozen=True)
class Bid:
    """A request for block space referencing a sealed transaction's public id."""

    bid_id: bytes
    tx_id: bytes  # the envelope's blinded public id, not the plaintext tx hash
    bidder: str
    fee_offered: int
    urgency: int
    gas_declared: int
    metadata: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if len(self.bid_id) != HASH_LEN:
            raise ValueError("bid_id must be 32 bytes")
        if self.fee_offered < 0:
            raise ValueError("fee_offered must be non-negative")
        if not 0 <= self.urgency <= URGENCY_MAX:
            raise ValueError(f"urgency must be in [0, {URGENCY_MAX}]")
        if self.gas_declared <= 0:
            raise ValueError("gas_declared must be positive")


@dataclass(frozen=True)
class Slot:
    index: int
    capacity_gas: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("slot index must be non-negative")
        if self.capacity_gas <= 0:
            raise ValueError("capacity_gas must be positive")


@dataclass(frozen=True)
class Block:
    """A finalized slot's payload; proofs are None only on the liveness
    fallback path (a slot aborted by a proof failure)."""

    slot: Slot
    ordered_txs: tuple[Transaction, ...]
    selection_proof: VrfProof | None
    ordering_proof: VrfProof | None
    proposer: str

    def __post_init__(self) -> None:
        total_gas = sum(tx.gas_limit for tx in self.ordered_txs)
        if total_gas > self.slot.capacity_gas:
            raise ValueError(
                f"block gas {total_gas} exceeds capacity {self.slot.capacity_gas}"
            )
        ids = [tx.tx_id for tx in self.ordered_txs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate tx_id within block")
