"""Verifiable uniformly-random permutation of a slot's winning envelopes.

Inputs are canonicalized by ascending blinded id before shuffling, so the
permutation is a pure function of (winner set, slot, guardian round key) and
presentation order cannot steer it. The VRF input binds both the slot index
and a hash of the canonical input set: a guardian cannot grind the shuffle
by adding or removing members after seeing an output, and single-use round
keys close the retry channel.

The shuffle is Fisher-Yates driven by exact rejection-sampled draws from the
VRF output stream, hence uniform over all n! permutations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Slot, encode_u64, sha256
from .envelope import EncryptedTransaction
from .vrf import VrfKeyChain, VrfOutput, VrfProof, VrfStream, vrf_verify


@dataclass(frozen=True)
class OrderingRecord:
    slot_index: int
    input_tx_ids: tuple[bytes, ...]  # canonical: ascending blinded public id
    permutation: tuple[int, ...]  # output position k holds input index permutation[k]
    proof: VrfProof


def derive_permutation(vrf_out: VrfOutput, n: int) -> tuple[int, ...]:
    """Fisher-Yates shuffle of [0, n) driven by the output's byte stream."""
    if n < 0:
        raise ValueError("n must be non-negative")
    perm = list(range(n))
    stream = VrfStream(vrf_out)
    for i in range(n - 1, 0, -1):
        j = stream.uniform_below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return tuple(perm)


def ordering_alpha(slot_index: int, input_tx_ids: tuple[bytes, ...]) -> bytes:
    return encode_u64(slot_index) + sha256(*input_tx_ids)


def order_transactions(
    winners: list[EncryptedTransaction], chain: VrfKeyChain, slot: Slot
) -> OrderingRecord:
    """Canonicalize, bind, evaluate, shuffle. Consumes the slot's round key."""
    ids = sorted(env.public_view.tx_id_public for env in winners)
    if len(set(ids)) != len(ids):
        raise ValueError("winner set contains duplicate public ids")
    alpha = ordering_alpha(slot.index, tuple(ids))
    out, proof = chain.evaluate(slot.index, alpha)
    return OrderingRecord(
        slot_index=slot.index,
        input_tx_ids=tuple(ids),
        permutation=derive_permutation(out, len(ids)),
        proof=proof,
    )


def apply_ordering(
    record: OrderingRecord, envelopes: list[EncryptedTransaction]
) -> list[EncryptedTransaction]:
    """Arrange ``envelopes`` into the record's final order."""
    by_id = {env.public_view.tx_id_public: env for env in envelopes}
    canonical = [by_id[i] for i in record.input_tx_ids]
    return [canonical[src] for src in record.permutation]


def verify_ordering(record: OrderingRecord, guardian_pk: bytes) -> bool:
    """Accept iff the proof checks out and recomputing the shuffle from it
    reproduces the recorded permutation. Total: never raises."""
    alpha = ordering_alpha(record.slot_index, record.input_tx_ids)
    sk = record.proof.revealed_secret
    beta = sha256(sk, alpha)
    if not vrf_verify(guardian_pk, alpha, VrfOutput(beta=beta), record.proof):
        return False
    return derive_permutation(VrfOutput(beta=beta), len(record.input_tx_ids)) == tuple(
        record.permutation
    )


class OrderGuardian:
    """One ordering node: a keychain with one round key per slot."""

    def __init__(self, node_id: str, keychain: VrfKeyChain):
        self.node_id = node_id
        self.keychain = keychain

    def order(
        self, winners: list[EncryptedTransaction], slot: Slot
    ) -> OrderingRecord:
        return order_transactions(winners, self.keychain, slot)
