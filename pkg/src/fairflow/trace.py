"""JSONL event trace: one object per event, {slot, phase, payload}.

The trace is the audit surface: every proof, bid, receipt and ledger entry
lands here with enough context that a third party can re-verify the run
without the original world — VRF proofs re-check, winner selection and the
permutation replay bit-for-bit, ledger entries re-apportion, and fee
accounting reconciles against receipts. ``verify_events`` returns the first
violation (event index + check name) or None.

Phases: bid, close, select, order, reveal, execute, finalize, reward, fault.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import IO, TYPE_CHECKING, Iterable

from .core import Bid, Slot, encode_u64, sha256
from .errors import TraceError
from .vrf import VrfOutput, VrfProof, vrf_verify

if TYPE_CHECKING:
    from .auction import AuctionManager, AuctionResult, AuctionRound, LedgerEntry, RewardSplit
    from .chain import ExecutionReceipt
    from .ordering import OrderingRecord

PHASES = ("bid", "close", "select", "order", "reveal", "execute", "finalize", "reward", "fault")


class TraceWriter:
    """Append-only JSONL writer; one emit per event, deterministic bytes."""

    def __init__(self, fh: IO[str]):
        self._fh = fh

    def emit(self, slot_index: int, phase: str, payload: dict) -> None:
        if phase not in PHASES:
            raise ValueError(f"unknown phase {phase!r}")
        line = json.dumps(
            {"slot": slot_index, "phase": phase, "payload": payload},
            sort_keys=True,
            separators=(",", ":"),
        )
        self._fh.write(line + "\n")


class TraceCollector:
    """In-memory trace sink with the TraceWriter interface."""

    def __init__(self) -> None:
        self.events: list[dict] = []

    def emit(self, slot_index: int, phase: str, payload: dict) -> None:
        if phase not in PHASES:
            raise ValueError(f"unknown phase {phase!r}")
        self.events.append({"slot": slot_index, "phase": phase, "payload": payload})


def read_trace(path: str | Path) -> list[dict]:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                ev = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceError(f"line {lineno}: undecodable event: {exc}") from exc
            if not isinstance(ev, dict) or not {"slot", "phase", "payload"} <= set(ev):
                raise TraceError(f"line {lineno}: event missing slot/phase/payload")
            if ev["phase"] not in PHASES:
                raise TraceError(f"line {lineno}: unknown phase {ev['phase']!r}")
            events.append(ev)
    return events


# ---------------------------------------------------------------------------
# payload builders (bytes -> hex, Fraction -> "p/q" strings)


def bid_payload(bid: Bid) -> dict:
    return {
        "bid_id": bid.bid_id.hex(),
        "tx_id": bid.tx_id.hex(),
        "bidder": bid.bidder,
        "fee_offered": bid.fee_offered,
        "urgency": bid.urgency,
        "gas_declared": bid.gas_declared,
        "metadata": [[k, v] for k, v in bid.metadata],
    }


def _bid_from_payload(p: dict) -> Bid:
    return Bid(
        bid_id=bytes.fromhex(p["bid_id"]),
        tx_id=bytes.fromhex(p["tx_id"]),
        bidder=p["bidder"],
        fee_offered=p["fee_offered"],
        urgency=p["urgency"],
        gas_declared=p["gas_declared"],
        metadata=tuple((k, v) for k, v in p.get("metadata", [])),
    )


def _proof_payload(proof: VrfProof) -> dict:
    return {"round": proof.round_index, "secret": proof.revealed_secret.hex()}


def _proof_from_payload(p: dict) -> VrfProof:
    return VrfProof(round_index=p["round"], revealed_secret=bytes.fromhex(p["secret"]))


def selection_payload(
    round_: "AuctionRound", result: "AuctionResult", manager: "AuctionManager"
) -> dict:
    return {
        "manager": manager.node_id,
        "manager_pk": round_.manager_pk.hex(),
        "capacity_gas": round_.slot.capacity_gas,
        "w_fee": str(round_.weights.w_fee),
        "w_urgency": str(round_.weights.w_urgency),
        "lottery_fraction": str(round_.lottery_fraction),
        "proof": _proof_payload(result.selection_proof),
        "winners": [w.hex() for w in result.winners],
        "score_winner_count": result.score_winner_count,
        "total_fees": result.total_fees,
    }


def ordering_payload(record: "OrderingRecord", guardian_pk: bytes) -> dict:
    return {
        "guardian_pk": guardian_pk.hex(),
        "input_tx_ids": [i.hex() for i in record.input_tx_ids],
        "permutation": list(record.permutation),
        "proof": _proof_payload(record.proof),
    }


def pools_payload(pools: dict) -> dict:
    return {
        pool_id: {
            "reserve_eth": p.reserve_eth,
            "reserve_token": p.reserve_token,
            "fee_ppm": p.fee_ppm,
        }
        for pool_id, p in pools.items()
    }


def receipt_payload(receipt: "ExecutionReceipt", position: int) -> dict:
    return {
        "position": position,
        "tx_id": receipt.tx_id.hex(),
        "status": receipt.status,
        "reason": receipt.reason,
        "gas_used": receipt.gas_used,
        "fee_paid": receipt.fee_paid,
        "amount_out": receipt.amount_out,
    }


def reward_payload(
    pot: int,
    ledger: "tuple[LedgerEntry, ...]",
    split: "RewardSplit",
    roster: dict[str, tuple[str, ...]],
) -> dict:
    return {
        "pot": pot,
        "entries": [
            {"node_id": e.node_id, "role": e.role, "amount": e.amount} for e in ledger
        ],
        "split": {
            "proposer": str(split.proposer_share),
            "auction_manager": str(split.auction_manager_share),
            "order_guardian": str(split.order_guardian_share),
            "privacy_keeper": str(split.privacy_keeper_share),
        },
        "roster": {role: list(nodes) for role, nodes in roster.items()},
    }


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class Violation:
    event_index: int
    check: str
    detail: str


def _verify_selection(index: int, slot: int, payload: dict, bids: dict[bytes, Bid]) -> Violation | None:
    from .auction import CLOSED, AuctionRound, ScoringWeights, select_winners

    pk = bytes.fromhex(payload["manager_pk"])
    proof = _proof_from_payload(payload["proof"])
    alpha = encode_u64(slot)
    beta = sha256(proof.revealed_secret, alpha)
    if not vrf_verify(pk, alpha, VrfOutput(beta=beta), proof):
        return Violation(index, "vrf-proof", f"selection proof invalid for slot {slot}")

    round_ = AuctionRound(
        slot=Slot(index=slot, capacity_gas=payload["capacity_gas"]),
        weights=ScoringWeights(
            w_fee=Fraction(payload["w_fee"]), w_urgency=Fraction(payload["w_urgency"])
        ),
        lottery_fraction=Fraction(payload["lottery_fraction"]),
        manager_pk=pk,
        status=CLOSED,
        bids=dict(bids),
    )
    replayed = select_winners(round_, VrfOutput(beta=beta), proof)
    recorded = tuple(bytes.fromhex(w) for w in payload["winners"])
    if replayed.winners != recorded or replayed.total_fees != payload["total_fees"]:
        return Violation(index, "selection-replay", f"slot {slot} winners do not replay")

    gas = sum(bids[w].gas_declared for w in recorded if w in bids)
    if gas > payload["capacity_gas"]:
        return Violation(index, "capacity-bound", f"slot {slot} winners use {gas} gas")
    return None


def _verify_ordering_event(index: int, slot: int, payload: dict) -> Violation | None:
    from .ordering import derive_permutation, ordering_alpha

    guardian_pk = bytes.fromhex(payload["guardian_pk"])
    proof = _proof_from_payload(payload["proof"])
    input_ids = tuple(bytes.fromhex(i) for i in payload["input_tx_ids"])
    alpha = ordering_alpha(slot, input_ids)
    beta = sha256(proof.revealed_secret, alpha)
    if not vrf_verify(guardian_pk, alpha, VrfOutput(beta=beta), proof):
        return Violation(index, "vrf-proof", f"ordering proof invalid for slot {slot}")
    if derive_permutation(VrfOutput(beta=beta), len(input_ids)) != tuple(
        payload["permutation"]
    ):
        return Violation(index, "ordering-replay", f"slot {slot} permutation does not replay")
    return None


def _verify_reward(index: int, slot: int, payload: dict, fees_seen: int) -> Violation | None:
    from .auction import RewardSplit, apportion_fees

    entries = payload["entries"]
    total = sum(e["amount"] for e in entries)
    if total != payload["pot"]:
        return Violation(
            index, "reward-conservation", f"slot {slot} entries sum {total} != pot {payload['pot']}"
        )
    if payload["pot"] != fees_seen:
        return Violation(
            index,
            "fee-accounting",
            f"slot {slot} pot {payload['pot']} != receipts total {fees_seen}",
        )
    split = RewardSplit(
        proposer_share=Fraction(payload["split"]["proposer"]),
        auction_manager_share=Fraction(payload["split"]["auction_manager"]),
        order_guardian_share=Fraction(payload["split"]["order_guardian"]),
        privacy_keeper_share=Fraction(payload["split"]["privacy_keeper"]),
    )
    roster = {role: tuple(nodes) for role, nodes in payload["roster"].items()}
    replayed = apportion_fees(payload["pot"], split, roster)
    recorded = tuple(
        (e["node_id"], e["role"], e["amount"]) for e in entries
    )
    if tuple((e.node_id, e.role, e.amount) for e in replayed) != recorded:
        return Violation(index, "reward-replay", f"slot {slot} ledger does not replay")
    return None


def verify_events(events: Iterable[dict]) -> Violation | None:
    """Re-verify a trace; returns the first violation or None.

    Checks, per slot: VRF proofs, winner-selection replay, capacity bound,
    permutation replay, ledger conservation and apportionment replay, and
    receipt/pot fee accounting.
    """
    accepted_bids: dict[int, dict[bytes, Bid]] = {}
    fees_by_slot: dict[int, int] = {}
    for index, ev in enumerate(events):
        slot, phase, payload = ev["slot"], ev["phase"], ev["payload"]
        if phase == "bid":
            if payload["outcome"] == "accepted":
                bid = _bid_from_payload(payload["bid"])
                accepted_bids.setdefault(slot, {})[bid.bid_id] = bid
        elif phase == "execute":
            fees_by_slot[slot] = fees_by_slot.get(slot, 0) + payload["fee_paid"]
        elif phase == "select":
            v = _verify_selection(index, slot, payload, accepted_bids.get(slot, {}))
            if v:
                return v
        elif phase == "order":
            v = _verify_ordering_event(index, slot, payload)
            if v:
                return v
        elif phase == "reward":
            v = _verify_reward(index, slot, payload, fees_by_slot.get(slot, 0))
            if v:
                return v
    return None


def verify_trace_file(path: str | Path) -> Violation | None:
    return verify_events(read_trace(path))
