"""Block-space auction: round lifecycle, bid scoring, hybrid winner
selection and reward distribution.

Winner selection is a hybrid of two tranches controlled by the lottery
fraction λ. The score tranche packs bids greedily by descending score
(w_fee · fee rate + w_urgency · urgency, exact rationals) into (1-λ) of the
slot's gas capacity, ties broken by a VRF-derived hash so arrival order
never matters. The lottery tranche ranks the remaining positive-score bids
by weighted-sampling keys u^(1/score) — u drawn per bid from the VRF output
— and packs them into whatever capacity is left. Both tranches are a pure
function of (bids, weights, λ, VRF output), so any third party can replay
the result from the published proof.

Money is integer; reward splitting uses largest-remainder apportionment so
ledger entries always sum exactly to the distributed total.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .core import Bid, Slot, encode_u64, sha256
from .errors import ConfigError, InvalidStateError, ProofRejectedError
from .vrf import VrfKeyChain, VrfOutput, VrfProof, vrf_verify

OPEN = "open"
CLOSED = "closed"
DECIDED = "decided"

ACCEPTED = "accepted"
REJECTED_LATE = "late"
REJECTED_DUPLICATE = "duplicate"
REJECTED_OVERSIZE = "oversize"

ROLE_PROPOSER = "proposer"
ROLE_AUCTION_MANAGER = "auction_manager"
ROLE_ORDER_GUARDIAN = "order_guardian"
ROLE_PRIVACY_KEEPER = "privacy_keeper"
ROLES = (ROLE_PROPOSER, ROLE_AUCTION_MANAGER, ROLE_ORDER_GUARDIAN, ROLE_PRIVACY_KEEPER)

_LOTTERY_DOMAIN = b"lot"
_RANK_DPS = 50  # fixed mpmath precision keeps lottery ranking platform-independent

with mpmath.workdps(_RANK_DPS):
    _LN2 = mpmath.ln(2)


@dataclass(frozen=True)
class ScoringWeights:
    w_fee: Fraction
    w_urgency: Fraction

    def __post_init__(self) -> None:
        if self.w_fee < 0 or self.w_urgency < 0:
            raise ValueError("weights must be non-negative")
        if self.w_fee == 0 and self.w_urgency == 0:
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class RewardSplit:
    proposer_share: Fraction
    auction_manager_share: Fraction
    order_guardian_share: Fraction
    privacy_keeper_share: Fraction

    def __post_init__(self) -> None:
        shares = self.as_tuple()
        if any(s < 0 for s in shares):
            raise ValueError("shares must be non-negative")
        if sum(shares) != 1:
            raise ValueError("shares must sum to exactly 1")

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (
            self.proposer_share,
            self.auction_manager_share,
            self.order_guardian_share,
            self.privacy_keeper_share,
        )


DEFAULT_SPLIT = RewardSplit(
    proposer_share=Fraction(70, 100),
    auction_manager_share=Fraction(15, 100),
    order_guardian_share=Fraction(10, 100),
    privacy_keeper_share=Fraction(5, 100),
)

DEFAULT_LOTTERY_FRACTION = Fraction(1, 4)


@dataclass
class AuctionRound:
    slot: Slot
    weights: ScoringWeights
    lottery_fraction: Fraction
    manager_pk: bytes
    status: str = OPEN
    bids: dict[bytes, Bid] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 <= self.lottery_fraction <= 1:
            raise ValueError("lottery_fraction must be in [0, 1]")


@dataclass(frozen=True)
class AuctionResult:
    winners: tuple[bytes, ...]  # score tranche order, then lottery order
    score_winner_count: int
    selection_proof: VrfProof
    total_fees: int


@dataclass(frozen=True)
class LedgerEntry:
    node_id: str
    role: str
    amount: int


def score_bid(bid: Bid, weights: ScoringWeights) -> Fraction:
    """w_fee · (fee_offered / gas_declared) + w_urgency · urgency, exact."""
    rate = Fraction(bid.fee_offered, bid.gas_declared)
    return weights.w_fee * rate + weights.w_urgency * bid.urgency


def submit_bid(round_: AuctionRound, bid: Bid) -> str:
    """Record a bid; returns ACCEPTED or a rejection reason."""
    if round_.status != OPEN:
        return REJECTED_LATE
    if bid.bid_id in round_.bids:
        return REJECTED_DUPLICATE
    if bid.gas_declared > round_.slot.capacity_gas:
        return REJECTED_OVERSIZE
    round_.bids[bid.bid_id] = bid
    return ACCEPTED


def _tie_hash(beta: bytes, bid_id: bytes) -> bytes:
    return sha256(beta, bid_id)


def _lottery_rank(beta: bytes, bid_id: bytes, score: Fraction) -> mpmath.mpf:
    """Ascending rank equivalent to descending key u^(1/score).

    u = (2h+1)/2^257 with h the per-bid draw; rank = -ln(u)/score > 0, and a
    smaller rank means a larger key. Fixed-precision mpmath keeps the
    comparison deterministic everywhere; exact ties fall back to bid_id.
    """
    h = int.from_bytes(sha256(beta, _LOTTERY_DOMAIN, bid_id), "big")
    with mpmath.workdps(_RANK_DPS):
        neg_ln_u = 257 * _LN2 - mpmath.ln(2 * h + 1)
        return neg_ln_u * score.denominator / score.numerator


def select_winners(
    round_: AuctionRound, vrf_out: VrfOutput, proof: VrfProof
) -> AuctionResult:
    """Deterministic hybrid selection; requires a closed round and a proof
    that verifies against the round's published manager key."""
    if round_.status != CLOSED:
        raise InvalidStateError(f"round must be closed, is {round_.status}")
    alpha = encode_u64(round_.slot.index)
    if not vrf_verify(round_.manager_pk, alpha, vrf_out, proof):
        raise ProofRejectedError("selection proof failed verification")
    beta = vrf_out.beta
    capacity = round_.slot.capacity_gas
    scores = {b.bid_id: score_bid(b, round_.weights) for b in round_.bids.values()}

    score_budget = (1 - round_.lottery_fraction) * capacity
    by_score = sorted(
        round_.bids.values(),
        key=lambda b: (-scores[b.bid_id], _tie_hash(beta, b.bid_id)),
    )
    winners: list[bytes] = []
    used = 0
    for b in by_score:
        if used + b.gas_declared <= score_budget:
            winners.append(b.bid_id)
            used += b.gas_declared
    score_count = len(winners)

    chosen = set(winners)
    lottery_pool = [
        b
        for b in round_.bids.values()
        if b.bid_id not in chosen and scores[b.bid_id] > 0
    ]
    lottery_pool.sort(
        key=lambda b: (_lottery_rank(beta, b.bid_id, scores[b.bid_id]), b.bid_id)
    )
    for b in lottery_pool:
        if used + b.gas_declared <= capacity:
            winners.append(b.bid_id)
            used += b.gas_declared

    round_.status = DECIDED
    total_fees = sum(round_.bids[w].fee_offered for w in winners)
    return AuctionResult(
        winners=tuple(winners),
        score_winner_count=score_count,
        selection_proof=proof,
        total_fees=total_fees,
    )


def apportion_largest_remainder(total: int, weights: list[Fraction]) -> list[int]:
    """Split ``total`` into integers proportional to ``weights``; the floors
    get topped up in order of descending fractional remainder (index order on
    ties), so the parts always sum to ``total`` exactly."""
    if total < 0:
        raise ValueError("total must be non-negative")
    weight_sum = sum(weights)
    if weight_sum <= 0:
        raise ValueError("weights must have positive sum")
    quotas = [total * w / weight_sum for w in weights]
    parts = [int(q) for q in quotas]  # Fraction.__int__ floors non-negatives
    leftover = total - sum(parts)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - parts[i]), i))
    for i in order[:leftover]:
        parts[i] += 1
    return parts


def distribute_rewards(
    result: AuctionResult,
    split: RewardSplit,
    roster: dict[str, tuple[str, ...]],
) -> tuple[LedgerEntry, ...]:
    """Apportion result.total_fees across roles then across each role's
    nodes (equal weights); Σ entries = total_fees exactly."""
    return apportion_fees(result.total_fees, split, roster)


def apportion_fees(
    total_fees: int,
    split: RewardSplit,
    roster: dict[str, tuple[str, ...]],
) -> tuple[LedgerEntry, ...]:
    shares = dict(zip(ROLES, split.as_tuple()))
    for role in ROLES:
        if shares[role] > 0 and not roster.get(role):
            raise ConfigError(f"role {role} has positive share but empty roster")
    active = [role for role in ROLES if roster.get(role)]
    role_amounts = apportion_largest_remainder(
        total_fees, [shares[role] for role in active]
    )
    entries: list[LedgerEntry] = []
    for role, amount in zip(active, role_amounts):
        nodes = roster[role]
        per_node = apportion_largest_remainder(amount, [Fraction(1)] * len(nodes))
        entries.extend(
            LedgerEntry(node_id=n, role=role, amount=a)
            for n, a in zip(nodes, per_node)
        )
    return tuple(entries)


class AuctionManager:
    """One auctioneer node: owns a keychain (one round key per slot) and the
    per-slot round lifecycle. Round keys are published ahead of use via the
    keychain's public list."""

    def __init__(self, node_id: str, keychain: VrfKeyChain):
        self.node_id = node_id
        self.keychain = keychain
        self.rounds: dict[int, AuctionRound] = {}

    def open_round(
        self,
        slot: Slot,
        weights: ScoringWeights,
        lottery_fraction: Fraction = DEFAULT_LOTTERY_FRACTION,
    ) -> AuctionRound:
        if slot.index in self.rounds:
            raise InvalidStateError(f"round for slot {slot.index} already open")
        round_ = AuctionRound(
            slot=slot,
            weights=weights,
            lottery_fraction=lottery_fraction,
            manager_pk=self.keychain.public_key(slot.index),
        )
        self.rounds[slot.index] = round_
        return round_

    def close_round(self, slot_index: int) -> AuctionRound:
        round_ = self.rounds[slot_index]
        if round_.status != OPEN:
            raise InvalidStateError(f"round for slot {slot_index} is not open")
        round_.status = CLOSED
        return round_

    def decide(self, slot_index: int) -> tuple[AuctionResult, VrfOutput]:
        """Close-to-decided transition: evaluate this slot's round key on the
        slot index and run selection."""
        round_ = self.rounds[slot_index]
        out, proof = self.keychain.evaluate(slot_index, encode_u64(slot_index))
        return select_winners(round_, out, proof), out
