"""Simulated chain: constant-product AMM world state, transaction
execution, block simulation and the end-to-end slot pipeline.

Execution is integer-only with floor rounding that always favors the pool,
so the product of a pool's reserves never decreases across a swap. Failures
never raise out of execution: every outcome is a receipt (success, reverted
with reason, or dropped for a failed reveal). Gas is flat per payload kind —
enough structure for capacity packing without VM fidelity.

``run_slot`` drives one full slot: collect sealed submissions, run the
auction, randomize the winner order, reveal, execute, finalize and split the
collected fees. Any proof failure aborts into an empty block (liveness over
inclusion) with a logged fault. A world is a pure function of its scenario
and seed: replays are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from . import trace as trace_mod
from .auction import (
    ACCEPTED,
    AuctionManager,
    AuctionResult,
    LedgerEntry,
    ROLE_PROPOSER,
    RewardSplit,
    ScoringWeights,
    apportion_fees,
    submit_bid,
)
from .core import (
    Bid,
    Block,
    Noop,
    Payload,
    Slot,
    Swap,
    Transaction,
    Transfer,
    canonical_serialize,
)
from .envelope import EncryptedTransaction, PrivacyKeeper, RevealKey
from .errors import ProofRejectedError
from .ordering import OrderGuardian, OrderingRecord, apply_ordering, verify_ordering

GAS_SWAP = 100_000
GAS_TRANSFER = 21_000
GAS_NOOP = 21_000

PPM = 1_000_000

STATUS_SUCCESS = "success"
STATUS_REVERTED = "reverted"
STATUS_DROPPED = "dropped"


def gas_cost(payload: Payload) -> int:
    if isinstance(payload, Swap):
        return GAS_SWAP
    if isinstance(payload, Transfer):
        return GAS_TRANSFER
    return GAS_NOOP


@dataclass(frozen=True)
class Account:
    eth_balance: int = 0
    token_balance: int = 0

    def __post_init__(self) -> None:
        if self.eth_balance < 0 or self.token_balance < 0:
            raise ValueError("balances must be non-negative")


@dataclass(frozen=True)
class Pool:
    reserve_eth: int
    reserve_token: int
    fee_ppm: int = 3000

    def __post_init__(self) -> None:
        if self.reserve_eth <= 0 or self.reserve_token <= 0:
            raise ValueError("reserves must be positive")
        if not 0 <= self.fee_ppm < PPM:
            raise ValueError("fee_ppm must be in [0, 1e6)")


@dataclass(frozen=True)
class ChainState:
    accounts: dict[str, Account]
    pools: dict[str, Pool]
    height: int = 0

    def account(self, account_id: str) -> Account:
        return self.accounts.get(account_id, Account())


@dataclass(frozen=True)
class ExecutionReceipt:
    tx_id: bytes
    status: str
    reason: str | None
    gas_used: int
    fee_paid: int
    amount_out: int | None = None


def swap_quote(pool: Pool, direction: str, amount_in: int) -> int:
    """Constant-product output for a swap, after the pool fee, floored."""
    in_net = amount_in * (PPM - pool.fee_ppm) // PPM
    if direction == "buy":  # eth in, token out
        return pool.reserve_token * in_net // (pool.reserve_eth + in_net)
    return pool.reserve_eth * in_net // (pool.reserve_token + in_net)


def _reverted(tx: Transaction, reason: str, gas_used: int, fee: int) -> ExecutionReceipt:
    return ExecutionReceipt(
        tx_id=tx.tx_id,
        status=STATUS_REVERTED,
        reason=reason,
        gas_used=gas_used,
        fee_paid=fee,
    )


def execute_transaction(
    state: ChainState, tx: Transaction
) -> tuple[ChainState, ExecutionReceipt]:
    """Apply one transaction; all failures become receipts, never raises.

    The flat gas fee is debited even on revert; a sender who cannot cover the
    fee at all reverts with gas_used = 0 and no debit, keeping
    fee_paid = gas_used · max_fee_per_gas an identity.
    """
    gas = gas_cost(tx.payload)
    fee = gas * tx.max_fee_per_gas
    sender = state.account(tx.sender)
    if sender.eth_balance < fee:
        return state, _reverted(tx, "insufficient_fee", 0, 0)

    accounts = dict(state.accounts)
    accounts[tx.sender] = replace(sender, eth_balance=sender.eth_balance - fee)
    charged = ChainState(accounts=accounts, pools=state.pools, height=state.height)

    p = tx.payload
    if isinstance(p, Noop):
        return charged, ExecutionReceipt(
            tx_id=tx.tx_id, status=STATUS_SUCCESS, reason=None, gas_used=gas, fee_paid=fee
        )

    if isinstance(p, Transfer):
        src = charged.account(tx.sender)
        if src.eth_balance < p.amount:
            return charged, _reverted(tx, "insufficient_funds", gas, fee)
        dst = charged.account(p.to)
        accounts = dict(charged.accounts)
        accounts[tx.sender] = replace(src, eth_balance=src.eth_balance - p.amount)
        accounts[p.to] = replace(dst, eth_balance=dst.eth_balance + p.amount)
        return (
            ChainState(accounts=accounts, pools=charged.pools, height=charged.height),
            ExecutionReceipt(
                tx_id=tx.tx_id, status=STATUS_SUCCESS, reason=None, gas_used=gas, fee_paid=fee
            ),
        )

    assert isinstance(p, Swap)
    pool = charged.pools.get(p.pool_id)
    if pool is None:
        return charged, _reverted(tx, "no_pool", gas, fee)
    src = charged.account(tx.sender)
    have = src.eth_balance if p.direction == "buy" else src.token_balance
    if have < p.amount_in:
        return charged, _reverted(tx, "insufficient_funds", gas, fee)
    out = swap_quote(pool, p.direction, p.amount_in)
    if out < p.min_out:
        return charged, _reverted(tx, "slippage", gas, fee)
    accounts = dict(charged.accounts)
    pools = dict(charged.pools)
    if p.direction == "buy":
        accounts[tx.sender] = Account(
            eth_balance=src.eth_balance - p.amount_in,
            token_balance=src.token_balance + out,
        )
        pools[p.pool_id] = replace(
            pool,
            reserve_eth=pool.reserve_eth + p.amount_in,
            reserve_token=pool.reserve_token - out,
        )
    else:
        accounts[tx.sender] = Account(
            eth_balance=src.eth_balance + out,
            token_balance=src.token_balance - p.amount_in,
        )
        pools[p.pool_id] = replace(
            pool,
            reserve_eth=pool.reserve_eth - out,
            reserve_token=pool.reserve_token + p.amount_in,
        )
    return (
        ChainState(accounts=accounts, pools=pools, height=charged.height),
        ExecutionReceipt(
            tx_id=tx.tx_id,
            status=STATUS_SUCCESS,
            reason=None,
            gas_used=gas,
            fee_paid=fee,
            amount_out=out,
        ),
    )


def simulate_block(
    state: ChainState, ordered_txs: list[Transaction]
) -> tuple[ChainState, tuple[ExecutionReceipt, ...]]:
    """Sequential execution; reverted txs stay in the block with receipts."""
    receipts = []
    for tx in ordered_txs:
        state, receipt = execute_transaction(state, tx)
        receipts.append(receipt)
    return state, tuple(receipts)


@dataclass(frozen=True)
class Submission:
    """One sealed transaction plus its bid, as staged for a slot."""

    envelope: EncryptedTransaction
    bid: Bid
    tag: str = "user"  # workload role label: "victim" | "attacker" | "user"


@dataclass(frozen=True)
class SlotReport:
    slot: Slot
    block: Block
    receipts: tuple[ExecutionReceipt, ...]
    ledger: tuple[LedgerEntry, ...]
    fee_pot: int
    auction: AuctionResult | None
    ordering: OrderingRecord | None
    rejected_bids: tuple[tuple[bytes, str], ...]
    dropped: tuple[bytes, ...]  # public ids whose reveal failed
    faults: tuple[str, ...]


@dataclass
class World:
    """Mutable container for one scenario run (single-threaded)."""

    state: ChainState
    auction_manager: AuctionManager
    order_guardian: OrderGuardian
    privacy_keeper: PrivacyKeeper
    rosters: dict[str, tuple[str, ...]]
    split: RewardSplit
    weights: ScoringWeights
    lottery_fraction: Fraction
    fees_collected: int = 0
    pending: list[Submission] = field(default_factory=list)
    trace: object | None = None  # TraceWriter-compatible: emit(slot, phase, payload)

    def submit(self, env: EncryptedTransaction, rk: RevealKey, bid: Bid, tag: str = "user") -> None:
        self.privacy_keeper.register(env, rk)
        self.pending.append(Submission(envelope=env, bid=bid, tag=tag))

    def proposer_for(self, slot_index: int) -> str:
        proposers = self.rosters[ROLE_PROPOSER]
        return proposers[slot_index % len(proposers)]

    def _emit(self, slot_index: int, phase: str, payload: dict) -> None:
        if self.trace is not None:
            self.trace.emit(slot_index, phase, payload)


def total_eth_value(world: World) -> int:
    """Accounts + pool reserves + collected fees; constant across slots."""
    return (
        sum(a.eth_balance for a in world.state.accounts.values())
        + sum(p.reserve_eth for p in world.state.pools.values())
        + world.fees_collected
    )


def total_token_value(world: World) -> int:
    return sum(a.token_balance for a in world.state.accounts.values()) + sum(
        p.reserve_token for p in world.state.pools.values()
    )


def _empty_block(world: World, slot: Slot) -> Block:
    return Block(
        slot=slot,
        ordered_txs=(),
        selection_proof=None,
        ordering_proof=None,
        proposer=world.proposer_for(slot.index),
    )


def _fault_report(world: World, slot: Slot, reason: str) -> SlotReport:
    world._emit(slot.index, "fault", {"reason": reason})
    world.state = replace(world.state, height=world.state.height + 1)
    block = _empty_block(world, slot)
    world._emit(
        slot.index,
        "finalize",
        {
            "height": world.state.height,
            "proposer": block.proposer,
            "tx_ids": [],
            "pools": trace_mod.pools_payload(world.state.pools),
        },
    )
    return SlotReport(
        slot=slot,
        block=block,
        receipts=(),
        ledger=(),
        fee_pot=0,
        auction=None,
        ordering=None,
        rejected_bids=(),
        dropped=(),
        faults=(reason,),
    )


def run_slot(world: World, slot: Slot) -> SlotReport:
    """Drive one slot end to end over the world's pending submissions."""
    submissions = world.pending
    world.pending = []
    by_public_id = {s.envelope.public_view.tx_id_public: s for s in submissions}

    round_ = world.auction_manager.open_round(
        slot, world.weights, world.lottery_fraction
    )
    rejected: list[tuple[bytes, str]] = []
    for sub in submissions:
        outcome = submit_bid(round_, sub.bid)
        if outcome != ACCEPTED:
            rejected.append((sub.bid.bid_id, outcome))
        world._emit(
            slot.index,
            "bid",
            {
                "bid": trace_mod.bid_payload(sub.bid),
                "outcome": outcome,
                "tag": sub.tag,
            },
        )
    world.auction_manager.close_round(slot.index)
    world._emit(
        slot.index,
        "close",
        {"bids": len(round_.bids), "pools": trace_mod.pools_payload(world.state.pools)},
    )

    try:
        result, vrf_out = world.auction_manager.decide(slot.index)
    except ProofRejectedError as exc:
        # Guardian key still burns: one round key per slot, success or not.
        world.order_guardian.keychain.evaluate(slot.index, b"fault")
        return _fault_report(world, slot, f"selection: {exc}")
    world._emit(
        slot.index,
        "select",
        trace_mod.selection_payload(round_, result, world.auction_manager),
    )

    winner_envs = [by_public_id[round_.bids[w].tx_id].envelope for w in result.winners]
    record = world.order_guardian.order(winner_envs, slot)
    guardian_pk = world.order_guardian.keychain.public_key(slot.index)
    world._emit(
        slot.index, "order", trace_mod.ordering_payload(record, guardian_pk)
    )
    if not verify_ordering(record, guardian_pk):
        return _fault_report(world, slot, "ordering: proof failed verification")

    final_envs = apply_ordering(record, winner_envs)
    ordered_txs: list[Transaction] = []
    dropped: list[bytes] = []
    drop_receipts: list[ExecutionReceipt] = []
    for env in final_envs:
        tx = world.privacy_keeper.reveal(env.envelope_id)
        pub = env.public_view.tx_id_public
        if tx is None:
            dropped.append(pub)
            drop_receipts.append(
                ExecutionReceipt(
                    tx_id=pub,
                    status=STATUS_DROPPED,
                    reason="reveal-failure",
                    gas_used=0,
                    fee_paid=0,
                )
            )
            world._emit(slot.index, "reveal", {"tx_id_public": pub.hex(), "ok": False})
        else:
            ordered_txs.append(tx)
            world._emit(
                slot.index,
                "reveal",
                {
                    "tx_id_public": pub.hex(),
                    "ok": True,
                    "tx_id": tx.tx_id.hex(),
                    "tx": canonical_serialize(tx).hex(),
                },
            )

    new_state, receipts = simulate_block(world.state, ordered_txs)
    all_receipts = receipts + tuple(drop_receipts)
    for pos, r in enumerate(all_receipts):
        world._emit(slot.index, "execute", trace_mod.receipt_payload(r, pos))

    block = Block(
        slot=slot,
        ordered_txs=tuple(ordered_txs),
        selection_proof=result.selection_proof,
        ordering_proof=record.proof,
        proposer=world.proposer_for(slot.index),
    )
    world.state = replace(new_state, height=new_state.height + 1)
    world._emit(
        slot.index,
        "finalize",
        {
            "height": world.state.height,
            "proposer": block.proposer,
            "tx_ids": [tx.tx_id.hex() for tx in block.ordered_txs],
            "pools": trace_mod.pools_payload(world.state.pools),
        },
    )

    fee_pot = sum(r.fee_paid for r in all_receipts)
    ledger = apportion_fees(fee_pot, world.split, world.rosters)
    world.fees_collected += fee_pot
    world._emit(
        slot.index,
        "reward",
        trace_mod.reward_payload(fee_pot, ledger, world.split, world.rosters),
    )

    return SlotReport(
        slot=slot,
        block=block,
        receipts=all_receipts,
        ledger=ledger,
        fee_pot=fee_pot,
        auction=result,
        ordering=record,
        rejected_bids=tuple(rejected),
        dropped=tuple(dropped),
        faults=(),
    )
