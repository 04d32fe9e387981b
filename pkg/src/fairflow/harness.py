"""Adversarial workloads, the three ordering regimes and MEV metrics.

The same deterministic workload (victim swaps plus attacker injections) is
replayed under three regimes over identical initial state:

- greedy_fee: public-mempool baseline; blocks are packed and ordered by
  descending max_fee_per_gas, so an attacker buys position with fees.
- mev_builder: the designated builder enumerates every permutation of the
  packed block (≤ 8 txs) and picks the one maximizing its own profit.
- fairflow: the full sealed-auction pipeline with VRF ordering. In this
  regime attackers see only the minimal public view (gas profile), never
  payloads; the baselines see the plaintext mempool. That asymmetry is the
  privacy effect under test and is recorded in the comparison report.

Attacker profit is marked at the final AMM spot price and computed from
trade flows, so fees count against it and initial balances cancel. All
metrics are recomputable from a run's event trace alone.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from .auction import AuctionManager, ROLES
from .chain import (
    Account,
    ChainState,
    ExecutionReceipt,
    GAS_SWAP,
    Pool,
    STATUS_DROPPED,
    STATUS_SUCCESS,
    World,
    gas_cost,
    run_slot,
    simulate_block,
    swap_quote,
    total_eth_value,
    total_token_value,
)
from .core import (
    Bid,
    Slot,
    Swap,
    Transaction,
    canonical_serialize,
    deserialize_transaction,
    encode_u64,
    sha256,
)
from .envelope import EncryptedTransaction, PrivacyKeeper, RevealKey, seal
from .errors import ConfigError, SearchBoundError, TraceError
from .ordering import OrderGuardian
from .scenario import ScenarioConfig
from .vrf import VrfKeyChain

POOL_ID = "main"
ATTACKER_ACCOUNT = "attacker-0"

GREEDY_FEE = "greedy_fee"
MEV_BUILDER = "mev_builder"
FAIRFLOW = "fairflow"

MEV_SEARCH_LIMIT = 8


# ---------------------------------------------------------------------------
# workload generation


@dataclass(frozen=True)
class WorkloadEntry:
    tx: Transaction
    key: bytes
    salt: bytes
    bid: Bid
    envelope: EncryptedTransaction
    tag: str  # "victim:<i>" | "attacker:front:<i>" | "attacker:back:<i>"


@dataclass(frozen=True)
class Workload:
    seed: int
    slots: tuple[tuple[WorkloadEntry, ...], ...]

    def digest(self) -> bytes:
        parts = []
        for slot_index, entries in enumerate(self.slots):
            for e in entries:
                parts.append(encode_u64(slot_index))
                parts.append(e.tag.encode("utf-8") + b"\x00")
                parts.append(canonical_serialize(e.tx))
                parts.append(e.key)
                parts.append(e.salt)
                parts.append(encode_u64(e.bid.fee_offered))
                parts.append(encode_u64(e.bid.urgency))
                parts.append(encode_u64(e.bid.gas_declared))
        return sha256(*parts)


def _make_entry(tx: Transaction, urgency: int, tag: str, rng: random.Random) -> WorkloadEntry:
    key = rng.randbytes(32)
    salt = rng.randbytes(16)
    env = seal(tx, key, salt)
    bid = Bid(
        bid_id=sha256(b"bid", env.public_view.tx_id_public),
        tx_id=env.public_view.tx_id_public,
        bidder=tx.sender,
        fee_offered=gas_cost(tx.payload) * tx.max_fee_per_gas,
        urgency=urgency,
        gas_declared=gas_cost(tx.payload),
        metadata=(),
    )
    return WorkloadEntry(tx=tx, key=key, salt=salt, bid=bid, envelope=env, tag=tag)


def generate_workload(scenario: ScenarioConfig, seed: int) -> Workload:
    """Deterministic per-slot stream of victim swaps and attacker injections.

    Regime-agnostic by construction: the same bytes feed every regime. The
    sandwich back-run amount is fixed at generation time (the front-run's
    quote against the genesis pool), since actual proceeds depend on the
    execution order the attacker cannot know in advance.
    """
    wl = scenario.workload
    rng = random.Random(int.from_bytes(sha256(b"workload", encode_u64(seed)), "big"))
    nonces: dict[str, int] = {}
    genesis_pool = Pool(
        reserve_eth=scenario.pool.reserve_eth,
        reserve_token=scenario.pool.reserve_token,
        fee_ppm=scenario.pool.fee_ppm,
    )

    def next_nonce(sender: str) -> int:
        nonces[sender] = nonces.get(sender, 0) + 1
        return nonces[sender] - 1

    def swap_tx(sender: str, direction: str, amount: int, fee: int) -> Transaction:
        return Transaction(
            sender=sender,
            nonce=next_nonce(sender),
            gas_limit=GAS_SWAP,
            max_fee_per_gas=fee,
            payload=Swap(pool_id=POOL_ID, direction=direction, amount_in=amount, min_out=0),
        )

    slots = []
    for _ in range(scenario.slots):
        entries: list[WorkloadEntry] = []
        victims: list[tuple[int, Transaction]] = []
        for i in range(wl.victims_per_slot):
            amount = rng.randint(wl.victim_amount.lo, wl.victim_amount.hi)
            if wl.victim_direction == "mixed":
                direction = rng.choice(("buy", "sell"))
            else:
                direction = wl.victim_direction
            fee = rng.randint(wl.victim_fee_per_gas.lo, wl.victim_fee_per_gas.hi)
            urgency = rng.randint(wl.victim_urgency.lo, wl.victim_urgency.hi)
            tx = swap_tx(f"victim-{i}", direction, amount, fee)
            victims.append((i, tx))
            entries.append(_make_entry(tx, urgency, f"victim:{i}", rng))
        for atk in wl.attackers:
            for i, victim_tx in victims:
                swap = victim_tx.payload
                assert isinstance(swap, Swap)
                if swap.amount_in < atk.min_victim_amount:
                    continue
                amount = int(atk.amount_ratio * swap.amount_in)
                victim_fee = victim_tx.max_fee_per_gas
                if atk.kind in ("sandwich", "frontrun"):
                    fee = int(victim_fee * atk.fee_front_multiplier)
                    tx = swap_tx(ATTACKER_ACCOUNT, swap.direction, amount, fee)
                    entries.append(_make_entry(tx, 0, f"attacker:front:{i}", rng))
                if atk.kind in ("sandwich", "backrun"):
                    fee = int(victim_fee / atk.fee_back_divisor)
                    back_dir = "sell" if swap.direction == "buy" else "buy"
                    back_amount = max(1, swap_quote(genesis_pool, swap.direction, amount))
                    tx = swap_tx(ATTACKER_ACCOUNT, back_dir, back_amount, fee)
                    entries.append(_make_entry(tx, 0, f"attacker:back:{i}", rng))
        slots.append(tuple(entries))
    return Workload(seed=seed, slots=tuple(slots))


# ---------------------------------------------------------------------------
# world construction and regime runners


def genesis_state(scenario: ScenarioConfig) -> ChainState:
    accounts = {}
    for i in range(scenario.workload.victims_per_slot):
        accounts[f"victim-{i}"] = Account(
            eth_balance=scenario.victim_funding_eth,
            token_balance=scenario.victim_funding_token,
        )
    if scenario.workload.attackers:
        accounts[ATTACKER_ACCOUNT] = Account(
            eth_balance=scenario.attacker_funding_eth,
            token_balance=scenario.attacker_funding_token,
        )
    pools = {
        POOL_ID: Pool(
            reserve_eth=scenario.pool.reserve_eth,
            reserve_token=scenario.pool.reserve_token,
            fee_ppm=scenario.pool.fee_ppm,
        )
    }
    return ChainState(accounts=accounts, pools=pools, height=0)


def build_world(scenario: ScenarioConfig, seed: int, trace=None) -> World:
    master = sha256(b"world", encode_u64(seed))
    rosters = {
        role: tuple(f"{role}-{i}" for i in range(scenario.roster_sizes.get(role, 0)))
        for role in ROLES
    }
    manager = AuctionManager(
        node_id=rosters["auction_manager"][0] if rosters["auction_manager"] else "auction_manager-0",
        keychain=VrfKeyChain(sha256(b"auction-manager-key", master), scenario.slots),
    )
    guardian = OrderGuardian(
        node_id=rosters["order_guardian"][0] if rosters["order_guardian"] else "order_guardian-0",
        keychain=VrfKeyChain(sha256(b"order-guardian-key", master), scenario.slots),
    )
    return World(
        state=genesis_state(scenario),
        auction_manager=manager,
        order_guardian=guardian,
        privacy_keeper=PrivacyKeeper(),
        rosters=rosters,
        split=scenario.reward_split,
        weights=scenario.weights,
        lottery_fraction=scenario.lottery_fraction,
        trace=trace,
    )


@dataclass(frozen=True)
class SlotTxRecord:
    tx: Transaction
    tag: str
    receipt: ExecutionReceipt
    position: int


@dataclass(frozen=True)
class SlotRecord:
    slot_index: int
    pool_before: Pool  # quote basis at submission time
    txs: tuple[SlotTxRecord, ...]
    dropped_count: int
    fee_pot: int
    ledger_total: int


@dataclass(frozen=True)
class RegimeRun:
    regime: str
    seed: int
    workload_digest: bytes
    records: tuple[SlotRecord, ...]
    final_pool: Pool
    eth_value_series: tuple[int, ...]  # accounts + reserves + fees, after each slot
    token_value_series: tuple[int, ...]
    final_height: int
    fees_collected: int


def run_fairflow(scenario: ScenarioConfig, seed: int, trace=None, report_sink=None) -> RegimeRun:
    workload = generate_workload(scenario, seed)
    world = build_world(scenario, seed, trace=trace)
    records = []
    eth_series = []
    token_series = []
    for slot_index, entries in enumerate(workload.slots):
        pool_before = world.state.pools[POOL_ID]
        tag_by_txid = {}
        for e in entries:
            world.submit(e.envelope, RevealKey(e.key, e.salt), e.bid, tag=e.tag)
            tag_by_txid[e.tx.tx_id] = e.tag
        report = run_slot(world, Slot(index=slot_index, capacity_gas=scenario.capacity_gas))
        if report_sink is not None:
            report_sink(report)
        executed = [r for r in report.receipts if r.status != STATUS_DROPPED]
        tx_by_id = {tx.tx_id: tx for tx in report.block.ordered_txs}
        records.append(
            SlotRecord(
                slot_index=slot_index,
                pool_before=pool_before,
                txs=tuple(
                    SlotTxRecord(
                        tx=tx_by_id[r.tx_id],
                        tag=tag_by_txid[r.tx_id],
                        receipt=r,
                        position=pos,
                    )
                    for pos, r in enumerate(executed)
                ),
                dropped_count=len(report.dropped),
                fee_pot=report.fee_pot,
                ledger_total=sum(e.amount for e in report.ledger),
            )
        )
        eth_series.append(total_eth_value(world))
        token_series.append(total_token_value(world))
    return RegimeRun(
        regime=FAIRFLOW,
        seed=seed,
        workload_digest=workload.digest(),
        records=tuple(records),
        final_pool=world.state.pools[POOL_ID],
        eth_value_series=tuple(eth_series),
        token_value_series=tuple(token_series),
        final_height=world.state.height,
        fees_collected=world.fees_collected,
    )


def greedy_fee_order(txs: list[Transaction]) -> list[int]:
    """Descending max_fee_per_gas, ties by ascending tx_id."""
    return sorted(range(len(txs)), key=lambda i: (-txs[i].max_fee_per_gas, txs[i].tx_id))


def _portfolio_delta(before: Account, after: Account, pool: Pool) -> int:
    """Balance change marked at the pool's spot price, floored."""
    d_eth = after.eth_balance - before.eth_balance
    d_tok = after.token_balance - before.token_balance
    return d_eth + (d_tok * pool.reserve_eth) // pool.reserve_token


def mev_optimal_order(
    txs: list[Transaction], state: ChainState, builder: str = ATTACKER_ACCOUNT
) -> tuple[int, ...]:
    """Exhaustive permutation search maximizing the builder's marked profit;
    ties resolve to the lexicographically first permutation."""
    if len(txs) > MEV_SEARCH_LIMIT:
        raise SearchBoundError(
            f"{len(txs)} txs exceed the {MEV_SEARCH_LIMIT}-tx exhaustive search bound"
        )
    before = state.account(builder)
    best: tuple[int, ...] | None = None
    best_profit = 0
    for perm in itertools.permutations(range(len(txs))):
        end_state, _ = simulate_block(state, [txs[i] for i in perm])
        profit = _portfolio_delta(before, end_state.account(builder), end_state.pools[POOL_ID])
        if best is None or profit > best_profit:
            best = perm
            best_profit = profit
    return best if best is not None else ()


def run_baseline(scenario: ScenarioConfig, seed: int, regime: str) -> RegimeRun:
    """Public-mempool regimes: fee-greedy inclusion, then regime ordering."""
    if regime not in (GREEDY_FEE, MEV_BUILDER):
        raise ConfigError(f"unknown baseline regime {regime!r}")
    workload = generate_workload(scenario, seed)
    state = genesis_state(scenario)
    fees_collected = 0
    records = []
    eth_series = []
    token_series = []
    for slot_index, entries in enumerate(workload.slots):
        pool_before = state.pools[POOL_ID]
        txs = [e.tx for e in entries]
        tags = {e.tx.tx_id: e.tag for e in entries}
        included: list[Transaction] = []
        used = 0
        for i in greedy_fee_order(txs):
            if used + txs[i].gas_limit <= scenario.capacity_gas:
                included.append(txs[i])
                used += txs[i].gas_limit
        if regime == MEV_BUILDER:
            perm = mev_optimal_order(included, state)
            ordered = [included[i] for i in perm]
        else:
            ordered = included
        state, receipts = simulate_block(state, ordered)
        pot = sum(r.fee_paid for r in receipts)
        fees_collected += pot
        records.append(
            SlotRecord(
                slot_index=slot_index,
                pool_before=pool_before,
                txs=tuple(
                    SlotTxRecord(tx=tx, tag=tags[tx.tx_id], receipt=r, position=pos)
                    for pos, (tx, r) in enumerate(zip(ordered, receipts))
                ),
                dropped_count=0,
                fee_pot=pot,
                ledger_total=pot,  # baseline: the proposer keeps the pot
            )
        )
        eth_series.append(
            sum(a.eth_balance for a in state.accounts.values())
            + sum(p.reserve_eth for p in state.pools.values())
            + fees_collected
        )
        token_series.append(
            sum(a.token_balance for a in state.accounts.values())
            + sum(p.reserve_token for p in state.pools.values())
        )
    return RegimeRun(
        regime=regime,
        seed=seed,
        workload_digest=workload.digest(),
        records=tuple(records),
        final_pool=state.pools[POOL_ID],
        eth_value_series=tuple(eth_series),
        token_value_series=tuple(token_series),
        final_height=scenario.slots,
        fees_collected=fees_collected,
    )


def run_regime(scenario: ScenarioConfig, seed: int, regime: str, trace=None) -> RegimeRun:
    if regime == FAIRFLOW:
        return run_fairflow(scenario, seed, trace=trace)
    return run_baseline(scenario, seed, regime)


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class MevMetrics:
    attacker_profit: int
    victim_slippage: float
    fee_position_spearman: float
    favorable_order_rate: float
    dropped_tx_count: int

    def to_dict(self) -> dict:
        return {
            "attacker_profit": self.attacker_profit,
            "victim_slippage": self.victim_slippage,
            "fee_position_spearman": self.fee_position_spearman,
            "favorable_order_rate": self.favorable_order_rate,
            "dropped_tx_count": self.dropped_tx_count,
        }


def _attacker_flows(records: tuple[SlotRecord, ...]) -> tuple[int, int]:
    """Net (eth, token) flow of attacker-tagged txs, fees included."""
    d_eth = 0
    d_tok = 0
    for rec in records:
        for t in rec.txs:
            if not t.tag.startswith("attacker"):
                continue
            d_eth -= t.receipt.fee_paid
            if t.receipt.status != STATUS_SUCCESS:
                continue
            payload = t.tx.payload
            if isinstance(payload, Swap):
                out = t.receipt.amount_out or 0
                if payload.direction == "buy":
                    d_eth -= payload.amount_in
                    d_tok += out
                else:
                    d_tok -= payload.amount_in
                    d_eth += out
    return d_eth, d_tok


def compute_metrics_from_records(
    records: tuple[SlotRecord, ...], final_pool: Pool
) -> MevMetrics:
    d_eth, d_tok = _attacker_flows(records)
    attacker_profit = d_eth + (d_tok * final_pool.reserve_eth) // final_pool.reserve_token

    slippages: list[float] = []
    rhos: list[float] = []
    favorable = 0
    trios = 0
    dropped = 0
    for rec in records:
        dropped += rec.dropped_count
        positions: dict[str, int] = {}
        fees = []
        poss = []
        for t in rec.txs:
            positions[t.tag] = t.position
            fees.append(t.tx.max_fee_per_gas)
            poss.append(t.position)
            if t.tag.startswith("victim") and t.receipt.status == STATUS_SUCCESS:
                payload = t.tx.payload
                if isinstance(payload, Swap):
                    expected = swap_quote(rec.pool_before, payload.direction, payload.amount_in)
                    if expected > 0:
                        actual = t.receipt.amount_out or 0
                        slippages.append((expected - actual) / expected)
        if len(fees) >= 2 and len(set(fees)) > 1:
            rho = stats.spearmanr(fees, poss).statistic
            if not np.isnan(rho):
                rhos.append(float(rho))
        for tag, pos in positions.items():
            if not tag.startswith("victim"):
                continue
            ordinal = tag.split(":")[1]
            front = positions.get(f"attacker:front:{ordinal}")
            back = positions.get(f"attacker:back:{ordinal}")
            if front is None or back is None:
                continue
            trios += 1
            if front < pos < back:
                favorable += 1
    return MevMetrics(
        attacker_profit=attacker_profit,
        victim_slippage=float(np.mean(slippages)) if slippages else 0.0,
        fee_position_spearman=float(np.mean(rhos)) if rhos else 0.0,
        favorable_order_rate=favorable / trios if trios else 0.0,
        dropped_tx_count=dropped,
    )


def metrics_for_run(run: RegimeRun) -> MevMetrics:
    return compute_metrics_from_records(run.records, run.final_pool)


def records_from_trace(events: list[dict]) -> tuple[tuple[SlotRecord, ...], Pool]:
    """Rebuild metric inputs from a fairflow event trace alone."""
    tags: dict[str, str] = {}  # tx_id_public hex -> tag
    slots: dict[int, dict] = {}
    last_pools: dict | None = None
    for ev in events:
        slot, phase, payload = ev["slot"], ev["phase"], ev["payload"]
        info = slots.setdefault(
            slot, {"pool_before": None, "txs": {}, "receipts": [], "dropped": 0, "pot": None, "ledger": None}
        )
        if phase == "bid":
            tags[payload["bid"]["tx_id"]] = payload["tag"]
        elif phase == "close":
            info["pool_before"] = payload["pools"][POOL_ID]
        elif phase == "reveal":
            if payload["ok"]:
                tx = deserialize_transaction(bytes.fromhex(payload["tx"]))
                info["txs"][payload["tx_id"]] = (tx, tags.get(payload["tx_id_public"], "user"))
            else:
                info["dropped"] += 1
        elif phase == "execute":
            info["receipts"].append(payload)
        elif phase == "reward":
            info["pot"] = payload["pot"]
            info["ledger"] = sum(e["amount"] for e in payload["entries"])
        elif phase == "finalize":
            last_pools = payload["pools"]
    if last_pools is None or POOL_ID not in last_pools:
        raise TraceError("trace carries no finalize pool snapshot")
    records = []
    for slot_index in sorted(slots):
        info = slots[slot_index]
        if info["pool_before"] is None:
            raise TraceError(f"slot {slot_index}: missing close event")
        pb = info["pool_before"]
        txs = []
        for r in info["receipts"]:
            if r["status"] == STATUS_DROPPED:
                continue
            if r["tx_id"] not in info["txs"]:
                raise TraceError(f"slot {slot_index}: receipt for unrevealed tx")
            tx, tag = info["txs"][r["tx_id"]]
            txs.append(
                SlotTxRecord(
                    tx=tx,
                    tag=tag,
                    receipt=ExecutionReceipt(
                        tx_id=bytes.fromhex(r["tx_id"]),
                        status=r["status"],
                        reason=r["reason"],
                        gas_used=r["gas_used"],
                        fee_paid=r["fee_paid"],
                        amount_out=r["amount_out"],
                    ),
                    position=r["position"],
                )
            )
        records.append(
            SlotRecord(
                slot_index=slot_index,
                pool_before=Pool(
                    reserve_eth=pb["reserve_eth"],
                    reserve_token=pb["reserve_token"],
                    fee_ppm=pb["fee_ppm"],
                ),
                txs=tuple(txs),
                dropped_count=info["dropped"],
                fee_pot=info["pot"] or 0,
                ledger_total=info["ledger"] or 0,
            )
        )
    fp = last_pools[POOL_ID]
    final_pool = Pool(
        reserve_eth=fp["reserve_eth"], reserve_token=fp["reserve_token"], fee_ppm=fp["fee_ppm"]
    )
    return tuple(records), final_pool


def compute_metrics(events: list[dict]) -> MevMetrics:
    """Pure recomputation of MevMetrics from a trace's events."""
    records, final_pool = records_from_trace(events)
    return compute_metrics_from_records(records, final_pool)


# ---------------------------------------------------------------------------
# cross-regime comparison


def run_comparison(scenario: ScenarioConfig, seeds: list[int]) -> dict:
    """Run each configured regime over each seed on identical workloads and
    aggregate MevMetrics (means and sample standard deviations)."""
    if not scenario.regimes:
        raise ConfigError("no regimes configured")
    regime_metrics: dict[str, list[MevMetrics]] = {r: [] for r in scenario.regimes}
    digests: dict[int, set[bytes]] = {}
    for seed in seeds:
        for regime in scenario.regimes:
            run = run_regime(scenario, seed, regime)
            digests.setdefault(seed, set()).add(run.workload_digest)
            regime_metrics[regime].append(metrics_for_run(run))
    for seed, ds in digests.items():
        if len(ds) != 1:
            raise AssertionError(f"workload digests diverged across regimes for seed {seed}")

    metric_names = (
        "attacker_profit",
        "victim_slippage",
        "fee_position_spearman",
        "favorable_order_rate",
        "dropped_tx_count",
    )
    report: dict = {
        "seeds": list(seeds),
        "workload_digests": {str(s): sorted(d.hex() for d in ds)[0] for s, ds in digests.items()},
        "regimes": {},
        "notes": [
            "fairflow attackers target from the minimal public view only; "
            "baseline attackers see the plaintext mempool — this asymmetry is "
            "the privacy effect under test",
        ],
    }
    for regime, metric_list in regime_metrics.items():
        per_seed = [m.to_dict() for m in metric_list]
        aggregate = {}
        for name in metric_names:
            values = np.array([m[name] for m in per_seed], dtype=float)
            aggregate[name] = {
                "mean": float(values.mean()),
                "std": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
            }
        report["regimes"][regime] = {"per_seed": per_seed, "aggregate": aggregate}
    return report


def comparison_csv_rows(report: dict) -> list[list]:
    """Flatten a comparison report into CSV rows (header first)."""
    header = [
        "regime",
        "seed",
        "attacker_profit",
        "victim_slippage",
        "fee_position_spearman",
        "favorable_order_rate",
        "dropped_tx_count",
    ]
    rows = [header]
    for regime, block in sorted(report["regimes"].items()):
        for seed, m in zip(report["seeds"], block["per_seed"]):
            rows.append(
                [
                    regime,
                    seed,
                    m["attacker_profit"],
                    m["victim_slippage"],
                    m["fee_position_spearman"],
                    m["favorable_order_rate"],
                    m["dropped_tx_count"],
                ]
            )
    return rows
