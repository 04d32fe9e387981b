"""Scenario configuration: JSON in, validated dataclasses out.

Rationals may be written as JSON numbers (decimal meaning preserved) or as
"p/q" strings; serialization always emits "p/q" strings, and
parse → serialize → parse is the identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .auction import DEFAULT_LOTTERY_FRACTION, DEFAULT_SPLIT, RewardSplit, ScoringWeights
from .equilibrium import parse_rational
from .errors import ConfigError

ATTACK_KINDS = ("sandwich", "frontrun", "backrun")
REGIMES = ("greedy_fee", "mev_builder", "fairflow")


@dataclass(frozen=True)
class PoolConfig:
    reserve_eth: int
    reserve_token: int
    fee_ppm: int = 3000


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int  # inclusive

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ConfigError(f"empty range [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class AttackerConfig:
    kind: str  # sandwich | frontrun | backrun
    amount_ratio: Fraction = Fraction(1)  # attack size relative to victim size
    fee_front_multiplier: Fraction = Fraction(2)  # prices the front above the victim
    fee_back_divisor: Fraction = Fraction(2)  # prices the back below the victim
    min_victim_amount: int = 0  # target rule threshold (visible gas profile)

    def __post_init__(self) -> None:
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"unknown attack kind {self.kind!r}")
        if self.amount_ratio <= 0:
            raise ConfigError("amount_ratio must be positive")


@dataclass(frozen=True)
class WorkloadConfig:
    victims_per_slot: int = 1
    victim_amount: IntRange = IntRange(10_000_000_000, 10_000_000_000)
    victim_direction: str = "buy"  # "buy" | "sell" | "mixed"
    victim_fee_per_gas: IntRange = IntRange(50, 150)
    victim_urgency: IntRange = IntRange(0, 10)
    attackers: tuple[AttackerConfig, ...] = ()

    def __post_init__(self) -> None:
        if self.victims_per_slot < 0:
            raise ConfigError("victims_per_slot must be non-negative")
        if self.victim_direction not in ("buy", "sell", "mixed"):
            raise ConfigError(f"bad victim_direction {self.victim_direction!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    slots: int
    capacity_gas: int = 1_000_000
    pool: PoolConfig = PoolConfig(10**12, 10**12, 0)
    weights: ScoringWeights = ScoringWeights(w_fee=Fraction(1), w_urgency=Fraction(0))
    lottery_fraction: Fraction = DEFAULT_LOTTERY_FRACTION
    reward_split: RewardSplit = DEFAULT_SPLIT
    roster_sizes: dict[str, int] = field(
        default_factory=lambda: {
            "proposer": 1,
            "auction_manager": 1,
            "order_guardian": 1,
            "privacy_keeper": 1,
        }
    )
    regimes: tuple[str, ...] = REGIMES
    seeds: tuple[int, ...] = (0,)
    workload: WorkloadConfig = WorkloadConfig()
    victim_funding_eth: int = 10**15
    victim_funding_token: int = 10**15
    attacker_funding_eth: int = 10**15
    attacker_funding_token: int = 10**15

    def __post_init__(self) -> None:
        if self.slots <= 0:
            raise ConfigError("slots must be positive")
        if self.capacity_gas <= 0:
            raise ConfigError("capacity_gas must be positive")
        if not 0 <= self.lottery_fraction <= 1:
            raise ConfigError("lottery_fraction must be in [0, 1]")
        for regime in self.regimes:
            if regime not in REGIMES:
                raise ConfigError(f"unknown regime {regime!r}")
        for role in ("proposer", "auction_manager", "order_guardian", "privacy_keeper"):
            if self.roster_sizes.get(role, 0) < 0:
                raise ConfigError(f"roster size for {role} must be non-negative")


def _range_from(obj, name: str) -> IntRange:
    if isinstance(obj, int):
        return IntRange(obj, obj)
    if isinstance(obj, dict) and {"min", "max"} <= set(obj):
        return IntRange(int(obj["min"]), int(obj["max"]))
    raise ConfigError(f"{name}: expected an int or {{min, max}}")


def _range_to(r: IntRange) -> dict:
    return {"min": r.lo, "max": r.hi}


def scenario_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    try:
        pool_raw = data.get("pool", {})
        pool = PoolConfig(
            reserve_eth=int(pool_raw.get("reserve_eth", 10**12)),
            reserve_token=int(pool_raw.get("reserve_token", 10**12)),
            fee_ppm=int(pool_raw.get("fee_ppm", 0)),
        )
        weights_raw = data.get("weights", {"w_fee": 1, "w_urgency": 0})
        weights = ScoringWeights(
            w_fee=parse_rational(weights_raw.get("w_fee", 1)),
            w_urgency=parse_rational(weights_raw.get("w_urgency", 0)),
        )
        split_raw = data.get("reward_split")
        if split_raw is None:
            split = DEFAULT_SPLIT
        else:
            split = RewardSplit(
                proposer_share=parse_rational(split_raw["proposer"]),
                auction_manager_share=parse_rational(split_raw["auction_manager"]),
                order_guardian_share=parse_rational(split_raw["order_guardian"]),
                privacy_keeper_share=parse_rational(split_raw["privacy_keeper"]),
            )
        wl_raw = data.get("workload", {})
        attackers = tuple(
            AttackerConfig(
                kind=a["kind"],
                amount_ratio=parse_rational(a.get("amount_ratio", 1)),
                fee_front_multiplier=parse_rational(a.get("fee_front_multiplier", 2)),
                fee_back_divisor=parse_rational(a.get("fee_back_divisor", 2)),
                min_victim_amount=int(a.get("min_victim_amount", 0)),
            )
            for a in wl_raw.get("attackers", [])
        )
        workload = WorkloadConfig(
            victims_per_slot=int(wl_raw.get("victims_per_slot", 1)),
            victim_amount=_range_from(
                wl_raw.get("victim_amount", 10_000_000_000), "victim_amount"
            ),
            victim_direction=wl_raw.get("victim_direction", "buy"),
            victim_fee_per_gas=_range_from(
                wl_raw.get("victim_fee_per_gas", {"min": 50, "max": 150}),
                "victim_fee_per_gas",
            ),
            victim_urgency=_range_from(
                wl_raw.get("victim_urgency", {"min": 0, "max": 10}), "victim_urgency"
            ),
            attackers=attackers,
        )
        seeds_raw = data.get("seeds", [0])
        funding = data.get("funding", {})
        return ScenarioConfig(
            slots=int(data["slots"]),
            capacity_gas=int(data.get("capacity_gas", 1_000_000)),
            pool=pool,
            weights=weights,
            lottery_fraction=parse_rational(data.get("lottery_fraction", "1/4")),
            reward_split=split,
            roster_sizes={
                role: int(n)
                for role, n in data.get(
                    "roster",
                    {
                        "proposer": 1,
                        "auction_manager": 1,
                        "order_guardian": 1,
                        "privacy_keeper": 1,
                    },
                ).items()
            },
            regimes=tuple(data.get("regimes", list(REGIMES))),
            seeds=tuple(int(s) for s in seeds_raw),
            workload=workload,
            victim_funding_eth=int(funding.get("victim_eth", 10**15)),
            victim_funding_token=int(funding.get("victim_token", 10**15)),
            attacker_funding_eth=int(funding.get("attacker_eth", 10**15)),
            attacker_funding_token=int(funding.get("attacker_token", 10**15)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario: {exc!r}") from exc


def scenario_to_dict(sc: ScenarioConfig) -> dict:
    return {
        "slots": sc.slots,
        "capacity_gas": sc.capacity_gas,
        "pool": {
            "reserve_eth": sc.pool.reserve_eth,
            "reserve_token": sc.pool.reserve_token,
            "fee_ppm": sc.pool.fee_ppm,
        },
        "weights": {"w_fee": str(sc.weights.w_fee), "w_urgency": str(sc.weights.w_urgency)},
        "lottery_fraction": str(sc.lottery_fraction),
        "reward_split": {
            "proposer": str(sc.reward_split.proposer_share),
            "auction_manager": str(sc.reward_split.auction_manager_share),
            "order_guardian": str(sc.reward_split.order_guardian_share),
            "privacy_keeper": str(sc.reward_split.privacy_keeper_share),
        },
        "roster": dict(sc.roster_sizes),
        "regimes": list(sc.regimes),
        "seeds": list(sc.seeds),
        "workload": {
            "victims_per_slot": sc.workload.victims_per_slot,
            "victim_amount": _range_to(sc.workload.victim_amount),
            "victim_direction": sc.workload.victim_direction,
            "victim_fee_per_gas": _range_to(sc.workload.victim_fee_per_gas),
            "victim_urgency": _range_to(sc.workload.victim_urgency),
            "attackers": [
                {
                    "kind": a.kind,
                    "amount_ratio": str(a.amount_ratio),
                    "fee_front_multiplier": str(a.fee_front_multiplier),
                    "fee_back_divisor": str(a.fee_back_divisor),
                    "min_victim_amount": a.min_victim_amount,
                }
                for a in sc.workload.attackers
            ],
        },
        "funding": {
            "victim_eth": sc.victim_funding_eth,
            "victim_token": sc.victim_funding_token,
            "attacker_eth": sc.attacker_funding_eth,
            "attacker_token": sc.attacker_funding_token,
        },
    }


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(data)


def save_scenario(sc: ScenarioConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(sc), fh, indent=2, sort_keys=True)
        fh.write("\n")
