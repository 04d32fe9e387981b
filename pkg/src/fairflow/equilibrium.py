"""Repeated-game analysis of the three node roles.

Each role plays an infinitely repeated game with geometric discounting:
honest play earns r per round forever; a one-shot deviation earns g but is
detected with probability p, which costs the penalty F and permanently ends
the income stream (grim exclusion). Undetected deviators resume honest play.

    V_honest  = r / (1 - δ)
    V_deviate = g - p·F + (1 - p)·δ·V_honest

Honesty is a best response iff V_honest ≥ V_deviate, i.e. iff
p ≥ p* = (g - r) / (δ·V_honest + F) whenever g > r (p* = 0 otherwise).
All arithmetic is exact rational, so the equilibrium booleans carry no
tolerance ambiguity.

``brute_force_best_response`` is the independent oracle: it enumerates every
honest/deviate sequence over a finite horizon under the same absorbing
detection dynamics. Note the end-game effect: with a finite horizon the last
round has no future to lose, so the finite-horizon argmax keeps all-honest
iff p·F ≥ g - r, a strictly stronger condition than the infinite-horizon
threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .errors import ConfigError, SearchBoundError

ROLE_NAMES = ("auction_manager", "order_guardian", "privacy_keeper")

MAX_BRUTE_FORCE_HORIZON = 20

HONEST = 0
DEVIATE = 1


def parse_rational(value: int | float | str | Fraction) -> Fraction:
    """Exact rationals from config values; floats go through their shortest
    decimal repr so a JSON 0.9 means 9/10, not the nearest binary double."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a rational: {value!r}") from exc


@dataclass(frozen=True)
class RoleGame:
    role: str
    r: Fraction  # per-round honest payoff
    g: Fraction  # one-shot deviation gain
    p: Fraction  # detection probability
    F: Fraction  # penalty on detection
    delta: Fraction  # discount factor

    def __post_init__(self) -> None:
        if self.r < 0 or self.g < 0 or self.F < 0:
            raise ValueError("r, g, F must be non-negative")
        if not 0 <= self.p <= 1:
            raise ValueError("p must be in [0, 1]")
        if not 0 <= self.delta < 1:
            raise ValueError("delta must be in [0, 1)")


def honest_value(game: RoleGame) -> Fraction:
    return game.r / (1 - game.delta)


def deviate_value(game: RoleGame) -> Fraction:
    return game.g - game.p * game.F + (1 - game.p) * game.delta * honest_value(game)


@dataclass(frozen=True)
class EquilibriumResult:
    role: str
    v_honest: Fraction
    v_deviate: Fraction
    honest_is_best_response: bool
    p_star: Fraction


def equilibrium_check(game: RoleGame) -> EquilibriumResult:
    v_h = honest_value(game)
    v_d = deviate_value(game)
    if game.g > game.r:
        p_star = (game.g - game.r) / (game.delta * v_h + game.F)
    else:
        p_star = Fraction(0)
    return EquilibriumResult(
        role=game.role,
        v_honest=v_h,
        v_deviate=v_d,
        honest_is_best_response=v_h >= v_d,
        p_star=p_star,
    )


@dataclass(frozen=True)
class BestResponseTable:
    horizon: int
    values: dict[tuple[int, ...], Fraction]
    argmax: tuple[int, ...]  # lexicographically first maximizer
    best_value: Fraction

    @property
    def all_honest_is_argmax(self) -> bool:
        return self.values[(HONEST,) * self.horizon] == self.best_value


def brute_force_best_response(game: RoleGame, horizon: int) -> BestResponseTable:
    """Exact discounted value of every honest/deviate sequence of length
    ``horizon`` under detection-absorbing dynamics.

    At a deviation round the payoff is g - p·F in expectation and play
    survives to the next round with probability (1 - p); honest rounds pay r
    and always survive.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if horizon > MAX_BRUTE_FORCE_HORIZON:
        raise SearchBoundError(
            f"horizon {horizon} exceeds bound {MAX_BRUTE_FORCE_HORIZON}"
        )
    r, g, p, F, delta = game.r, game.g, game.p, game.F, game.delta
    dev_payoff = g - p * F
    survive = (1 - p) * delta
    values: dict[tuple[int, ...], Fraction] = {}

    def walk(prefix: tuple[int, ...], weight: Fraction, acc: Fraction) -> None:
        if len(prefix) == horizon:
            values[prefix] = acc
            return
        walk(prefix + (HONEST,), weight * delta, acc + weight * r)
        walk(prefix + (DEVIATE,), weight * survive, acc + weight * dev_payoff)

    walk((), Fraction(1), Fraction(0))
    best = max(values.values())
    argmax = min(seq for seq, v in values.items() if v == best)
    return BestResponseTable(
        horizon=horizon, values=values, argmax=argmax, best_value=best
    )


# ---------------------------------------------------------------------------
# parameter files


def default_role_games() -> dict[str, RoleGame]:
    raw = resources.files("fairflow.data").joinpath("role_params_default.json")
    return parse_role_games(json.loads(raw.read_text(encoding="utf-8")))


def load_role_games(path: str | Path) -> dict[str, RoleGame]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"unreadable role parameters {path}: {exc}") from exc
    return parse_role_games(data)


def parse_role_games(data: dict) -> dict[str, RoleGame]:
    if not isinstance(data, dict) or not data:
        raise ConfigError("role parameters must be a non-empty object")
    games = {}
    for role, params in data.items():
        if not isinstance(params, dict):
            raise ConfigError(f"role {role}: parameters must be an object")
        missing = {"r", "g", "p", "F", "delta"} - set(params)
        if missing:
            raise ConfigError(f"role {role}: missing {sorted(missing)}")
        try:
            games[role] = RoleGame(
                role=role,
                r=parse_rational(params["r"]),
                g=parse_rational(params["g"]),
                p=parse_rational(params["p"]),
                F=parse_rational(params["F"]),
                delta=parse_rational(params["delta"]),
            )
        except ValueError as exc:
            raise ConfigError(f"role {role}: {exc}") from exc
    return games


def equilibrium_report(
    games: dict[str, RoleGame], horizon: int | None = None
) -> dict:
    """JSON-ready report: closed-form per role, plus the finite-horizon
    brute-force cross-check when a horizon is given."""
    report: dict = {"roles": {}}
    for role, game in games.items():
        res = equilibrium_check(game)
        entry = {
            "v_honest": str(res.v_honest),
            "v_deviate": str(res.v_deviate),
            "honest_is_best_response": res.honest_is_best_response,
            "p_star": str(res.p_star),
            "params": {
                "r": str(game.r),
                "g": str(game.g),
                "p": str(game.p),
                "F": str(game.F),
                "delta": str(game.delta),
            },
        }
        if horizon is not None:
            table = brute_force_best_response(game, horizon)
            entry["brute_force"] = {
                "horizon": horizon,
                "best_value": str(table.best_value),
                "argmax": list(table.argmax),
                "all_honest_is_argmax": table.all_honest_is_argmax,
            }
        report["roles"][role] = entry
    return report
