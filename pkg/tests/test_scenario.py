"""Scenario config parsing, validation and round-trip identity."""

import json
from fractions import Fraction
from pathlib import Path

import pytest

from fairflow.errors import ConfigError
from fairflow.scenario import (
    ScenarioConfig,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

SANDWICH = Path(__file__).resolve().parent.parent / "scenarios" / "sandwich.json"


def test_shipped_sandwich_scenario_parses():
    sc = load_scenario(SANDWICH)
    assert sc.slots == 100
    assert sc.lottery_fraction == Fraction(1, 4)
    assert sc.workload.attackers[0].kind == "sandwich"
    assert sum(sc.reward_split.as_tuple()) == 1


def test_round_trip_identity():
    sc = load_scenario(SANDWICH)
    assert scenario_from_dict(scenario_to_dict(sc)) == sc
    # and a second hop through actual JSON text
    again = scenario_from_dict(json.loads(json.dumps(scenario_to_dict(sc))))
    assert again == sc


def test_save_load_round_trip(tmp_path):
    sc = scenario_from_dict({"slots": 7})
    path = tmp_path / "s.json"
    save_scenario(sc, path)
    assert load_scenario(path) == sc


def test_validation_errors():
    with pytest.raises(ConfigError):
        scenario_from_dict({"slots": 0})
    with pytest.raises(ConfigError):
        scenario_from_dict({"slots": 1, "lottery_fraction": "3/2"})
    with pytest.raises(ConfigError):
        scenario_from_dict({"slots": 1, "regimes": ["nonsense"]})
    with pytest.raises(ConfigError):
        scenario_from_dict({"slots": 1, "workload": {"victim_direction": "diagonal"}})
    with pytest.raises(ConfigError):
        scenario_from_dict({"slots": 1, "workload": {"attackers": [{"kind": "bribe"}]}})
    with pytest.raises(ConfigError):
        scenario_from_dict(
            {
                "slots": 1,
                "reward_split": {
                    "proposer": "1/2",
                    "auction_manager": "1/2",
                    "order_guardian": "1/2",
                    "privacy_keeper": "0",
                },
            }
        )
    with pytest.raises(ConfigError):
        scenario_from_dict([])


def test_missing_file_is_config_error():
    with pytest.raises(ConfigError) as err:
        load_scenario("/nonexistent/path.json")
    assert "path.json" in str(err.value)


def test_defaults_are_reasonable():
    sc = scenario_from_dict({"slots": 2})
    assert sc.capacity_gas == 1_000_000
    assert sc.workload.victims_per_slot == 1
    assert sc.regimes == ("greedy_fee", "mev_builder", "fairflow")
