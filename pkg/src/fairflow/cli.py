"""Command-line entry point.

Subcommands: run (the full pipeline for one seed), compare (regimes side by
side over many seeds), equilibrium (role-game analysis), verify (third-party
audit of an event trace).

Exit codes are part of the contract: 0 success, 2 configuration error,
3 internal fault, 4 verification failure. The FAIRFLOW_LOG environment
variable sets log verbosity only; it never affects results. All randomness
flows from --seed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import os
import sys
from pathlib import Path

from .errors import ConfigError, TraceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTERNAL = 3
EXIT_VERIFY = 4

log = logging.getLogger("fairflow")


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _slot_report_line(report) -> dict:
    return {
        "slot": report.slot.index,
        "proposer": report.block.proposer,
        "tx_ids": [tx.tx_id.hex() for tx in report.block.ordered_txs],
        "winners": [w.hex() for w in report.auction.winners] if report.auction else [],
        "fee_pot": report.fee_pot,
        "ledger": [
            {"node_id": e.node_id, "role": e.role, "amount": e.amount}
            for e in report.ledger
        ],
        "rejected_bids": [[b.hex(), reason] for b, reason in report.rejected_bids],
        "dropped": [d.hex() for d in report.dropped],
        "faults": list(report.faults),
    }


def cmd_run(args) -> int:
    from .harness import metrics_for_run, run_fairflow
    from .scenario import load_scenario, scenario_to_dict
    from .trace import TraceWriter

    scenario = load_scenario(args.scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    slot_lines: list[dict] = []
    trace_fh = None
    trace_writer = None
    trace_path = out_dir / "trace.jsonl"
    if args.trace == "on":
        trace_fh = io.StringIO()
        trace_writer = TraceWriter(trace_fh)

    run = run_fairflow(
        scenario,
        args.seed,
        trace=trace_writer,
        report_sink=lambda report: slot_lines.append(_slot_report_line(report)),
    )
    metrics = metrics_for_run(run)

    metrics_doc = {
        "scenario": scenario_to_dict(scenario),
        "seed": args.seed,
        "slots": scenario.slots,
        "height": run.final_height,
        "fees_collected": run.fees_collected,
        "metrics": metrics.to_dict(),
    }
    _atomic_write(out_dir / "metrics.json", _dump_json(metrics_doc))
    _atomic_write(
        out_dir / "slots.jsonl",
        "".join(json.dumps(line, sort_keys=True) + "\n" for line in slot_lines),
    )
    if trace_fh is not None:
        _atomic_write(trace_path, trace_fh.getvalue())
        log.info("trace written to %s", trace_path)
    log.info("run complete: %d slots, fees %d", scenario.slots, run.fees_collected)
    return EXIT_OK


def cmd_compare(args) -> int:
    from .harness import comparison_csv_rows, run_comparison
    from .scenario import load_scenario, scenario_to_dict

    scenario = load_scenario(args.scenario)
    if args.regimes is not None:
        regimes = tuple(r.strip() for r in args.regimes.split(",") if r.strip())
        if not regimes:
            raise ConfigError("empty regime list")
        from .scenario import REGIMES

        for r in regimes:
            if r not in REGIMES:
                raise ConfigError(f"unknown regime {r!r}")
        scenario = dataclasses.replace(scenario, regimes=regimes)
    if not scenario.regimes:
        raise ConfigError("empty regime list")
    seeds = list(range(args.seeds)) if args.seeds is not None else list(scenario.seeds)
    if not seeds:
        raise ConfigError("no seeds to run")

    report = run_comparison(scenario, seeds)
    report["scenario"] = scenario_to_dict(scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write(out_dir / "comparison.json", _dump_json(report))
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerows(comparison_csv_rows(report))
    _atomic_write(out_dir / "comparison.csv", buf.getvalue())
    log.info("comparison written for regimes %s", ",".join(scenario.regimes))
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    from .equilibrium import (
        MAX_BRUTE_FORCE_HORIZON,
        default_role_games,
        equilibrium_report,
        load_role_games,
    )

    if args.horizon is not None and not 1 <= args.horizon <= MAX_BRUTE_FORCE_HORIZON:
        raise ConfigError(
            f"horizon must be in [1, {MAX_BRUTE_FORCE_HORIZON}], got {args.horizon}"
        )
    games = load_role_games(args.params) if args.params else default_role_games()
    report = equilibrium_report(games, horizon=args.horizon)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _atomic_write(out_dir / "equilibrium.json", _dump_json(report))
    for role, entry in report["roles"].items():
        log.info("%s: honest_is_best_response=%s", role, entry["honest_is_best_response"])
    return EXIT_OK


def cmd_verify(args) -> int:
    from .trace import verify_trace_file

    try:
        violation = verify_trace_file(args.trace)
    except TraceError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"cannot read trace {args.trace}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if violation is not None:
        print(
            f"violation at event {violation.event_index}: {violation.check}: {violation.detail}",
            file=sys.stderr,
        )
        return EXIT_VERIFY
    print("trace verified: all proofs, replays and conservation checks pass")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairflow",
        description="Deterministic block-space auction and MEV measurement harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the full pipeline for one seed")
    p_run.add_argument("--scenario", required=True, help="scenario JSON path")
    p_run.add_argument("--seed", type=int, default=0, help="master seed (u64)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--trace", choices=("on", "off"), default="off")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="compare ordering regimes")
    p_cmp.add_argument("--scenario", required=True)
    p_cmp.add_argument("--seeds", type=int, default=None, help="use seeds 0..N-1")
    p_cmp.add_argument("--regimes", default=None, help="comma-separated regime list")
    p_cmp.add_argument("--out", required=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_eq = sub.add_parser("equilibrium", help="role-game equilibrium analysis")
    p_eq.add_argument("--params", default=None, help="role parameter JSON (default: shipped)")
    p_eq.add_argument("--horizon", type=int, default=None, help="brute-force cross-check horizon")
    p_eq.add_argument("--out", required=True)
    p_eq.set_defaults(func=cmd_equilibrium)

    p_ver = sub.add_parser("verify", help="audit an event trace")
    p_ver.add_argument("--trace", required=True, help="trace JSONL path")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("FAIRFLOW_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TraceError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except Exception as exc:  # internal fault contract
        log.exception("internal fault")
        print(f"internal fault: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
