"""Command line entry point: ``run``, ``suite`` and ``schedule``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .harness import SCENARIOS, ConfigError, ExperimentConfig, format_report, paper_suite, \
    run_experiment
from .metrics import dumps
from .policies import ScheduleError
from .scheduler import SCHEDULERS, Assignment, CapacityExceeded, Infeasible, build_assignment, \
    check_validity, waste_by_position

EXIT_OK, EXIT_CONFIG, EXIT_INVALID = 0, 1, 2


def _load_config(path: str, args: argparse.Namespace) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    cfg = ExperimentConfig.from_json(text)
    overrides = {}
    for flag, name in (("seed", "master_seed"), ("out_dir", "out_dir"),
                       ("replications", "replications"), ("horizon", "horizon"),
                       ("scheduler", "scheduler")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[name] = value
    return cfg.replace(**overrides) if overrides else cfg


def cmd_run(args) -> int:
    cfg = _load_config(args.config, args)
    result = run_experiment(cfg, cfg.out_dir)
    print(f"wrote {', '.join(sorted(result.files()))} to {cfg.out_dir}")
    for name, stats in json.loads(result.files()["summary.json"]).items():
        print(f"{name:<12} n={stats['count']} mean={stats['mean']:.3f} max={stats['max']} "
              f"p99={stats['p99']}")
    return EXIT_OK


def cmd_suite(args) -> int:
    out = args.out_dir or "results/suite"
    report = paper_suite(args.replications or 30, args.horizon or 100_000, args.seed or 0,
                         args.scenario, out)
    sys.stdout.write(format_report(report))
    return EXIT_OK


def cmd_schedule(args) -> int:
    cfg = _load_config(args.config, args)
    topo, params = cfg.topology(), cfg.params()
    if args.assignment:
        assignment = Assignment.from_json(Path(args.assignment).read_text(), "file")
    else:
        if cfg.scheduler is None:
            raise ConfigError(f"no scheduler given; choose from {sorted(SCHEDULERS)}")
        assignment = build_assignment(cfg.scheduler, params, topo)
    verdict = check_validity(assignment, topo, params)
    doc = {"scheduler": assignment.kind, "valid": verdict.valid,
           "max_latency": verdict.max_latency, "assignment": json.loads(assignment.to_json())}
    if verdict:
        w = waste_by_position(assignment, topo, params)
        doc["waste_by_position"] = {str(p): float(x) for p, x in sorted(w.items())}
        doc["waste"] = float(sum(w.values()))
    else:
        doc["conflict"] = {"detail": verdict.detail, "time": verdict.time, "node": verdict.node}
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "assignment.json").write_text(assignment.to_json())
    sys.stdout.write(dumps(doc))
    return EXIT_OK if verdict else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ngreen", description="Slotted optical ring with C-RAN traffic")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_config=True):
        if with_config:
            p.add_argument("config", help="experiment config (JSON)")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out-dir", dest="out_dir", help="directory for result files")
        p.add_argument("--replications", type=int)
        p.add_argument("--horizon", type=int, help="simulated UoT per replication")

    p = sub.add_parser("run", help="run one experiment")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("suite", help="run the scenario comparison")
    common(p, with_config=False)
    p.add_argument("--scenario", action="append", choices=sorted(SCENARIOS),
                   help="scenario to run; repeat for several (default: all)")
    p.set_defaults(func=cmd_suite)
    p = sub.add_parser("schedule", help="build or check an assignment")
    common(p)
    p.add_argument("--scheduler", choices=sorted(SCHEDULERS))
    p.add_argument("--assignment", help="check this assignment JSON instead of building one")
    p.set_defaults(func=cmd_schedule)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CapacityExceeded, Infeasible) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ScheduleError as e:
        print(f"invalid schedule at t={e.time} node={e.node}: {e.detail}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
