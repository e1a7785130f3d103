"""Experiment configuration, seeded replications and the comparison suite."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .engine import simulate
from .metrics import (LatencyHistogram, RingCounters, dumps, replication_stats, summary_json,
                      to_csv, waste_and_load_counters)
from .policies import CranPriority, DeterministicReservation, Fifo
from .ring import RingTopology
from .scheduler import SCHEDULERS, Assignment, CapacityParams, build_assignment
from .traffic import BEST_EFFORT, CRAN_DOWN, CRAN_UP, BeArrivalSpec, RrhSpec, be_arrivals

POLICIES = ("fifo", "cran_priority", "deterministic")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment.  Times are integer UoT, ``capacity`` is in bytes."""

    node_count: int = 5
    arc_weights: Any = "equidistant"
    rrh_nodes: Optional[tuple] = None
    bbu_node: int = 0
    period: int = 1000
    ring_size: int = 100
    emission_time: int = 500
    acceleration: int = 10
    capacity: int = 12_500
    k: int = 5
    policy: str = "cran_priority"
    scheduler: Optional[str] = None
    be_load: float = 0.4
    p_high: float = 0.05
    t_max: int = 100
    horizon: int = 1_000_000
    warmup_periods: int = 2
    replications: int = 100
    master_seed: int = 0
    out_dir: str = "results"

    def __post_init__(self):
        ints = ("node_count", "bbu_node", "period", "ring_size", "emission_time", "acceleration",
                "capacity", "k", "t_max", "horizon", "warmup_periods", "replications",
                "master_seed")
        for name in ints:
            x = getattr(self, name)
            if isinstance(x, bool) or not isinstance(x, int):
                raise ConfigError(f"{name} must be an integer, got {x!r}")
        for name in ("node_count", "period", "ring_size", "emission_time", "acceleration",
                     "capacity", "t_max", "horizon", "replications"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.k < 0 or self.warmup_periods < 0 or self.master_seed < 0:
            raise ConfigError("k, warmup_periods and master_seed must be non-negative")
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.policy == "deterministic" and self.scheduler not in SCHEDULERS:
            raise ConfigError(f"deterministic policy needs a scheduler from {sorted(SCHEDULERS)}")
        if not 0 <= self.be_load < 1:
            raise ConfigError("be_load must lie in [0, 1)")
        if not 0 <= self.p_high < 1:
            raise ConfigError("p_high must lie in [0, 1)")
        if self.horizon < (self.warmup_periods + 10) * self.period:
            raise ConfigError("horizon must cover the warm-up plus 10 periods")
        if self.emission_time > self.period or self.emission_time % self.acceleration:
            raise ConfigError("emission time must be a multiple of F and at most P")
        if self.rrh_nodes is not None:
            object.__setattr__(self, "rrh_nodes", tuple(self.rrh_nodes))
            if len(self.rrh_nodes) != self.k:
                raise ConfigError(f"{len(self.rrh_nodes)} RRH nodes given for k={self.k}")
        if not isinstance(self.arc_weights, str):
            object.__setattr__(self, "arc_weights", tuple(self.arc_weights))
        try:
            self.topology()
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.policy == "deterministic":
            try:
                self.params()
            except ValueError as e:
                raise ConfigError(str(e)) from None

    # -- construction ------------------------------------------------------
    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        try:
            return cls(**doc)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("arc_weights", "rrh_nodes"):
            if isinstance(d[key], tuple):
                d[key] = list(d[key])
        return d

    def replace(self, **changes) -> "ExperimentConfig":
        return ExperimentConfig.from_dict({**self.to_dict(), **changes})

    # -- derived objects -----------------------------------------------------
    def topology(self) -> RingTopology:
        rrh = self.rrh_nodes if self.rrh_nodes is not None else \
            tuple(i % self.node_count for i in range(self.k))
        if self.arc_weights == "equidistant":
            return RingTopology.equidistant(self.node_count, self.ring_size, rrh, self.bbu_node)
        if isinstance(self.arc_weights, str):
            raise ValueError("arc_weights must be a list or 'equidistant'")
        topo = RingTopology(self.arc_weights, rrh, self.bbu_node)
        if topo.node_count != self.node_count or topo.ring_size != self.ring_size:
            raise ValueError("arc weights disagree with node_count / ring_size")
        return topo

    def params(self) -> CapacityParams:
        return CapacityParams(self.period, self.ring_size, self.emission_time,
                              self.acceleration, self.k)

    def be_spec(self) -> BeArrivalSpec:
        return BeArrivalSpec.for_load(self.be_load / self.node_count, capacity=self.capacity,
                                      p_high=self.p_high, t_max=self.t_max)

    @property
    def warmup(self) -> int:
        return self.warmup_periods * self.period


def replication_seed(master_seed: int, rep: int) -> np.random.SeedSequence:
    """Seed of one replication, a pure function of (master seed, index)."""
    return np.random.SeedSequence(master_seed, spawn_key=(rep,))


@lru_cache(maxsize=4)
def _be_times(master_seed: int, rep: int, spec: BeArrivalSpec, nodes: int,
              horizon: int) -> tuple:
    be_seed = replication_seed(master_seed, rep).spawn(2)[1]
    return tuple(be_arrivals(spec, horizon, np.random.default_rng(s), node)
                 for node, s in enumerate(be_seed.spawn(nodes)))


def random_offsets(master_seed: int, rep: int, k: int, period: int) -> list[int]:
    off_seed = replication_seed(master_seed, rep).spawn(2)[0]
    return [int(x) for x in np.random.default_rng(off_seed).integers(0, period, k)]


@dataclass
class Replication:
    index: int
    histogram: LatencyHistogram
    counters: RingCounters
    offsets: list

    def record(self) -> dict:
        out: dict = {"replication": self.index, "offsets": self.offsets}
        for c, name in ((CRAN_UP, "cran_up"), (CRAN_DOWN, "cran_down"),
                        (BEST_EFFORT, "best_effort")):
            n = self.histogram.total(c)
            out[name] = {"count": n, "mean": self.histogram.mean(c) if n else None,
                         "max": self.histogram.max(c) if n else None}
        usage = waste_and_load_counters(self.counters)
        out["load_fraction"] = float(usage["load_fraction"])
        out["reserved_unused_per_period"] = float(usage["reserved_unused"])
        return out


def run_replication(config: ExperimentConfig, rep: int,
                    assignment: Optional[Assignment] = None) -> Replication:
    topo = config.topology()
    P = config.period
    if config.policy == "deterministic":
        params = config.params()
        if assignment is None:
            assignment = build_assignment(config.scheduler, params, topo)
        rrhs = assignment.rrh_specs(topo, params)
        policy: Any = DeterministicReservation(assignment)
    else:
        params = None
        offsets = random_offsets(config.master_seed, rep, config.k, P)
        rrhs = [RrhSpec(i, topo.rrh_nodes[i], m, config.emission_time, config.acceleration, P)
                for i, m in enumerate(offsets)]
        policy = Fifo() if config.policy == "fifo" else CranPriority()
    be = _be_times(config.master_seed, rep, config.be_spec(), topo.node_count, config.horizon)
    res = simulate(topo, P, config.acceleration, rrhs, policy, config.horizon,
                   warmup=config.warmup, be_times=be, params=params, strict=True)
    return Replication(rep, res.histogram, res.counters, [r.offset for r in rrhs])


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    replications: list
    histogram: LatencyHistogram
    assignment: Optional[Assignment] = None

    def means(self, cls: int) -> list[float]:
        return [r.histogram.mean(cls) for r in self.replications if r.histogram.total(cls)]

    def files(self) -> dict[str, str]:
        out = {
            "latency.csv": to_csv(self.histogram),
            "summary.json": dumps(summary_json(self.histogram)),
            "replications.json": dumps({"config": self.config.to_dict(),
                                        "replications": [r.record() for r in self.replications]}),
        }
        if self.assignment is not None:
            out["assignment.json"] = self.assignment.to_json()
        return out

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, text in self.files().items():
            p = out / name
            p.write_text(text)
            paths.append(p)
        return paths


def _assignment(config: ExperimentConfig) -> Optional[Assignment]:
    if config.policy != "deterministic":
        return None
    return build_assignment(config.scheduler, config.params(), config.topology())


def _collect(config: ExperimentConfig, reps: list,
             assignment: Optional[Assignment]) -> ExperimentResult:
    merged = LatencyHistogram()
    for r in reps:
        merged = merged.merge(r.histogram)
    return ExperimentResult(config, reps, merged, assignment)


def run_experiment(config: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Run every replication, merge histograms and optionally write the result files."""
    assignment = _assignment(config)
    reps = [run_replication(config, i, assignment) for i in range(config.replications)]
    result = _collect(config, reps, assignment)
    if out_dir is not None:
        result.write(out_dir)
    return result


# -- comparison suite -----------------------------------------------------------

BASELINE = ExperimentConfig()
DENSE = BASELINE.replace(k=12, emission_time=200)

SCENARIOS: dict[str, dict[str, ExperimentConfig]] = {
    "A": {"fifo": BASELINE.replace(policy="fifo"),
          "cran_priority": BASELINE.replace(policy="cran_priority")},
    "B": {"naive": BASELINE.replace(policy="deterministic", scheduler="naive"),
          "balance_period": BASELINE.replace(policy="deterministic", scheduler="balance_period")},
    "C": {"naive": DENSE.replace(policy="deterministic", scheduler="naive"),
          "compact": DENSE.replace(policy="deterministic", scheduler="compact"),
          "compact_balance": DENSE.replace(policy="deterministic", scheduler="compact_balance"),
          "balance_used": DENSE.replace(policy="deterministic", scheduler="balance_used")},
    "D": {"fifo": BASELINE.replace(policy="fifo"),
          "saturate": BASELINE.replace(policy="deterministic", scheduler="saturate"),
          "balance_period": BASELINE.replace(policy="deterministic", scheduler="balance_period")},
}

# (scenario, worse run, better run, traffic class); the first run must have the larger mean
ORDERINGS = [
    ("A", "fifo", "cran_priority", CRAN_UP),
    ("A", "fifo", "cran_priority", CRAN_DOWN),
    ("A", "cran_priority", "fifo", BEST_EFFORT),
    ("B", "naive", "balance_period", BEST_EFFORT),
    ("C", "naive", "compact", BEST_EFFORT),
    ("C", "compact", "compact_balance", BEST_EFFORT),
    ("C", "compact", "balance_used", BEST_EFFORT),
    ("D", "balance_period", "saturate", BEST_EFFORT),
]


def paired_difference(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Mean and standard error of a - b over replications sharing random streams."""
    return replication_stats(np.asarray(a) - np.asarray(b))


def _run_key(cfg: ExperimentConfig) -> str:
    d = cfg.to_dict()
    d.pop("out_dir")
    return json.dumps(d, sort_keys=True)


def suite_runs(replications: int = 30, horizon: int = 100_000, master_seed: int = 0,
               scenarios: Optional[Sequence[str]] = None) -> dict[str, dict[str, ExperimentResult]]:
    """Simulate every run of the chosen scenarios; shared runs are simulated once."""
    names = list(SCENARIOS) if scenarios is None else list(scenarios)
    for s in names:
        if s not in SCENARIOS:
            raise ConfigError(f"unknown scenario {s!r}; choose from {sorted(SCENARIOS)}")

    def sized(cfg):
        return cfg.replace(replications=replications, horizon=horizon, master_seed=master_seed)

    configs: dict[str, ExperimentConfig] = {}
    for s in names:
        for cfg in SCENARIOS[s].values():
            configs.setdefault(_run_key(sized(cfg)), sized(cfg))
    assignments = {key: _assignment(cfg) for key, cfg in configs.items()}
    # replication-major so every run of a replication reuses its BE arrivals
    reps: dict[str, list] = {key: [] for key in configs}
    for i in range(replications):
        for key, cfg in configs.items():
            reps[key].append(run_replication(cfg, i, assignments[key]))
    results = {key: _collect(cfg, reps[key], assignments[key]) for key, cfg in configs.items()}
    return {s: {run: results[_run_key(sized(cfg))] for run, cfg in SCENARIOS[s].items()}
            for s in names}


def paper_suite(replications: int = 30, horizon: int = 100_000, master_seed: int = 0,
                scenarios: Optional[Sequence[str]] = None, out_dir=None,
                runs: Optional[dict] = None) -> dict:
    """Run the scenario matrix and check the expected mean-latency orderings.

    All runs of one replication see the same best-effort arrivals, so
    orderings are judged on paired differences.
    """
    if runs is None:
        runs = suite_runs(replications, horizon, master_seed, scenarios)
    names = list(runs)
    if out_dir is not None:
        for s in names:
            for run, res in runs[s].items():
                res.write(Path(out_dir) / s / run)

    report: dict = {"replications": replications, "horizon": horizon,
                    "master_seed": master_seed, "scenarios": {}, "orderings": []}
    for s in names:
        block = {}
        for run, res in runs[s].items():
            block[run] = {}
            for c, cname in ((CRAN_UP, "cran_up"), (CRAN_DOWN, "cran_down"),
                             (BEST_EFFORT, "best_effort")):
                if res.histogram.total(c):
                    m, se = replication_stats(res.means(c))
                    block[run][cname] = {"mean": m, "se": se, "max": res.histogram.max(c)}
        report["scenarios"][s] = block
    for s, worse, better, c in ORDERINGS:
        if s not in runs:
            continue
        diff, se = paired_difference(runs[s][worse].means(c), runs[s][better].means(c))
        report["orderings"].append({
            "scenario": s, "larger": worse, "smaller": better,
            "class": ("cran_up", "cran_down", "best_effort")[c],
            "difference": diff, "se": se, "holds": bool(diff > se)})
    if "A" in runs:
        fifo, prio = runs["A"]["fifo"].histogram, runs["A"]["cran_priority"].histogram
        report["cran_priority_dominates"] = all(
            cdf_dominates(prio, fifo, c) for c in (CRAN_UP, CRAN_DOWN))
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "report.json").write_text(dumps(report))
        (Path(out_dir) / "report.txt").write_text(format_report(report))
    return report


def cdf_dominates(better: LatencyHistogram, worse: LatencyHistogram, cls: int) -> bool:
    """True when P(latency <= x) under ``better`` is at least that under ``worse`` for all x."""
    a, b = better.cdf(cls), worse.cdf(cls)
    n = max(a.size, b.size)
    a = np.concatenate([a, np.ones(n - a.size)])
    b = np.concatenate([b, np.ones(n - b.size)])
    return bool(np.all(a >= b - 1e-12))


def format_report(report: dict) -> str:
    lines = [f"replications={report['replications']} horizon={report['horizon']} "
             f"seed={report['master_seed']}"]
    for s, block in report["scenarios"].items():
        lines.append(f"scenario {s}")
        for run, stats in block.items():
            cells = "  ".join(f"{c}: {v['mean']:.3f} +/- {v['se']:.3f} (max {v['max']})"
                              for c, v in stats.items())
            lines.append(f"  {run:<16} {cells}")
    lines.append("orderings (mean of larger - smaller, paired SE)")
    for o in report["orderings"]:
        mark = "ok " if o["holds"] else "NO "
        lines.append(f"  {mark} {o['scenario']} {o['class']:<12} {o['larger']} > {o['smaller']}: "
                     f"{o['difference']:.3f} +/- {o['se']:.3f}")
    if "cran_priority_dominates" in report:
        lines.append(f"  cran_priority C-RAN CDF dominates fifo: {report['cran_priority_dominates']}")
    return "\n".join(lines) + "\n"
