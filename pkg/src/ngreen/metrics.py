"""Latency histograms per traffic class, summaries, and ring usage counters."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .traffic import TrafficClass

CLASS_NAMES = {c: c.name.lower() for c in TrafficClass}
QUANTILES = (0.5, 0.9, 0.99)


class EmptyHistogram(ValueError):
    pass


@dataclass(frozen=True)
class LatencySample:
    cls: int
    latency: int
    node_id: int = 0
    period_index: int = 0


class LatencyHistogram:
    """Exact integer latency counts, one count vector per traffic class."""

    def __init__(self, counts: Mapping[int, np.ndarray] | None = None):
        self.counts: dict[int, np.ndarray] = {int(c): np.zeros(0, dtype=np.int64)
                                              for c in TrafficClass}
        for c, arr in (counts or {}).items():
            self.counts[int(c)] = np.asarray(arr, dtype=np.int64).copy()

    def record(self, sample: LatencySample) -> None:
        if sample.latency < 0:
            raise ValueError("negative latency")
        self.add(sample.cls, [sample.latency])

    def add(self, cls: int, latencies: Iterable[int]) -> None:
        lat = np.asarray(list(latencies) if not isinstance(latencies, np.ndarray) else latencies,
                         dtype=np.int64)
        if lat.size == 0:
            return
        if lat.min() < 0:
            raise ValueError("negative latency")
        binned = np.bincount(lat)
        self.counts[cls] = _add_counts(self.counts[cls], binned)

    def merge(self, other: "LatencyHistogram") -> "LatencyHistogram":
        return LatencyHistogram({c: _add_counts(self.counts[c], other.counts[c])
                                 for c in self.counts})

    def total(self, cls: int) -> int:
        return int(self.counts[cls].sum())

    def mean(self, cls: int) -> float:
        n = self.total(cls)
        if n == 0:
            raise EmptyHistogram(f"no samples for {CLASS_NAMES[TrafficClass(cls)]}")
        c = self.counts[cls]
        return float(Fraction(int(np.dot(np.arange(c.size, dtype=np.int64), c)), n))

    def max(self, cls: int) -> int:
        nz = np.flatnonzero(self.counts[cls])
        if nz.size == 0:
            raise EmptyHistogram(f"no samples for {CLASS_NAMES[TrafficClass(cls)]}")
        return int(nz[-1])

    def cdf(self, cls: int) -> np.ndarray:
        """P(latency <= x) for x = 0 .. max."""
        n = self.total(cls)
        if n == 0:
            raise EmptyHistogram(f"no samples for {CLASS_NAMES[TrafficClass(cls)]}")
        c = self.counts[cls][: self.max(cls) + 1]
        return np.cumsum(c) / n

    def quantile(self, cls: int, q: float) -> int:
        """Smallest latency x with CDF(x) >= q."""
        n = self.total(cls)
        if n == 0:
            raise EmptyHistogram(f"no samples for {CLASS_NAMES[TrafficClass(cls)]}")
        cum = np.cumsum(self.counts[cls])
        return int(np.searchsorted(cum, q * n - 1e-9 * n, side="left"))

    def __eq__(self, other):
        if not isinstance(other, LatencyHistogram):
            return NotImplemented
        return all(np.array_equal(np.trim_zeros(self.counts[c], "b"),
                                  np.trim_zeros(other.counts[c], "b")) for c in self.counts)


def _add_counts(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = max(a.size, b.size)
    out = np.zeros(n, dtype=np.int64)
    out[: a.size] += a
    out[: b.size] += b
    return out


def summarize(hist: LatencyHistogram, cls: int) -> dict:
    """mean / max / p50 / p90 / p99 and the CDF table of one class."""
    out = {"count": hist.total(cls), "mean": hist.mean(cls), "max": hist.max(cls)}
    for q in QUANTILES:
        out[f"p{round(q * 100)}"] = hist.quantile(cls, q)
    out["cdf"] = [round(float(x), 12) for x in hist.cdf(cls)]
    return out


def summary_json(hist: LatencyHistogram) -> dict:
    return {CLASS_NAMES[TrafficClass(c)]: summarize(hist, c)
            for c in hist.counts if hist.total(c) > 0}


def to_csv(hist: LatencyHistogram) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "latency_uot", "count"])
    for c in sorted(hist.counts):
        for lat in np.flatnonzero(hist.counts[c]):
            w.writerow([CLASS_NAMES[TrafficClass(c)], int(lat), int(hist.counts[c][lat])])
    return buf.getvalue()


def from_csv(text: str) -> LatencyHistogram:
    by_name = {v: int(k) for k, v in CLASS_NAMES.items()}
    hist = LatencyHistogram()
    for row in csv.DictReader(io.StringIO(text)):
        c = by_name[row["class"]]
        lat, n = int(row["latency_uot"]), int(row["count"])
        arr = np.zeros(lat + 1, dtype=np.int64)
        arr[lat] = n
        hist.counts[c] = _add_counts(hist.counts[c], arr)
    return hist


def dumps(obj) -> str:
    """Stable JSON rendering used for every file the package writes."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class RingCounters:
    filled: tuple[int, int, int]
    unused_reservations: int
    blocked_by_position: tuple[int, ...]
    window: int
    period: int
    ring_size: int
    acceleration: int

    @property
    def periods(self) -> Fraction:
        return Fraction(self.window, self.period)


def waste_and_load_counters(trace: RingCounters) -> dict:
    """Usage figures per steady-state period.

    ``waste_by_position`` expresses blocked container time (free but
    reserved) in UoT of the position's own timeline, so a position whose
    spare time is RS UoT per period reports RS.
    """
    periods = trace.periods
    if periods == 0:
        raise ValueError("empty measurement window")
    scale = Fraction(trace.acceleration, trace.ring_size) / periods
    waste = {p: b * scale for p, b in enumerate(trace.blocked_by_position) if b}
    filled = {CLASS_NAMES[TrafficClass(c)]: Fraction(n) / periods
              for c, n in enumerate(trace.filled)}
    return {
        "reserved_unused": Fraction(trace.unused_reservations) / periods,
        "waste_by_position": waste,
        "waste": sum(waste.values(), Fraction(0)),
        "containers_filled_per_class": filled,
        "load_fraction": Fraction(sum(trace.filled), trace.window),
    }


def replication_stats(values: Iterable[float]) -> tuple[float, float]:
    """Across-replication mean and standard error of the mean."""
    x = np.asarray(list(values), dtype=float)
    if x.size == 0:
        raise EmptyHistogram("no replications")
    if x.size == 1:
        return float(x[0]), float("inf")
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))
