"""Throughput, loss ratio, Jain fairness, cwnd traces and report files."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

REPORT_HEADER = ["variant", "buffer_pkts", "throughput_mbps", "loss_ratio", "intra_fair",
                 "rtt_fair"]


class MetricError(ValueError):
    """A metric is undefined for the given input."""


@dataclass
class FlowCounters:
    flow_id: int
    bytes_sent: int = 0
    bytes_delivered: int = 0
    pkts_sent: int = 0
    pkts_lost: int = 0
    start: float = 0.0
    end: float = 0.0


@dataclass
class CwndTracePoint:
    time: float
    flow_id: int
    cwnd: float
    ssthresh: float
    state: str


def throughput(c: FlowCounters) -> float:
    """Goodput in Mbps over the counters' active interval."""
    duration = c.end - c.start
    if duration <= 0:
        raise MetricError(f"flow {c.flow_id}: zero or negative duration")
    return c.bytes_delivered * 8 / duration / 1e6


def loss_ratio(c: FlowCounters) -> float:
    if c.pkts_sent <= 0:
        raise MetricError(f"flow {c.flow_id}: no packets sent")
    return c.pkts_lost / c.pkts_sent


def jain_index(values: Sequence[float]) -> float:
    n = len(values)
    if n == 0:
        raise MetricError("Jain index of an empty vector")
    if any(v < 0 for v in values):
        raise MetricError("Jain index needs nonnegative values")
    sq = math.fsum(v * v for v in values)
    if sq == 0:
        raise MetricError("Jain index undefined for an all-zero vector")
    s = math.fsum(values)
    return min(s * s / (n * sq), 1.0)


class Trace:
    """Per-flow cwnd samples. ``cadence`` is ``"per-ack"`` or a sampling interval in seconds."""

    def __init__(self, cadence: "str | float" = "per-ack"):
        self.cadence = cadence
        self.points: list[tuple] = []

    def record(self, flow_id: int, time: float, cwnd: float, ssthresh: float,
               state: str = "") -> None:
        if self.points and time < self.points[-1][0]:
            raise ValueError("trace points must be appended in time order")
        self.points.append((time, flow_id, cwnd, ssthresh, state))

    def __len__(self) -> int:
        return len(self.points)

    def series(self, flow_id: Optional[int] = None) -> list[CwndTracePoint]:
        return [CwndTracePoint(*p) for p in self.points if flow_id is None or p[1] == flow_id]


def record_trace(trace: Trace, flow_id: int, time: float, cwnd: float, ssthresh: float,
                 state: str = "") -> Trace:
    trace.record(flow_id, time, cwnd, ssthresh, state)
    return trace


def parse_cadence(text: "str | float | None") -> "str | float":
    """``per-ack`` or ``interval:<ms>`` to the internal cadence value."""
    if text is None or text == "per-ack":
        return "per-ack"
    if isinstance(text, (int, float)):
        return float(text)
    if text.startswith("interval:"):
        ms = float(text.split(":", 1)[1])
        if ms <= 0:
            raise ValueError("trace interval must be positive")
        return ms / 1000.0
    raise ValueError(f"unknown trace cadence {text!r}")


def format_cadence(cadence: "str | float") -> str:
    if cadence == "per-ack":
        return "per-ack"
    return f"interval:{cadence * 1000:g}"


def write_trace(path: Path, points: Iterable[tuple]) -> None:
    with open(path, "w") as fh:
        for t, fid, cwnd, ssthresh, state in points:
            fh.write(f"{t:.6f}\t{fid}\t{cwnd:.6f}\t{_fmt_ssthresh(ssthresh)}\t{state}\n")


def _fmt_ssthresh(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


def read_trace(path: Path) -> list[tuple]:
    out = []
    with open(path) as fh:
        for line in fh:
            t, fid, cwnd, ssthresh, state = line.rstrip("\n").split("\t")
            out.append((float(t), int(fid), float(cwnd), float(ssthresh), state))
    return out


@dataclass
class MetricsReport:
    variant: str
    buffer_pkts: int
    rtt_profile: str
    duration: float
    flow_throughput: list[float]
    aggregate_throughput: float
    loss_ratio: float
    intra_fair: Optional[float] = None
    rtt_fair: Optional[float] = None
    capacity_mbps: float = 1000.0
    counters: list[FlowCounters] = field(default_factory=list)
    seed: int = 0

    @property
    def mean_flow_throughput(self) -> float:
        return sum(self.flow_throughput) / len(self.flow_throughput)

    @property
    def utilization(self) -> float:
        return self.aggregate_throughput / self.capacity_mbps


def build_report(variant: str, buffer_pkts: int, rtt_profile: str, duration: float,
                 counters: list[FlowCounters], capacity_mbps: float,
                 seed: int = 0) -> MetricsReport:
    per_flow = [throughput(c) for c in counters]
    total_bytes = sum(c.bytes_delivered for c in counters)
    aggregate = total_bytes * 8 / duration / 1e6
    sent = sum(c.pkts_sent for c in counters)
    lost = sum(c.pkts_lost for c in counters)
    ratio = lost / sent if sent else 0.0
    fair = jain_index(per_flow) if any(per_flow) else None
    report = MetricsReport(variant, buffer_pkts, rtt_profile, duration, per_flow, aggregate,
                           ratio, capacity_mbps=capacity_mbps, counters=counters, seed=seed)
    if rtt_profile == "heterogeneous":
        report.rtt_fair = fair
    else:
        report.intra_fair = fair
    return report


def write_run_csv(path: Path, report: MetricsReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "buffer_pkts", "rtt_profile", "flow_id", "throughput_mbps",
                    "bytes_delivered", "pkts_sent", "pkts_lost", "loss_ratio"])
        for c, thr in zip(report.counters, report.flow_throughput):
            w.writerow([report.variant, report.buffer_pkts, report.rtt_profile, c.flow_id,
                        f"{thr:.6f}", c.bytes_delivered, c.pkts_sent, c.pkts_lost,
                        f"{c.pkts_lost / c.pkts_sent if c.pkts_sent else 0.0:.6f}"])
        w.writerow([report.variant, report.buffer_pkts, report.rtt_profile, "aggregate",
                    f"{report.aggregate_throughput:.6f}", "", "", "",
                    f"{report.loss_ratio:.6f}"])
        w.writerow([report.variant, report.buffer_pkts, report.rtt_profile, "mean",
                    f"{report.mean_flow_throughput:.6f}", "", "", "", ""])


def _cell(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.6f}"


def _mean(values: list) -> Optional[float]:
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def summary_rows(reports: Iterable[MetricsReport]) -> list[dict]:
    """Merge reports into one row per (variant, buffer), averaging over seeds.

    Throughput and loss come from the homogeneous runs when there are any; the
    heterogeneous runs contribute only the RTT-fairness column.
    """
    groups: dict[tuple[str, int], dict[str, list[MetricsReport]]] = {}
    for r in reports:
        by_profile = groups.setdefault((r.variant, r.buffer_pkts), {})
        by_profile.setdefault(r.rtt_profile, []).append(r)
    rows = []
    for key in sorted(groups, key=lambda k: (k[1], k[0])):
        hom = groups[key].get("homogeneous", [])
        het = groups[key].get("heterogeneous", [])
        base = hom or het
        rows.append({
            "variant": key[0], "buffer_pkts": key[1],
            "throughput_mbps": _mean([r.aggregate_throughput for r in base]),
            "loss_ratio": _mean([r.loss_ratio for r in base]),
            "intra_fair": _mean([r.intra_fair for r in hom]),
            "rtt_fair": _mean([r.rtt_fair for r in het]),
        })
    return rows


def write_summary_csv(path: Path, rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_HEADER)
        for row in rows:
            w.writerow([row["variant"], row["buffer_pkts"], _cell(row["throughput_mbps"]),
                        _cell(row["loss_ratio"]), _cell(row["intra_fair"]),
                        _cell(row["rtt_fair"])])
