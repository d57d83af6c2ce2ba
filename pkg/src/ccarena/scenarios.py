"""Dumbbell experiments, scenario files, single runs and buffer sweeps."""

from __future__ import annotations

import configparser
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import cc as ccmod
from .engine import Engine, EngineStats, Network, to_ns
from .metrics import FlowCounters, MetricsReport, Trace, build_report, parse_cadence
from .tcp import TcpReceiver, TcpSender

log = logging.getLogger(__name__)

GBPS = 1e9
ACCESS_DELAY = 0.001
CORE_DELAY = 0.100
EXP1_BUFFER = 12750
PAPER_BUFFERS = (100, 250, 500, 1000, 2500, 5000)
HETERO_DELAYS = (0.001, 0.005, 0.010, 0.020)
PROFILES = ("homogeneous", "heterogeneous")


class ScenarioError(ValueError):
    pass


@dataclass
class LinkSpec:
    src: str
    dst: str
    bandwidth: float  # bits per second
    delay: float  # seconds
    queue_pkts: int


@dataclass
class FlowSpec:
    flow_id: int
    variant: str
    src: str
    dst: str
    start: float = 0.0


@dataclass
class Scenario:
    name: str
    nodes: list[str]
    links: list[LinkSpec]
    flows: list[FlowSpec]
    buffer_pkts: int
    duration: float = 100.0
    rtt_profile: str = "homogeneous"
    seed: int = 0
    packet_size: int = 1000
    scale: float = 1.0
    bottleneck: tuple[str, str] = ("R1", "R2")
    params: dict[str, Any] = field(default_factory=dict)
    trace_cadence: Any = "per-ack"

    @property
    def variant(self) -> str:
        return self.flows[0].variant

    def link(self, src: str, dst: str) -> LinkSpec:
        for link in self.links:
            if (link.src, link.dst) == (src, dst):
                return link
        raise KeyError((src, dst))

    @property
    def capacity_bps(self) -> float:
        return self.link(*self.bottleneck).bandwidth

    def base_rtt(self, flow: FlowSpec) -> float:
        """Round-trip propagation delay along the routed path, no queuing."""
        path = _path(self, flow.src, flow.dst)
        back = _path(self, flow.dst, flow.src)
        return sum(l.delay for l in path) + sum(l.delay for l in back)

    def validate(self) -> None:
        names = set(self.nodes)
        for link in self.links:
            if link.src not in names or link.dst not in names:
                raise ScenarioError(f"link {link.src}->{link.dst} references an unknown node")
            if link.bandwidth <= 0 or link.delay < 0 or link.queue_pkts < 0:
                raise ScenarioError(f"link {link.src}->{link.dst} has invalid parameters")
        if not self.flows:
            raise ScenarioError("scenario has no flows")
        for f in self.flows:
            ccmod.get_class(f.variant)
            if f.src not in names or f.dst not in names:
                raise ScenarioError(f"flow {f.flow_id} endpoint missing")
            _path(self, f.src, f.dst)
            _path(self, f.dst, f.src)
        if len({f.variant for f in self.flows}) != 1:
            raise ScenarioError("all flows in a run must use the same variant")
        if self.duration <= 0:
            raise ScenarioError("duration must be positive")
        ccmod.validate_overrides(self.params)


def _path(sc: Scenario, src: str, dst: str) -> list[LinkSpec]:
    adj: dict[str, list[LinkSpec]] = {}
    for link in sc.links:
        adj.setdefault(link.src, []).append(link)
    prev: dict[str, Optional[LinkSpec]] = {src: None}
    frontier = [src]
    while frontier:
        nxt = []
        for node in frontier:
            for link in adj.get(node, []):
                if link.dst not in prev:
                    prev[link.dst] = link
                    nxt.append(link.dst)
        frontier = nxt
    if dst not in prev:
        raise ScenarioError(f"no route from {src} to {dst}")
    path = []
    node = dst
    while prev[node] is not None:
        path.append(prev[node])
        node = prev[node].src
    return path[::-1]


def _duplex(a: str, b: str, bw: float, delay: float, q_ab: int, q_ba: int) -> list[LinkSpec]:
    return [LinkSpec(a, b, bw, delay, q_ab), LinkSpec(b, a, bw, delay, q_ba)]


def _scaled(pkts: int, scale: float) -> int:
    return max(1, round(pkts * scale))


def build_exp1(variant: str, *, buffer_pkts: int = EXP1_BUFFER, scale: float = 1.0,
               duration: float = 100.0, seed: int = 0,
               params: Optional[dict] = None) -> Scenario:
    """Single flow S1 -> R1 -> R2 -> D1 with no slower bottleneck link.

    ``scale`` multiplies every link rate and queue size, keeping the
    buffer-to-BDP ratio of the full-size configuration.
    """
    ccmod.get_class(variant)
    bw = GBPS * scale
    q = _scaled(buffer_pkts, scale)
    links = (_duplex("S1", "R1", bw, ACCESS_DELAY, q, q)
             + _duplex("R1", "R2", bw, CORE_DELAY, q, q)
             + _duplex("R2", "D1", bw, ACCESS_DELAY, q, q))
    sc = Scenario("exp1", ["S1", "R1", "R2", "D1"], links, [FlowSpec(1, variant, "S1", "D1")],
                  buffer_pkts=buffer_pkts, duration=duration, rtt_profile="homogeneous",
                  seed=seed, scale=scale, params=dict(params or {}))
    sc.validate()
    return sc


def build_exp2(variant: str, buffer_pkts: int, rtt_profile: str = "homogeneous", *,
               n_flows: int = 4, scale: float = 1.0, duration: float = 100.0, seed: int = 0,
               jitter: float = 0.1, params: Optional[dict] = None) -> Scenario:
    """``n_flows`` senders sharing one R1 -> R2 bottleneck whose queue is ``buffer_pkts``."""
    ccmod.get_class(variant)
    if buffer_pkts < 1:
        raise ScenarioError("buffer must be at least one packet")
    if rtt_profile not in PROFILES:
        raise ScenarioError(f"unknown RTT profile {rtt_profile!r}")
    bw = GBPS * scale
    q = _scaled(buffer_pkts, scale)
    side = 2 * q
    if rtt_profile == "heterogeneous":
        delays = [HETERO_DELAYS[i % len(HETERO_DELAYS)] for i in range(n_flows)]
    else:
        delays = [ACCESS_DELAY] * n_flows
    rng = random.Random(seed)
    nodes = ["R1", "R2"]
    links = _duplex("R1", "R2", bw, CORE_DELAY, q, side)
    flows = []
    for i in range(1, n_flows + 1):
        s, d = f"S{i}", f"D{i}"
        nodes += [s, d]
        links += _duplex(s, "R1", bw, delays[i - 1], side, side)
        links += _duplex("R2", d, bw, ACCESS_DELAY, side, side)
        flows.append(FlowSpec(i, variant, s, d, rng.uniform(0.0, jitter) if jitter else 0.0))
    sc = Scenario("exp2", nodes, links, flows, buffer_pkts=buffer_pkts, duration=duration,
                  rtt_profile=rtt_profile, seed=seed, scale=scale,
                  params=dict(params or {}))
    sc.validate()
    return sc


BUILTIN = {"exp1": build_exp1, "exp2": build_exp2}


# -- scenario files ------------------------------------------------------------

def dump_scenario(sc: Scenario, path: "str | Path") -> None:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["sim"] = {
        "name": sc.name,
        "duration": repr(sc.duration),
        "seed": str(sc.seed),
        "buffer_pkts": str(sc.buffer_pkts),
        "rtt_profile": sc.rtt_profile,
        "packet_size": str(sc.packet_size),
        "scale": repr(sc.scale),
        "bottleneck": " ".join(sc.bottleneck),
        "trace_cadence": _cadence_text(sc.trace_cadence),
    }
    cp["topology"] = {"nodes": " ".join(sc.nodes)}
    for i, l in enumerate(sc.links):
        cp["topology"][f"link.{i}"] = f"{l.src} {l.dst} {l.bandwidth!r} {l.delay!r} {l.queue_pkts}"
    cp["flows"] = {}
    for f in sc.flows:
        cp["flows"][f"flow.{f.flow_id}"] = f"{f.variant} {f.src} {f.dst} {f.start!r}"
    cp["params"] = {k: str(v) for k, v in sorted(sc.params.items())}
    with open(path, "w") as fh:
        cp.write(fh)


def _cadence_text(c: Any) -> str:
    from .metrics import format_cadence
    return format_cadence(c)


def load_scenario(path: "str | Path") -> Scenario:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if not cp.read(path):
        raise ScenarioError(f"cannot read scenario file {path}")
    try:
        sim, topo, flows_sec = cp["sim"], cp["topology"], cp["flows"]
        links = []
        for key, value in topo.items():
            if key.startswith("link."):
                src, dst, bw, delay, q = value.split()
                links.append(LinkSpec(src, dst, float(bw), float(delay), int(q)))
        flows = []
        for key, value in flows_sec.items():
            variant, src, dst, start = value.split()
            flows.append(FlowSpec(int(key.split(".", 1)[1]), variant, src, dst, float(start)))
        sc = Scenario(
            name=sim["name"], nodes=topo["nodes"].split(), links=links, flows=flows,
            buffer_pkts=int(sim["buffer_pkts"]), duration=float(sim["duration"]),
            rtt_profile=sim.get("rtt_profile", "homogeneous"), seed=int(sim.get("seed", "0")),
            packet_size=int(sim.get("packet_size", "1000")),
            scale=float(sim.get("scale", "1.0")),
            bottleneck=tuple(sim.get("bottleneck", "R1 R2").split()),
            params=dict(cp["params"]) if cp.has_section("params") else {},
            trace_cadence=parse_cadence(sim.get("trace_cadence", "per-ack")))
    except (KeyError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario file {path}: {exc}") from exc
    sc.validate()
    return sc


# -- running -------------------------------------------------------------------

@dataclass
class RunResult:
    scenario: Scenario
    report: MetricsReport
    stats: EngineStats
    senders: list[TcpSender]
    receivers: list[TcpReceiver]
    traces: dict[int, list[tuple]]
    engine: Engine

    def trace_points(self) -> list[tuple]:
        pts = [p for tr in self.traces.values() for p in tr]
        pts.sort(key=lambda p: (p[0], p[1]))
        return pts


def run_scenario(sc: Scenario, *, trace: bool = True, debug_every: int = 0) -> RunResult:
    """Run one scenario to completion.

    ``debug_every`` > 0 checks packet conservation every that many events.
    """
    sc.validate()
    eng = Engine()
    net = Network(eng)
    for name in sc.nodes:
        net.add_node(name)
    for l in sc.links:
        net.add_link(l.src, l.dst, l.bandwidth, l.delay, l.queue_pkts)
    net.build_routes()

    cadence = sc.trace_cadence
    traces: dict[int, list[tuple]] = {}
    senders, receivers = [], []
    for f in sc.flows:
        tr: Optional[list] = None
        if trace:
            tr = traces.setdefault(f.flow_id, [])
        cc = ccmod.make(f.variant, sc.params)
        sender = TcpSender(eng, net.nodes[f.src], f.flow_id, f.dst, cc, mss=sc.packet_size,
                           trace=tr if cadence == "per-ack" else None)
        receiver = TcpReceiver(eng, net.nodes[f.dst], f.flow_id, f.src)
        eng.schedule(to_ns(f.start), sender.start)
        senders.append(sender)
        receivers.append(receiver)

    end_ns = to_ns(sc.duration)
    if trace and cadence != "per-ack":
        step = to_ns(float(cadence))

        def sample(k: int) -> None:
            t = eng.now / 1e9
            for s in senders:
                st = s.st
                traces[st.flow_id].append((t, st.flow_id, st.cwnd, st.ssthresh, st.state))
            nxt = (k + 1) * step
            if nxt <= end_ns:
                eng.schedule(nxt, sample, k + 1)

        eng.schedule(step, sample, 1)

    if debug_every:
        eng.debug_check = eng.check_conservation
        eng.debug_every = debug_every
    stats = eng.run_until(end_ns)

    counters = []
    for f, s, r in zip(sc.flows, senders, receivers):
        counters.append(FlowCounters(
            flow_id=f.flow_id, bytes_sent=s.bytes_sent, bytes_delivered=r.bytes_delivered,
            pkts_sent=s.pkts_sent, pkts_lost=eng.tally[f.flow_id].dropped,
            start=f.start, end=sc.duration))
    report = build_report(sc.variant, sc.buffer_pkts, sc.rtt_profile, sc.duration, counters,
                          sc.capacity_bps / 1e6, seed=sc.seed)
    return RunResult(sc, report, stats, senders, receivers, traces, eng)


# -- sweeps --------------------------------------------------------------------

@dataclass
class SweepSpec:
    variants: list[str] = field(default_factory=lambda: list(ccmod.VARIANTS))
    buffers: list[int] = field(default_factory=lambda: list(PAPER_BUFFERS))
    profiles: list[str] = field(default_factory=lambda: ["homogeneous"])
    seeds: list[int] = field(default_factory=lambda: [0])
    scale: float = 1.0
    duration: float = 100.0
    params: dict[str, Any] = field(default_factory=dict)
    workers: int = 1

    def runs(self) -> list[tuple[str, int, str, int]]:
        for v in self.variants:
            ccmod.get_class(v)
        return [(v, b, prof, seed) for v in self.variants for b in self.buffers
                for prof in self.profiles for seed in self.seeds]


@dataclass
class SweepResult:
    reports: list[MetricsReport]
    failures: list[tuple[tuple, str]]


def _sweep_job(args: tuple) -> MetricsReport:
    (variant, buffer_pkts, profile, seed), scale, duration, params = args
    sc = build_exp2(variant, buffer_pkts, profile, scale=scale, duration=duration, seed=seed,
                    params=params)
    return run_scenario(sc, trace=False).report


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Run every (variant, buffer, profile, seed) cell; failures are logged and skipped."""
    runs = spec.runs()
    jobs = [(r, spec.scale, spec.duration, spec.params) for r in runs]
    reports, failures = [], []
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            futures = [pool.submit(_sweep_job, j) for j in jobs]
            outcomes = []
            for run, fut in zip(runs, futures):
                try:
                    outcomes.append((run, fut.result(), None))
                except Exception as exc:  # noqa: BLE001 - one bad cell must not stop the sweep
                    outcomes.append((run, None, exc))
    else:
        outcomes = []
        for run, job in zip(runs, jobs):
            try:
                outcomes.append((run, _sweep_job(job), None))
            except Exception as exc:  # noqa: BLE001
                outcomes.append((run, None, exc))
    for run, report, exc in outcomes:
        if exc is not None:
            log.error("run %s failed: %s", run, exc)
            failures.append((run, repr(exc)))
        else:
            reports.append(report)
    return SweepResult(reports, failures)
