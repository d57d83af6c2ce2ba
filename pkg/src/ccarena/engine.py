"""Discrete-event core: event heap, drop-tail links and statically routed nodes.

All times are integer nanoseconds. Events are ordered by ``(time, seq)`` where
``seq`` is a global insertion counter, so two runs of the same scenario dispatch
exactly the same sequence of events.
"""

from __future__ import annotations

import heapq
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

log = logging.getLogger(__name__)

NS_PER_S = 1_000_000_000

DATA = 0
ACK = 1


def to_ns(seconds: float) -> int:
    return round(seconds * NS_PER_S)


def to_s(ns: int) -> float:
    return ns / NS_PER_S


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current simulation time."""


class Packet:
    __slots__ = ("id", "flow_id", "kind", "seq", "ack_no", "size_bytes",
                 "send_time", "retx", "src", "dst")

    def __init__(self, id: int, flow_id: int, kind: int, seq: int, ack_no: int,
                 size_bytes: int, send_time: int, retx: bool, src: str, dst: str):
        self.id = id
        self.flow_id = flow_id
        self.kind = kind
        self.seq = seq
        # For ACKs, ``send_time``/``retx`` echo the data segment that triggered it.
        self.ack_no = ack_no
        self.size_bytes = size_bytes
        self.send_time = send_time
        self.retx = retx
        self.src = src
        self.dst = dst

    def __repr__(self) -> str:
        kind = "data" if self.kind == DATA else "ack"
        return (f"Packet({kind} flow={self.flow_id} seq={self.seq} "
                f"ack={self.ack_no} t={self.send_time})")


@dataclass
class FlowTally:
    """Engine-side per-flow data packet accounting (conservation checks)."""

    sent: int = 0
    delivered: int = 0
    dropped: int = 0


@dataclass
class EngineStats:
    events: int = 0
    drops: int = 0
    deliveries: int = 0
    stalled: bool = False


class Engine:
    """Event scheduler.

    Heap entries are mutable lists ``[time, seq, fn, arg]``; the list itself is
    the handle returned by :meth:`schedule` and cancelling clears ``fn``.
    """

    def __init__(self) -> None:
        self.now = 0
        self._heap: list = []
        self._seq = 0
        self.stats = EngineStats()
        self.tally: dict[int, FlowTally] = {}
        self.links: list[Link] = []
        self.nodes: dict[str, Node] = {}
        self.debug_check: Optional[Callable[[], None]] = None
        self.debug_every = 1

    def schedule(self, time: int, fn: Callable, arg=None) -> list:
        if time < self.now:
            raise SchedulingError(f"event at {time} ns scheduled in the past (now={self.now})")
        entry = [time, self._seq, fn, arg]
        self._seq += 1
        heapq.heappush(self._heap, entry)
        return entry

    @staticmethod
    def cancel(handle: list) -> None:
        handle[2] = None

    def pending(self) -> int:
        return sum(1 for e in self._heap if e[2] is not None)

    def run_until(self, t_end: int) -> EngineStats:
        """Dispatch every event with time <= ``t_end``."""
        heap = self._heap
        pop = heapq.heappop
        stats = self.stats
        check = self.debug_check
        n = stats.events
        every = self.debug_every
        while heap and heap[0][0] <= t_end:
            time, _, fn, arg = pop(heap)
            if fn is None:
                continue
            self.now = time
            fn(arg)
            n += 1
            if check is not None and n % every == 0:
                stats.events = n
                check()
        stats.events = n
        if not heap:
            stats.stalled = t_end > self.now and any(
                t.sent > t.delivered + t.dropped for t in self.tally.values())
            if stats.stalled:
                log.warning("simulation stalled at t=%.6f s with data outstanding", to_s(self.now))
        if self.now < t_end:
            self.now = t_end
        return stats

    def flow_tally(self, flow_id: int) -> FlowTally:
        t = self.tally.get(flow_id)
        if t is None:
            t = self.tally[flow_id] = FlowTally()
        return t

    def in_flight(self) -> dict[int, int]:
        """Data packets currently queued or on a wire, counted from pending events."""
        counts: dict[int, int] = {}
        for entry in self._heap:
            fn, pkt = entry[2], entry[3]
            if fn is not None and isinstance(pkt, Packet) and pkt.kind == DATA:
                counts[pkt.flow_id] = counts.get(pkt.flow_id, 0) + 1
        return counts

    def check_conservation(self) -> None:
        flying = self.in_flight()
        for fid, t in self.tally.items():
            got = t.delivered + t.dropped + flying.get(fid, 0)
            if t.sent != got:
                raise AssertionError(
                    f"flow {fid}: sent={t.sent} != delivered={t.delivered} "
                    f"+ dropped={t.dropped} + in_flight={flying.get(fid, 0)}")


class DropTailQueue:
    """FIFO of packets waiting behind the one being serialized.

    Only the start-of-service times are kept: a packet leaves the queue when its
    transmission starts, which is known at enqueue time for a FIFO link.
    """

    __slots__ = ("capacity_pkts", "drop_count", "_starts", "max_occupancy")

    def __init__(self, capacity_pkts: int):
        if capacity_pkts < 0:
            raise ValueError("queue capacity must be >= 0")
        self.capacity_pkts = capacity_pkts
        self.drop_count = 0
        self.max_occupancy = 0
        self._starts: deque[int] = deque()

    def occupancy(self, now: int) -> int:
        starts = self._starts
        while starts and starts[0] <= now:
            starts.popleft()
        return len(starts)


class Link:
    """Directed point-to-point link with an output drop-tail queue."""

    def __init__(self, engine: Engine, src: "Node", dst: "Node", bandwidth: float,
                 prop_delay: float, capacity_pkts: int, name: str = ""):
        self.engine = engine
        self.src = src
        self.dst = dst
        self.bandwidth = bandwidth
        self.prop_delay = prop_delay
        self.prop_ns = to_ns(prop_delay)
        self.queue = DropTailQueue(capacity_pkts)
        self.name = name or f"{src.name}->{dst.name}"
        self.busy_until = 0
        self.delivered = 0
        self._ser_cache: dict[int, int] = {}
        engine.links.append(self)

    def serialization_ns(self, size_bytes: int) -> int:
        ns = self._ser_cache.get(size_bytes)
        if ns is None:
            ns = self._ser_cache[size_bytes] = round(size_bytes * 8 * NS_PER_S / self.bandwidth)
        return ns

    def transmit(self, pkt: Packet, now: int) -> Optional[int]:
        """Enqueue ``pkt`` at ``now``; return its arrival time at ``dst`` or None if dropped."""
        q = self.queue
        starts = q._starts
        while starts and starts[0] <= now:
            starts.popleft()
        occ = len(starts)
        if occ >= q.capacity_pkts and self.busy_until > now:
            q.drop_count += 1
            eng = self.engine
            eng.stats.drops += 1
            if pkt.kind == DATA:
                eng.tally[pkt.flow_id].dropped += 1
            return None
        start = self.busy_until if self.busy_until > now else now
        if start > now:
            starts.append(start)
            if occ + 1 > q.max_occupancy:
                q.max_occupancy = occ + 1
        ser = self._ser_cache.get(pkt.size_bytes)
        if ser is None:
            ser = self.serialization_ns(pkt.size_bytes)
        self.busy_until = start + ser
        arrival = self.busy_until + self.prop_ns
        self.engine.schedule(arrival, self.dst.receive, pkt)
        return arrival


class Node:
    """Host or router. Forwards by a static next-hop table keyed on destination node."""

    def __init__(self, engine: Engine, name: str):
        self.engine = engine
        self.name = name
        self.routes: dict[str, Link] = {}
        self.agents: dict[int, Callable[[Packet], None]] = {}
        engine.nodes[name] = self

    def attach(self, flow_id: int, handler: Callable[[Packet], None]) -> None:
        self.agents[flow_id] = handler

    def send(self, pkt: Packet) -> Optional[int]:
        return self.routes[pkt.dst].transmit(pkt, self.engine.now)

    def receive(self, pkt: Packet) -> None:
        if pkt.dst == self.name:
            eng = self.engine
            eng.stats.deliveries += 1
            if pkt.kind == DATA:
                eng.tally[pkt.flow_id].delivered += 1
            self.agents[pkt.flow_id](pkt)
        else:
            self.routes[pkt.dst].transmit(pkt, self.engine.now)


@dataclass
class Network:
    engine: Engine
    nodes: dict[str, Node] = field(default_factory=dict)
    links: dict[tuple[str, str], Link] = field(default_factory=dict)

    def add_node(self, name: str) -> Node:
        node = Node(self.engine, name)
        self.nodes[name] = node
        return node

    def add_link(self, src: str, dst: str, bandwidth: float, delay: float,
                 capacity_pkts: int) -> Link:
        link = Link(self.engine, self.nodes[src], self.nodes[dst], bandwidth, delay,
                    capacity_pkts)
        self.links[(src, dst)] = link
        return link

    def build_routes(self) -> None:
        """Fill next-hop tables by breadth-first search over directed links."""
        adj: dict[str, list[Link]] = {n: [] for n in self.nodes}
        for (src, _), link in self.links.items():
            adj[src].append(link)
        for origin, node in self.nodes.items():
            first_hop: dict[str, Link] = {}
            frontier = deque()
            for link in adj[origin]:
                if link.dst.name not in first_hop:
                    first_hop[link.dst.name] = link
                    frontier.append(link.dst.name)
            seen = {origin, *first_hop}
            while frontier:
                cur = frontier.popleft()
                for link in adj[cur]:
                    nxt = link.dst.name
                    if nxt not in seen:
                        seen.add(nxt)
                        first_hop[nxt] = first_hop[cur]
                        frontier.append(nxt)
            node.routes = first_hop
