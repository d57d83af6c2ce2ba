"""TCP sender/receiver with NewReno loss recovery and a pluggable congestion controller.

Windows are counted in segments. Sequence numbers are segment indices and an
ACK carries the next expected segment (``ack_no``), so ``snd_una`` equals the
number of cumulatively acknowledged segments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

from .engine import ACK, DATA, NS_PER_S, Engine, Node, Packet, to_s

if TYPE_CHECKING:
    from .cc.base import CongestionControl

SLOW_START = "slow-start"
CONG_AVOID = "congestion-avoidance"
FAST_RECOVERY = "fast-recovery"

DUPACK_THRESHOLD = 3
ACK_SIZE = 40
RECOVERY_TIMERS = ("impatient", "slow-but-steady", "adaptive")
# Adaptive mode turns impatient when more than this share of the window
# at recovery entry is missing.
PATIENCE_FRACTION = 0.25
ABC_LIMIT = 2
# Segments one arriving ACK may release; 0 means unlimited.
MAX_BURST = 4


class RttEstimator:
    """SRTT/RTTVAR estimator (gains 1/8, 1/4) plus extrema and per-round statistics.

    The per-round average is the basis for the average queuing delay used by the
    delay-aware controllers; the round boundaries are driven by the sender.
    """

    def __init__(self, initial_rto: float = 1.0, min_rto: float = 0.2, max_rto: float = 60.0):
        self.srtt: Optional[float] = None
        self.rttvar = 0.0
        self.rto = initial_rto
        self.min_rto = min_rto
        self.max_rto = max_rto
        self.rtt_min = math.inf
        self.rtt_max = 0.0
        self.latest: Optional[float] = None
        self.samples = 0
        self._sum = 0.0
        self._cnt = 0
        self._min = math.inf
        self.last_round_avg: Optional[float] = None
        self.last_round_min: Optional[float] = None

    def update(self, sample: float) -> "RttEstimator":
        if sample <= 0:
            raise ValueError("RTT sample must be positive")
        if self.srtt is None:
            self.srtt = sample
            self.rttvar = sample / 2
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - sample)
            self.srtt = 0.875 * self.srtt + 0.125 * sample
        self.rto = min(max(self.srtt + 4 * self.rttvar, self.min_rto), self.max_rto)
        if sample < self.rtt_min:
            self.rtt_min = sample
        if sample > self.rtt_max:
            self.rtt_max = sample
        self.latest = sample
        self.samples += 1
        self._sum += sample
        self._cnt += 1
        if sample < self._min:
            self._min = sample
        return self

    def backoff(self) -> None:
        self.rto = min(2 * self.rto, self.max_rto)

    def end_round(self) -> None:
        if self._cnt:
            self.last_round_avg = self._sum / self._cnt
            self.last_round_min = self._min
        self._sum = 0.0
        self._cnt = 0
        self._min = math.inf

    @property
    def round_samples(self) -> int:
        return self._cnt

    @property
    def avg(self) -> Optional[float]:
        """Mean RTT of the current round, falling back to the last complete round."""
        if self._cnt:
            return self._sum / self._cnt
        return self.last_round_avg

    @property
    def round_min(self) -> Optional[float]:
        """Minimum RTT of the last complete round (Vegas-style ``minRTT``)."""
        if self.last_round_min is not None:
            return self.last_round_min
        return self._min if self._cnt else None

    @property
    def queuing_delay_avg(self) -> float:
        a = self.avg
        if a is None or self.rtt_min == math.inf:
            return 0.0
        return max(a - self.rtt_min, 0.0)

    @property
    def queuing_delay_max(self) -> float:
        if self.rtt_min == math.inf:
            return 0.0
        return max(self.rtt_max - self.rtt_min, 0.0)


def update_rtt(est: RttEstimator, sample: float) -> RttEstimator:
    return est.update(sample)


@dataclass
class LossEvent:
    time: float
    kind: str  # "dupack" or "timeout"
    cwnd_before: float
    cwnd_after: float
    ssthresh_after: float
    state_before: str


@dataclass
class TcpFlowState:
    """Sender state visible to congestion controllers.

    Controllers may change ``cwnd``, ``ssthresh`` and their own fields only.
    """

    flow_id: int
    mss: int = 1000
    cwnd: float = 2.0
    ssthresh: float = math.inf
    state: str = SLOW_START
    snd_una: int = 0
    snd_nxt: int = 0
    snd_max: int = 0
    dup_ack_count: int = 0
    recover: int = 0
    inflation: int = 0
    rtt: RttEstimator = field(default_factory=RttEstimator)
    now: float = 0.0
    acked_pkts: int = 0
    round_end: int = 0
    rounds: int = 0
    rto_streak: int = 0  # back-to-back RTOs without a new-data ACK

    @property
    def repeat_timeout(self) -> bool:
        """True when the current RTO retransmits a segment that already timed out."""
        return self.rto_streak > 1

    @property
    def highest_acked(self) -> int:
        return self.snd_una

    @property
    def highest_sent(self) -> int:
        return self.snd_max - 1

    @property
    def in_flight(self) -> int:
        return self.snd_nxt - self.snd_una

    @property
    def in_recovery(self) -> bool:
        return self.state == FAST_RECOVERY

    @property
    def rto(self) -> float:
        return self.rtt.rto


class TcpSender:
    """Greedy (FTP-like) sender with NewReno fast retransmit/recovery."""

    def __init__(self, engine: Engine, node: Node, flow_id: int, dst: str,
                 cc: "CongestionControl", *, mss: int = 1000, init_cwnd: float = 2.0,
                 trace: Optional[list] = None, initial_rto: float = 1.0,
                 min_rto: float = 0.2, max_rto: float = 60.0, max_burst: int = MAX_BURST,
                 recovery_timer: str = "adaptive", patience: Optional[float] = None):
        self.engine = engine
        self.node = node
        self.dst = dst
        self.cc = cc
        self.st = TcpFlowState(flow_id=flow_id, mss=mss, cwnd=init_cwnd,
                               rtt=RttEstimator(initial_rto, min_rto, max_rto))
        self.tally = engine.flow_tally(flow_id)
        self.trace = trace
        self.events: list[tuple] = []
        self.losses: list[LossEvent] = []
        self.pkts_sent = 0
        self.bytes_sent = 0
        self.retransmits = 0
        self.timeouts = 0
        self.new_data_acks = 0
        self.old_acks = 0
        self.start_time: Optional[float] = None
        self._deadline: Optional[int] = None
        self._timer: Optional[list] = None
        self._partial_seen = False
        if recovery_timer not in RECOVERY_TIMERS:
            raise ValueError(f"unknown recovery timer mode {recovery_timer!r}")
        self.recovery_timer = recovery_timer
        self.patience = PATIENCE_FRACTION if patience is None else patience
        self._impatient = recovery_timer == "impatient"
        self._entry_window = 0
        self._recovery_dups = 0
        self.max_burst = max_burst
        self._next_id = 0
        node.attach(flow_id, self.receive)
        cc.init(self.st)

    # -- sending ---------------------------------------------------------

    def start(self, _=None) -> None:
        self.start_time = to_s(self.engine.now)
        self.st.now = self.start_time
        self._send_window()

    def _send_window(self) -> None:
        st = self.st
        wnd = int(st.cwnd) + st.inflation
        budget = self.max_burst or -1
        while st.snd_nxt - st.snd_una < wnd and budget:
            self._transmit(st.snd_nxt)
            st.snd_nxt += 1
            budget -= 1

    def _transmit(self, seq: int) -> None:
        st = self.st
        now = self.engine.now
        retx = seq < st.snd_max
        pkt = Packet(self._next_id, st.flow_id, DATA, seq, 0, st.mss, now, retx,
                     self.node.name, self.dst)
        self._next_id += 1
        self.pkts_sent += 1
        self.bytes_sent += st.mss
        self.tally.sent += 1
        if retx:
            self.retransmits += 1
        else:
            st.snd_max = seq + 1
        if self._deadline is None:
            self._arm(now)
        self.node.send(pkt)

    # -- retransmission timer --------------------------------------------

    def _arm(self, now: int) -> None:
        deadline = now + round(self.st.rtt.rto * NS_PER_S)
        self._deadline = deadline
        timer = self._timer
        if timer is None or timer[2] is None or timer[0] > deadline:
            if timer is not None:
                timer[2] = None
            self._timer = self.engine.schedule(deadline, self._on_timer)

    def _disarm(self) -> None:
        self._deadline = None

    def _on_timer(self, _=None) -> None:
        self._timer = None
        deadline = self._deadline
        if deadline is None:
            return
        now = self.engine.now
        if now < deadline:
            self._timer = self.engine.schedule(deadline, self._on_timer)
            return
        self._deadline = None
        self.on_rto()

    def on_rto(self) -> None:
        st = self.st
        if st.snd_una >= st.snd_max:
            return
        now = self.engine.now
        st.now = to_s(now)
        self.timeouts += 1
        before, state_before = st.cwnd, st.state
        st.rto_streak += 1
        # A repeated RTO of the same segment carries no new congestion signal.
        if not st.repeat_timeout:
            st.ssthresh = max(st.cwnd / 2, 2.0)
        self.cc.on_timeout(st)
        st.ssthresh = max(st.ssthresh, 2.0)
        st.cwnd = 1.0
        st.state = SLOW_START
        st.inflation = 0
        st.dup_ack_count = 0
        st.recover = st.snd_max
        st.snd_nxt = st.snd_una
        st.round_end = st.snd_una
        self._partial_seen = False
        st.rtt.backoff()
        self.losses.append(LossEvent(st.now, "timeout", before, st.cwnd, st.ssthresh,
                                     state_before))
        self.events.append((st.now, "timeout", st.snd_una, st.cwnd, st.ssthresh))
        self._send_window()
        if self._deadline is None and st.snd_una < st.snd_max:
            self._arm(now)

    # -- ACK processing --------------------------------------------------

    def receive(self, pkt: Packet) -> None:
        st = self.st
        eng_now = self.engine.now
        now = eng_now / NS_PER_S
        st.now = now
        ack = pkt.ack_no
        cc = self.cc
        if ack > st.snd_una:
            sample = None
            if not pkt.retx:
                sample = (eng_now - pkt.send_time) / NS_PER_S
                st.rtt.update(sample)
                cc.on_rtt_sample(st, sample)
            acked = ack - st.snd_una
            st.snd_una = ack
            st.rto_streak = 0
            st.acked_pkts += acked
            if st.snd_nxt < ack:
                st.snd_nxt = ack
            self.new_data_acks += 1
            if ack >= st.round_end:
                st.rtt.end_round()
                st.rounds += 1
                if st.state != FAST_RECOVERY:
                    cc.on_round_end(st)
                st.round_end = st.snd_nxt
            if st.state == FAST_RECOVERY:
                if ack >= st.recover:
                    st.state = CONG_AVOID if st.cwnd >= st.ssthresh else SLOW_START
                    st.inflation = 0
                    st.dup_ack_count = 0
                    self._partial_seen = False
                    cc.on_recovery_exit(st)
                    self.events.append((now, "recovery-exit", ack, st.cwnd, st.ssthresh))
                    self._restart_timer(eng_now)
                else:
                    self._transmit(ack)
                    st.inflation = max(st.inflation - acked + 1, 0)
                    if not self._partial_seen:
                        self._partial_seen = True
                        if self.recovery_timer == "adaptive":
                            self._impatient = self.holes_estimate() > self.patience * self._entry_window
                        self._arm(eng_now)
                    elif not self._impatient:
                        self._arm(eng_now)
                    self.events.append((now, "partial-ack", ack, st.cwnd, st.ssthresh))
            else:
                st.dup_ack_count = 0
                if st.state == SLOW_START and acked > ABC_LIMIT:
                    # Appropriate byte counting: a stretch ACK after go-back-N
                    # must not open the window by thousands of segments at once.
                    cc.on_ack(st, ABC_LIMIT, sample)
                else:
                    cc.on_ack(st, acked, sample)
                if st.cwnd < 1.0:
                    st.cwnd = 1.0
                if st.state == SLOW_START and st.cwnd >= st.ssthresh:
                    st.state = CONG_AVOID
                elif st.state == CONG_AVOID and st.cwnd < st.ssthresh:
                    st.state = SLOW_START
                self._restart_timer(eng_now)
            if self.trace is not None:
                self.trace.append((now, st.flow_id, st.cwnd, st.ssthresh, st.state))
            self._send_window()
        elif ack == st.snd_una:
            if st.snd_una >= st.snd_max:
                return
            if st.state == FAST_RECOVERY:
                st.dup_ack_count += 1
                self._recovery_dups += 1
                st.inflation += 1
                self._send_window()
                return
            # A duplicate echoing a retransmitted segment is what go-back-N
            # produces when it resends data the receiver already holds.
            if pkt.retx:
                self.old_acks += 1
                self._send_window()
                return
            st.dup_ack_count += 1
            if st.dup_ack_count == DUPACK_THRESHOLD and ack >= st.recover:
                self._enter_recovery(now)
        else:
            self.old_acks += 1
            self._send_window()

    def holes_estimate(self) -> int:
        """Segments of the window at recovery entry not yet seen by the receiver.

        Every duplicate ACK stands for one segment delivered above the first
        hole, so the window minus the duplicates approximates the losses.
        """
        return max(self._entry_window - DUPACK_THRESHOLD - self._recovery_dups - 1, 0)

    def _restart_timer(self, eng_now: int) -> None:
        if self.st.snd_una < self.st.snd_max:
            self._arm(eng_now)
        else:
            self._disarm()

    def _enter_recovery(self, now: float) -> None:
        st = self.st
        before, state_before = st.cwnd, st.state
        self.cc.on_loss_dupack(st)
        st.ssthresh = max(st.ssthresh, 2.0)
        st.cwnd = max(st.cwnd, 1.0)
        st.state = FAST_RECOVERY
        st.recover = st.snd_max
        st.inflation = DUPACK_THRESHOLD
        self._partial_seen = False
        self._entry_window = st.recover - st.snd_una
        self._recovery_dups = 0
        self.losses.append(LossEvent(now, "dupack", before, st.cwnd, st.ssthresh, state_before))
        self.events.append((now, "fast-retransmit", st.snd_una, st.cwnd, st.ssthresh))
        self._transmit(st.snd_una)
        self._arm(self.engine.now)
        self._send_window()


class TcpReceiver:
    """Cumulative-ACK receiver, one ACK per arriving data segment."""

    def __init__(self, engine: Engine, node: Node, flow_id: int, src: str):
        self.engine = engine
        self.node = node
        self.flow_id = flow_id
        self.src = src
        self.rcv_nxt = 0
        self.ooo: set[int] = set()
        self.bytes_delivered = 0
        self.pkts_delivered = 0
        self.duplicates = 0
        self._next_id = 0
        node.attach(flow_id, self.receive)

    def receive(self, pkt: Packet) -> None:
        seq = pkt.seq
        if seq == self.rcv_nxt:
            self.bytes_delivered += pkt.size_bytes
            self.pkts_delivered += 1
            nxt = seq + 1
            ooo = self.ooo
            if ooo:
                while nxt in ooo:
                    ooo.remove(nxt)
                    nxt += 1
            self.rcv_nxt = nxt
        elif seq > self.rcv_nxt and seq not in self.ooo:
            self.ooo.add(seq)
            self.bytes_delivered += pkt.size_bytes
            self.pkts_delivered += 1
        else:
            self.duplicates += 1
        ack = Packet(self._next_id, self.flow_id, ACK, 0, self.rcv_nxt, ACK_SIZE,
                     pkt.send_time, pkt.retx, self.node.name, self.src)
        self._next_id += 1
        self.node.send(ack)

    def has(self, seq: int) -> bool:
        return seq < self.rcv_nxt or seq in self.ooo
