import math

import pytest

from ccarena import cc
from ccarena.engine import DATA, Engine, Network, to_ns
from ccarena.tcp import (CONG_AVOID, FAST_RECOVERY, SLOW_START, RttEstimator, TcpReceiver,
                         TcpSender, update_rtt)


class Path:
    """A -> B data link and B -> A ack link, optionally dropping chosen data segments once."""

    def __init__(self, variant="newreno", bandwidth=1e8, delay=0.05, queue=10_000, drop=(),
                 **sender_kw):
        self.eng = Engine()
        net = Network(self.eng)
        net.add_node("A")
        net.add_node("B")
        self.fwd = net.add_link("A", "B", bandwidth, delay, queue)
        net.add_link("B", "A", bandwidth, delay, queue)
        net.build_routes()
        self.to_drop = set(drop)
        self.dropped = []
        real = self.fwd.transmit

        def lossy(p, now):
            if p.kind == DATA and p.seq in self.to_drop and not p.retx:
                self.to_drop.discard(p.seq)
                self.dropped.append(p.seq)
                self.eng.tally[p.flow_id].dropped += 1
                return None
            arrival = real(p, now)
            if arrival is None and p.kind == DATA:
                self.dropped.append(p.seq)
            return arrival

        self.fwd.transmit = lossy
        self.trace = []
        self.sender = TcpSender(self.eng, net.nodes["A"], 1, "B", cc.make(variant),
                                trace=self.trace, **sender_kw)
        self.receiver = TcpReceiver(self.eng, net.nodes["B"], 1, "A")
        self.eng.schedule(0, self.sender.start)

    def run(self, seconds):
        self.eng.run_until(to_ns(seconds))
        return self


def test_first_rtt_sample_initialises_estimator():
    est = update_rtt(RttEstimator(), 0.204)
    assert est.srtt == pytest.approx(0.204)
    assert est.rttvar == pytest.approx(0.102)
    assert est.rto == pytest.approx(0.612)


def test_rtt_extrema():
    est = RttEstimator()
    for s in (0.2, 0.2):
        est.update(s)
    assert est.rtt_min == est.rtt_max == 0.2
    est = RttEstimator()
    for s in (0.2, 0.3):
        est.update(s)
    assert (est.rtt_min, est.rtt_max) == (0.2, 0.3)
    assert est.rtt_min <= est.srtt <= est.rtt_max
    with pytest.raises(ValueError):
        est.update(0.0)


def test_slow_start_doubles_each_rtt():
    p = Path()
    rtt = 2 * 0.05
    for k in range(1, 7):
        p.run(k * rtt + 0.01)
        assert p.sender.st.cwnd == pytest.approx(2 * 2 ** k, abs=1)
    assert p.sender.st.state == SLOW_START and math.isinf(p.sender.st.ssthresh)


def test_third_duplicate_ack_triggers_fast_retransmit():
    p = Path(drop={40}).run(3.0)
    kinds = [e[1] for e in p.sender.events]
    assert kinds[0] == "fast-retransmit"
    assert p.sender.events[0][2] == 40
    assert "recovery-exit" in kinds
    assert p.sender.timeouts == 0
    assert p.receiver.rcv_nxt > 40
    assert p.receiver.rcv_nxt >= p.sender.st.snd_una


def test_partial_ack_stays_in_recovery():
    p = Path(drop={40, 45}).run(3.0)
    kinds = [e[1] for e in p.sender.events]
    assert kinds[:2] == ["fast-retransmit", "partial-ack"]
    partial = p.sender.events[1]
    assert partial[2] == 45
    i = kinds.index("recovery-exit")
    assert all(k == "partial-ack" for k in kinds[1:i])
    assert p.sender.st.state in (CONG_AVOID, SLOW_START)


def test_rto_halves_and_resets():
    p = Path().run(0.5)
    s = p.sender
    st = s.st
    st.cwnd = 100.0
    rto = st.rtt.rto
    s.on_rto()
    assert st.ssthresh == 50.0 and st.cwnd == 1.0 and st.state == SLOW_START
    assert st.rtt.rto == pytest.approx(min(2 * rto, 60.0))
    assert s.events[-1][1] == "timeout"


def test_backoff_caps_at_sixty_seconds():
    est = RttEstimator()
    for _ in range(20):
        est.backoff()
    assert est.rto == 60.0


def test_rto_with_everything_acked_is_ignored():
    p = Path()
    s = p.sender
    s.on_rto()
    assert s.timeouts == 0 and s.events == []


def test_repeated_timeout_keeps_ssthresh():
    p = Path().run(0.5)
    s = p.sender
    s.st.cwnd = 100.0
    s.on_rto()
    s.on_rto()
    assert s.st.ssthresh == 50.0 and s.st.rto_streak == 2


def test_new_data_sent_only_inside_the_window():
    p = Path(drop={30, 31, 90, 200})
    s = p.sender
    real = s._transmit
    violations = []

    def checked(seq):
        st = s.st
        if seq >= st.snd_max and st.snd_nxt - st.snd_una >= int(st.cwnd) + st.inflation:
            violations.append((st.snd_nxt, st.snd_una, st.cwnd))
        real(seq)

    s._transmit = checked
    p.run(5.0)
    assert violations == []


def test_recovery_enters_and_keeps_recover_above_acked():
    p = Path(drop={40, 45, 50})
    s = p.sender
    seen = []
    real = s.receive

    def watch(pkt):
        real(pkt)
        if s.st.state == FAST_RECOVERY:
            seen.append(s.st.recover >= s.st.highest_acked)

    p.eng.nodes["A"].agents[1] = watch
    p.run(3.0)
    assert seen and all(seen)


@pytest.mark.parametrize("variant", ["newreno", "cubic", "scalable"])
def test_dropped_segments_are_eventually_delivered(variant):
    # a small queue makes the link itself drop, on top of the forced losses
    p = Path(variant=variant, bandwidth=2e7, delay=0.02, queue=20,
             drop={10, 11, 12, 300, 301, 2000}).run(20.0)
    assert len(p.dropped) > 6
    early = [seq for seq in p.dropped if seq < p.sender.st.snd_max - 500]
    assert early and all(seq < p.receiver.rcv_nxt for seq in early)


def test_per_ack_trace_length_matches_new_data_acks():
    p = Path(drop={40}).run(2.0)
    assert len(p.trace) == p.sender.new_data_acks
    times = [t for t, *_ in p.trace]
    assert times == sorted(times)


def test_unknown_recovery_mode_rejected():
    eng = Engine()
    net = Network(eng)
    net.add_node("A")
    with pytest.raises(ValueError):
        TcpSender(eng, net.nodes["A"], 1, "B", cc.make("newreno"), recovery_timer="eager")
