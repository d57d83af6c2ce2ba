"""End-to-end checks on the scaled configuration (100 Mbps bottleneck).

Every simulation here runs with periodic packet-conservation checks, and
results are cached so each (scenario, variant, buffer) is simulated once.
"""
import math
import random
from functools import lru_cache

import pytest

import oracles
from ccarena.cc import VARIANTS
from ccarena.cc.cubic import cubic_window
from ccarena.metrics import jain_index
from ccarena.scenarios import PAPER_BUFFERS, build_exp1, build_exp2, run_scenario
from ccarena.tcp import CONG_AVOID, SLOW_START

SCALE = 0.1
EXP1_SHORT = 5.0
EXP1_LONG = 40.0
EXP2_DURATION = 20.0
CHECK_EVERY = 2000

# post-loss / pre-loss window for a duplicate-ACK loss at a large window
DECREASE_ENVELOPE = {
    "bic": (0.70, 0.90),
    "cubic": (0.70, 0.90),
    "newreno": (0.48, 0.52),
    "africa": (0.48, 0.52),
    "illinois": (0.48, 0.52),
    "compound": (0.48, 0.52),
    "fusion": (0.48, 0.52),
    "scalable": (0.855, 0.895),
    "highspeed": (0.50, 0.90),
    "htcp": (0.50, 0.80),
    "yeah": (0.50, 0.875),
}


def criterion(number, title):
    return pytest.mark.criterion(number, title)


def _checked_run(sc):
    res = run_scenario(sc, debug_every=CHECK_EVERY)
    res.engine.check_conservation()
    return res


@lru_cache(maxsize=None)
def exp1(variant, duration):
    return _checked_run(build_exp1(variant, scale=SCALE, duration=duration))


@lru_cache(maxsize=None)
def exp2(variant, buffer):
    return _checked_run(build_exp2(variant, buffer, scale=SCALE, duration=EXP2_DURATION))


def segments(trace, state=CONG_AVOID, min_points=50):
    out, cur = [], []
    for point in trace:
        if point[4] == state:
            cur.append(point)
            continue
        if len(cur) >= min_points:
            out.append(cur)
        cur = []
    if len(cur) >= min_points:
        out.append(cur)
    return out


def r_squared(seg):
    xs = [p[0] for p in seg]
    ys = [p[2] for p in seg]
    n = len(xs)
    mx, my = sum(xs) / n, sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return 1.0 if syy == 0 else sxy * sxy / (sxx * syy)


# 1 ----------------------------------------------------------------------

@criterion(1, "cc formulas match independent re-evaluation (rel err <= 1e-9)")
@pytest.mark.parametrize("seed", [0, 1])
def test_unit_oracles(seed):
    worst = oracles.run_all(seed)
    assert set(worst) == set(oracles.CHECKS)
    assert oracles.POINTS >= 100
    bad = {name: err for name, err in worst.items() if not err <= 1e-9}
    assert bad == {}


# 2 ----------------------------------------------------------------------

@criterion(2, "Jain index: scaling invariance, 1/n bound, equality case")
def test_jain_properties():
    rng = random.Random(2024)
    for _ in range(10_000):
        n = rng.randint(1, 16)
        x = [rng.expovariate(1.0) * (rng.random() < 0.8) for _ in range(n)]
        if not any(x):
            x[rng.randrange(n)] = 1.0
        j = jain_index(x)
        assert 1.0 / n - 1e-12 <= j <= 1.0 + 1e-12
        c = 10 ** rng.uniform(-6, 6)
        assert math.isclose(jain_index([c * v for v in x]), j, rel_tol=1e-9)
        v = rng.uniform(1e-6, 1e6)
        assert math.isclose(jain_index([v] * n), 1.0, rel_tol=1e-12)


# 3 ----------------------------------------------------------------------

@criterion(3, "Exp1 first loss in slow start above pipe + buffer, within 20% across variants")
def test_burst_loss():
    sc = build_exp1("newreno", scale=SCALE)
    pipe = sc.capacity_bps * sc.base_rtt(sc.flows[0]) / (8 * sc.packet_size)
    limit = pipe + sc.link("R1", "R2").queue_pkts
    first = {}
    for v in VARIANTS:
        loss = exp1(v, EXP1_SHORT).senders[0].losses[0]
        assert loss.state_before == SLOW_START, v
        assert loss.cwnd_before > limit, (v, loss.cwnd_before, limit)
        first[v] = loss.cwnd_before
    mean = sum(first.values()) / len(first)
    assert all(abs(w - mean) <= 0.2 * mean for w in first.values()), first


# 4 ----------------------------------------------------------------------

@criterion(4, "Exp1 decrease ratio inside each variant's envelope")
@pytest.mark.parametrize("variant", VARIANTS)
def test_decrease_envelope(variant):
    losses = [l for l in exp1(variant, EXP1_SHORT).senders[0].losses if l.kind == "dupack"]
    assert losses
    lo, hi = DECREASE_ENVELOPE[variant]
    ratio = losses[0].cwnd_after / losses[0].cwnd_before
    assert lo <= ratio <= hi, ratio


# 5 ----------------------------------------------------------------------

@criterion(5, "Exp1 cwnd shapes: NewReno linear, CUBIC on its curve, BIC steps bounded")
def test_newreno_linear():
    segs = segments(exp1("newreno", EXP1_LONG).traces[1])
    assert segs
    for seg in segs:
        assert r_squared(seg) >= 0.99, (seg[0][0], seg[-1][0])


@criterion(5, "Exp1 cwnd shapes: NewReno linear, CUBIC on its curve, BIC steps bounded")
def test_cubic_follows_curve():
    res = exp1("cubic", EXP1_LONG)
    sender = res.senders[0]
    state = sender.cc.state
    rtt_min = sender.st.rtt.rtt_min
    segs = segments(res.traces[1])
    assert segs
    for seg in segs:
        opened = [e for e in state.epochs if e[0] <= seg[0][0] + 1e-9]
        _, epoch_start, w_max = opened[-1]
        errors = [p[2] - cubic_window(w_max, p[0] - epoch_start + rtt_min, state.c, state.beta)
                  for p in seg]
        rms = math.sqrt(sum(e * e for e in errors) / len(errors))
        assert rms <= 0.02 * w_max, (seg[0][0], rms, w_max)


@criterion(5, "Exp1 cwnd shapes: NewReno linear, CUBIC on its curve, BIC steps bounded")
def test_bic_steps():
    res = exp1("bic", EXP1_LONG)
    state = res.senders[0].cc.state
    losses = [l.time for l in res.senders[0].losses]
    assert state.steps
    assert all(state.s_min <= s <= state.s_max for _, s, _, _ in state.steps)
    # between two losses, steps shrink while below w_max and grow once past it
    bounds = [0.0] + losses + [math.inf]
    for lo, hi in zip(bounds, bounds[1:]):
        below = [s for t, s, w, wm in state.steps if lo <= t < hi and w < wm]
        above = [s for t, s, w, wm in state.steps if lo <= t < hi and w >= wm]
        assert all(a >= b for a, b in zip(below, below[1:])), below
        assert all(a <= b for a, b in zip(above, above[1:])), above


# 6 ----------------------------------------------------------------------

def _inversions(series):
    return [(a, b) for a, b in zip(series, series[1:]) if b < a]


@criterion(6, "Exp2 throughput non-decreasing in buffer (one inversion <= 5% allowed)")
@pytest.mark.parametrize("variant", ["cubic", "bic", "yeah"])
def test_buffer_trend(variant):
    series = [exp2(variant, b).report.aggregate_throughput for b in PAPER_BUFFERS]
    inv = _inversions(series)
    assert len(inv) <= 1 and all(b >= 0.95 * a for a, b in inv), series


# 7 ----------------------------------------------------------------------

@criterion(7, "Exp2 5000-pkt ranking: CUBIC/BIC/YeAH >= 85%, NewReno <= 60%, ratio >= 1.5")
def test_ranking():
    util = {v: exp2(v, 5000).report.utilization for v in ("cubic", "bic", "yeah", "newreno")}
    fast = [util[v] for v in ("cubic", "bic", "yeah")]
    assert all(u >= 0.85 for u in fast), util
    assert util["newreno"] <= 0.60, util
    assert all(u >= 1.5 * util["newreno"] for u in fast), util


# 8 ----------------------------------------------------------------------

@criterion(8, "Exp2 intra-fairness >= 0.90 for CUBIC, BIC, H-TCP at buffers >= 500")
@pytest.mark.parametrize("variant", ["cubic", "bic", "htcp"])
def test_intra_fairness(variant):
    jain = {b: exp2(variant, b).report.intra_fair for b in PAPER_BUFFERS if b >= 500}
    assert all(j >= 0.90 for j in jain.values()), jain


# 9 ----------------------------------------------------------------------

@criterion(9, "loss ratios in [0, 0.5]; Scalable loses more than CUBIC at 5000 pkts")
def test_loss_ratios():
    runs = [exp2(v, b) for v in ("cubic", "bic", "yeah") for b in PAPER_BUFFERS]
    runs += [exp2("htcp", b) for b in PAPER_BUFFERS if b >= 500]
    runs += [exp2("newreno", 5000), exp2("scalable", 5000)]
    assert all(0.0 <= r.report.loss_ratio <= 0.5 for r in runs)
    assert exp2("scalable", 5000).report.loss_ratio > exp2("cubic", 5000).report.loss_ratio


# 10 ---------------------------------------------------------------------

@criterion(10, "packet conservation on every run; identical reruns")
def test_conservation_and_determinism():
    # every run in this module already passed the periodic and final checks
    for res in (exp1("newreno", EXP1_SHORT), exp2("cubic", 500)):
        res.engine.check_conservation()
        for r, s in zip(res.receivers, res.senders):
            assert r.pkts_delivered <= s.pkts_sent
    again = _checked_run(build_exp2("cubic", 500, scale=SCALE, duration=EXP2_DURATION))
    first = exp2("cubic", 500)
    assert again.trace_points() == first.trace_points()
    assert again.stats == first.stats
    assert again.report.flow_throughput == first.report.flow_throughput
    assert again.report.loss_ratio == first.report.loss_ratio
