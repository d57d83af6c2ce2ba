import math
import random

import pytest

from ccarena.metrics import (FlowCounters, MetricError, MetricsReport, Trace, build_report,
                             format_cadence, jain_index, loss_ratio, parse_cadence, read_trace,
                             record_trace, summary_rows, throughput, write_run_csv,
                             write_summary_csv, write_trace)


def test_throughput_examples():
    assert throughput(FlowCounters(1, bytes_delivered=1_250_000_000, start=0, end=100)) == 100.0
    assert throughput(FlowCounters(1, bytes_delivered=0, start=0, end=100)) == 0.0
    flows = [FlowCounters(i, bytes_delivered=3_125_000_000, start=0, end=100) for i in range(4)]
    assert sum(throughput(c) for c in flows) == pytest.approx(1000.0)
    with pytest.raises(MetricError):
        throughput(FlowCounters(1, start=5, end=5))


def test_throughput_reconstructs_bytes():
    rng = random.Random(3)
    for _ in range(1000):
        c = FlowCounters(1, bytes_delivered=rng.randrange(10**10), start=rng.uniform(0, 1),
                         end=rng.uniform(2, 200))
        assert throughput(c) * 1e6 * (c.end - c.start) / 8 == pytest.approx(c.bytes_delivered)


def test_loss_ratio_examples():
    assert loss_ratio(FlowCounters(1, pkts_sent=1000, pkts_lost=10)) == 0.01
    assert loss_ratio(FlowCounters(1, pkts_sent=1000, pkts_lost=0)) == 0.0
    with pytest.raises(MetricError):
        loss_ratio(FlowCounters(1))


def test_jain_examples():
    assert jain_index([5, 5, 5, 5]) == 1.0
    assert jain_index([1, 0, 0, 0]) == 0.25
    assert jain_index([4, 2, 2, 2]) == pytest.approx(100 / 112)
    with pytest.raises(MetricError):
        jain_index([0, 0])
    with pytest.raises(MetricError):
        jain_index([])
    with pytest.raises(MetricError):
        jain_index([1, -1])


def test_jain_properties_random_vectors():
    rng = random.Random(11)
    for _ in range(10_000):
        n = rng.randint(1, 12)
        x = [rng.uniform(0, 1000) * (rng.random() < 0.9) for _ in range(n)]
        if not any(x):
            x[0] = 1.0
        j = jain_index(x)
        assert 1 / n - 1e-12 <= j <= 1.0
        c = math.exp(rng.uniform(-10, 10))
        assert jain_index([c * v for v in x]) == pytest.approx(j, rel=1e-9)
        v = rng.uniform(1e-3, 1e3)
        assert jain_index([v] * n) == pytest.approx(1.0, rel=1e-12)
        assert jain_index([v] + [0.0] * (n - 1)) == pytest.approx(1 / n, rel=1e-12)


def test_trace_order_and_cadence():
    tr = Trace()
    record_trace(tr, 1, 1.0, 10, 20)
    record_trace(tr, 1, 2.0, 11, 20)
    assert [p.time for p in tr.series(1)] == [1.0, 2.0]
    with pytest.raises(ValueError):
        tr.record(1, 0.5, 1, 1)
    assert parse_cadence("per-ack") == "per-ack"
    assert parse_cadence("interval:10") == 0.01
    assert format_cadence(0.01) == "interval:10"
    assert 100 / parse_cadence("interval:10") == pytest.approx(10_000)
    with pytest.raises(ValueError):
        parse_cadence("every:5")


def test_trace_file_round_trip(tmp_path):
    pts = [(0.1234567, 1, 10.5, math.inf, "slow-start"), (1.0, 2, 3.25, 2.0, "fast-recovery")]
    path = tmp_path / "t.tsv"
    write_trace(path, pts)
    lines = path.read_text().splitlines()
    assert lines[0] == "0.123457\t1\t10.500000\tinf\tslow-start"
    back = read_trace(path)
    assert back[1] == pts[1]


def _report(variant, buf, profile, values):
    counters = [FlowCounters(i + 1, bytes_delivered=int(v * 1e6 / 8 * 10), pkts_sent=100,
                             pkts_lost=5, start=0, end=10) for i, v in enumerate(values)]
    return build_report(variant, buf, profile, 10.0, counters, 100.0)


def test_build_report_and_summary(tmp_path):
    hom = _report("cubic", 100, "homogeneous", [20, 20, 20, 20])
    het = _report("cubic", 100, "heterogeneous", [40, 20, 10, 10])
    assert isinstance(hom, MetricsReport)
    assert hom.aggregate_throughput == pytest.approx(80.0)
    assert hom.utilization == pytest.approx(0.8)
    assert hom.intra_fair == 1.0 and hom.rtt_fair is None
    assert het.rtt_fair < 1.0 and het.intra_fair is None
    rows = summary_rows([het, hom])
    assert len(rows) == 1
    assert rows[0]["throughput_mbps"] == pytest.approx(80.0)
    assert rows[0]["rtt_fair"] == het.rtt_fair
    path = tmp_path / "summary.csv"
    write_summary_csv(path, rows)
    assert path.read_text().splitlines()[0] == \
        "variant,buffer_pkts,throughput_mbps,loss_ratio,intra_fair,rtt_fair"
    write_run_csv(tmp_path / "run.csv", hom)
    assert len((tmp_path / "run.csv").read_text().splitlines()) == 1 + 4 + 2
