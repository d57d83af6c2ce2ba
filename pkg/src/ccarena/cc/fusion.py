from __future__ import annotations

import math
from dataclasses import dataclass

from ..tcp import CONG_AVOID
from .base import CongestionControl, queue_estimate


@dataclass
class FusionParams:
    q_th: float = 0.010  # seconds
    rate_gain: float = 0.125  # EWMA weight of each per-round rate sample


def fusion_step(q_delay: float, q_th: float, rate_est: float, buffered: float,
                mss: int = 1000) -> float:
    """Per-RTT cwnd change for the three queuing-delay regions."""
    if q_delay < q_th:
        return rate_est * q_th / mss
    if q_delay > 3.0 * q_th:
        return -buffered
    return 0.0


class Fusion(CongestionControl):
    name = "fusion"
    Params = FusionParams

    def init(self, flow):
        self.rate_est = 0.0
        self.inc = 1.0
        self._round_t = flow.now
        self._round_acked = 0

    def on_round_end(self, flow):
        elapsed = flow.now - self._round_t
        if elapsed > 0:
            sample = (flow.acked_pkts - self._round_acked) * flow.mss / elapsed
            if self.rate_est == 0.0:
                self.rate_est = sample
            else:
                g = self.p.rate_gain
                self.rate_est = (1.0 - g) * self.rate_est + g * sample
        self._round_t = flow.now
        self._round_acked = flow.acked_pkts
        if flow.state != CONG_AVOID:
            return
        rtt = flow.rtt.round_min
        if self.rate_est <= 0.0 or rtt is None:
            self.inc = 1.0
            return
        base = flow.rtt.rtt_min
        step = fusion_step(rtt - base, self.p.q_th, self.rate_est,
                           queue_estimate(flow.cwnd, rtt, base), flow.mss)
        if step < 0:
            flow.cwnd = max(flow.cwnd + step, 2.0)
            self.inc = 0.0
        else:
            self.inc = step

    def cong_avoid(self, flow, acked):
        flow.cwnd += self.inc * acked / flow.cwnd

    def on_loss_dupack(self, flow):
        half = flow.cwnd / 2.0
        rtt_min = flow.rtt.rtt_min
        pipe = self.rate_est * rtt_min / flow.mss if rtt_min != math.inf else 0.0
        flow.ssthresh = max(min(pipe, flow.cwnd), half, 2.0)
        flow.cwnd = flow.ssthresh
