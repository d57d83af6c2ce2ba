from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .base import CongestionControl, clamp


def htcp_alpha(delta: float, delta_low: float = 1.0) -> float:
    """Per-RTT increase as a function of time since the last congestion event."""
    if delta < delta_low:
        return 1.0
    d = delta - delta_low
    return 1.0 + 10.0 * d + 0.5 * d * d


def htcp_decrease_factor(b_k: float, b_prev: Optional[float], rtt_min: float,
                         rtt_max: float, beta_min: float = 0.5, beta_max: float = 0.8,
                         gamma_max: float = 0.2) -> float:
    """Multiplier applied to cwnd on loss.

    Uses the RTT ratio while throughput is stable between congestion events,
    otherwise halves. No previous estimate counts as unstable.
    """
    if not b_prev:
        return 0.5
    gamma = abs(b_k - b_prev) / b_prev
    if gamma >= gamma_max or rtt_max <= 0:
        return 0.5
    return clamp(rtt_min / rtt_max, beta_min, beta_max)


@dataclass
class HtcpParams:
    delta_low: float = 1.0
    beta_min: float = 0.5
    beta_max: float = 0.8
    gamma_max: float = 0.2


class Htcp(CongestionControl):
    name = "htcp"
    Params = HtcpParams

    def init(self, flow):
        self.last_congestion = flow.now
        self.acked_at_loss = 0
        self.b_k: Optional[float] = None
        self.b_prev: Optional[float] = None

    def delta(self, flow) -> float:
        return max(flow.now - self.last_congestion, 0.0)

    def cong_avoid(self, flow, acked):
        flow.cwnd += htcp_alpha(self.delta(flow), self.p.delta_low) * acked / flow.cwnd

    def throughput_estimate(self, flow) -> float:
        """Delivered bytes per second since the previous congestion event."""
        elapsed = flow.now - self.last_congestion
        if elapsed <= 0:
            return 0.0
        return (flow.acked_pkts - self.acked_at_loss) * flow.mss / elapsed

    def on_loss_dupack(self, flow):
        p = self.p
        b_k = self.throughput_estimate(flow)
        factor = htcp_decrease_factor(b_k, self.b_prev, flow.rtt.rtt_min, flow.rtt.rtt_max,
                                      p.beta_min, p.beta_max, p.gamma_max)
        self.b_prev, self.b_k = b_k, b_k
        self.last_congestion = flow.now
        self.acked_at_loss = flow.acked_pkts
        flow.ssthresh = max(flow.cwnd * factor, 2.0)
        flow.cwnd = flow.ssthresh

    def on_timeout(self, flow):
        self.last_congestion = flow.now
        self.acked_at_loss = flow.acked_pkts
        self.b_prev = None
