from __future__ import annotations

from dataclasses import dataclass

from .base import CongestionControl, queue_estimate
from .highspeed import hstcp_lookup

FAST = "fast"
SLOW = "slow"


def africa_mode(cwnd: float, rtt: float, rtt_min: float, alpha: float = 1.0) -> str:
    return FAST if queue_estimate(cwnd, rtt, rtt_min) < alpha else SLOW


@dataclass
class AfricaParams:
    alpha: float = 1.0  # packets


class Africa(CongestionControl):
    """HS-TCP rules while the path looks empty, NewReno rules otherwise."""

    name = "africa"
    Params = AfricaParams

    def init(self, flow):
        self.mode = FAST
        self.delta = 0.0

    def on_rtt_sample(self, flow, rtt):
        self.delta = queue_estimate(flow.cwnd, rtt, flow.rtt.rtt_min)
        self.mode = FAST if self.delta < self.p.alpha else SLOW

    def cong_avoid(self, flow, acked):
        if self.mode == FAST:
            a, _ = hstcp_lookup(flow.cwnd)
            flow.cwnd += a * acked / flow.cwnd
        else:
            flow.cwnd += acked / flow.cwnd

    def loss_multiplier(self, flow):
        if self.mode == FAST:
            return 1.0 - hstcp_lookup(flow.cwnd)[1]
        return 0.5
