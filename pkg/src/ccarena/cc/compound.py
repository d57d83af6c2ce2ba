from __future__ import annotations

from dataclasses import dataclass

from ..tcp import CONG_AVOID
from .base import CongestionControl, queue_estimate

FAST = "fast"
SLOW = "slow"


@dataclass
class CompoundParams:
    gamma: float = 30.0  # queued-packet threshold
    zeta: float = 1.0
    k: float = 0.75
    alpha: float = 0.125
    beta: float = 0.5


def compound_fast_update(w_fast: float, window: float, delta: float,
                         p: CompoundParams = CompoundParams()) -> float:
    """Per-RTT update of the delay-based component."""
    if delta < p.gamma:
        return w_fast + max(p.alpha * window ** p.k - 1.0, 0.0)
    return max(w_fast - p.zeta * delta, 0.0)


def compound_mode(cwnd: float, rtt: float, rtt_min: float, gamma: float = 30.0) -> str:
    return FAST if queue_estimate(cwnd, rtt, rtt_min) < gamma else SLOW


class Compound(CongestionControl):
    """Window is the sum of a Reno part and a delay-driven part (``w_fast``)."""

    name = "compound"
    Params = CompoundParams

    def init(self, flow):
        self.w_fast = 0.0
        self.mode = FAST

    def w_reno(self, flow) -> float:
        return flow.cwnd - self.w_fast

    def cong_avoid(self, flow, acked):
        w_reno = flow.cwnd - self.w_fast
        w_reno += acked / flow.cwnd
        flow.cwnd = w_reno + self.w_fast

    def on_round_end(self, flow):
        rtt = flow.rtt.round_min
        if rtt is None:
            return
        delta = queue_estimate(flow.cwnd, rtt, flow.rtt.rtt_min)
        self.mode = FAST if delta < self.p.gamma else SLOW
        if flow.state != CONG_AVOID:
            return
        w_reno = flow.cwnd - self.w_fast
        self.w_fast = compound_fast_update(self.w_fast, flow.cwnd, delta, self.p)
        flow.cwnd = w_reno + self.w_fast

    def on_loss_dupack(self, flow):
        b = self.p.beta
        w_reno = max(flow.cwnd - self.w_fast, 1.0)
        self.w_fast = self.w_fast * (1.0 - b)
        flow.ssthresh = max(w_reno * (1.0 - b) + self.w_fast, 2.0)
        flow.cwnd = flow.ssthresh

    def on_timeout(self, flow):
        self.w_fast = 0.0
