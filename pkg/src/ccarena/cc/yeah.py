from __future__ import annotations

from dataclasses import dataclass

from ..tcp import CONG_AVOID, SLOW_START
from .base import CongestionControl, clamp, queue_estimate

FAST = "fast"
SLOW = "slow"


@dataclass
class YeahParams:
    alpha_q: float = 80.0  # queued-packet threshold
    phi: float = 8.0  # fast mode needs queuing delay below base RTT / phi
    rho: int = 16  # slow rounds before loss response falls back to halving
    stcp_alpha: float = 0.01
    fast_reset: int = 50


def yeah_mode(cwnd: float, rtt: float, rtt_min: float, alpha_q: float = 80.0,
              phi: float = 8.0) -> str:
    q = queue_estimate(cwnd, rtt, rtt_min)
    if q < alpha_q and (rtt - rtt_min) / rtt_min < 1.0 / phi:
        return FAST
    return SLOW


def yeah_loss_reduction(cwnd: float, q: float) -> float:
    """Congestion-avoidance loss response: back off by the queue estimate,
    no less than cwnd/8 and no more than cwnd/2."""
    return clamp(q, cwnd / 8.0, cwnd / 2.0)


class Yeah(CongestionControl):
    name = "yeah"
    Params = YeahParams

    def init(self, flow):
        self.mode = FAST
        self.last_q = 0.0
        self.doing_reno_now = 0
        self.reno_count = 2.0
        self.fast_count = 0

    def cong_avoid(self, flow, acked):
        if self.mode == FAST:
            flow.cwnd += self.p.stcp_alpha * acked
        else:
            flow.cwnd += acked / flow.cwnd

    def on_round_end(self, flow):
        rtt = flow.rtt.round_min
        if rtt is None:
            return
        p = self.p
        base = flow.rtt.rtt_min
        q = queue_estimate(flow.cwnd, rtt, base)
        self.mode = yeah_mode(flow.cwnd, rtt, base, p.alpha_q, p.phi)
        self.last_q = q
        if flow.state != CONG_AVOID:
            return
        if self.mode == SLOW:
            if q > p.alpha_q and flow.cwnd > self.reno_count:
                # precautionary decongestion
                flow.cwnd = max(flow.cwnd - min(q, flow.cwnd / 2.0), self.reno_count)
                flow.ssthresh = flow.cwnd
            if self.reno_count <= 2:
                self.reno_count = max(flow.cwnd / 2.0, 2.0)
            else:
                self.reno_count += 1
            self.doing_reno_now += 1
        else:
            self.fast_count += 1
            if self.fast_count > p.fast_reset:
                self.reno_count = 2.0
                self.fast_count = 0
            self.doing_reno_now = 0

    def on_loss_dupack(self, flow):
        cwnd = flow.cwnd
        if flow.state == SLOW_START or self.doing_reno_now >= self.p.rho:
            reduction = cwnd / 2.0
        else:
            reduction = yeah_loss_reduction(cwnd, self.last_q)
        flow.ssthresh = max(cwnd - reduction, 2.0)
        flow.cwnd = flow.ssthresh
        self.reno_count = max(self.reno_count / 2.0, 2.0)

    def on_timeout(self, flow):
        self.doing_reno_now = 0
        self.reno_count = 2.0
