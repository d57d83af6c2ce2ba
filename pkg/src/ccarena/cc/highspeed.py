"""HighSpeed TCP response function.

Between the low and high windows the decrease factor is linear in log(w) and
the loss-rate response p(w) is log-linear; the increase follows from
a(w) = w^2 p(w) 2 b(w) / (2 - b(w)). The two p endpoints are chosen so that
a(w) lands exactly on the pinned endpoint values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .base import CongestionControl

LOW_WINDOW = 38.0
HIGH_WINDOW = 83000.0
A_LOW, B_LOW = 1.0, 0.5
A_HIGH, B_HIGH = 70.0, 0.1


def _p_from(a: float, b: float, w: float) -> float:
    return a * (2.0 - b) / (2.0 * b * w * w)


P_LOW = _p_from(A_LOW, B_LOW, LOW_WINDOW)
P_HIGH = _p_from(A_HIGH, B_HIGH, HIGH_WINDOW)
_LOG_SPAN = math.log(HIGH_WINDOW) - math.log(LOW_WINDOW)


def hstcp_lookup(w: float) -> tuple[float, float]:
    """Return the (increase per RTT, decrease fraction) pair for window ``w``."""
    if w <= LOW_WINDOW:
        return A_LOW, B_LOW
    if w >= HIGH_WINDOW:
        return A_HIGH, B_HIGH
    x = (math.log(w) - math.log(LOW_WINDOW)) / _LOG_SPAN
    b = B_LOW + (B_HIGH - B_LOW) * x
    p = math.exp(math.log(P_LOW) + x * (math.log(P_HIGH) - math.log(P_LOW)))
    a = w * w * p * 2.0 * b / (2.0 - b)
    return a, b


@dataclass
class HstcpParams:
    max_ssthresh: float = 100.0
    # Off by default: with it on, initial slow start cannot reach a
    # multi-thousand segment window within the run.
    limited_slow_start: bool = False


class HighSpeed(CongestionControl):
    name = "highspeed"
    Params = HstcpParams

    def slow_start(self, flow, acked):
        p = self.p
        if not p.limited_slow_start or flow.cwnd <= p.max_ssthresh:
            return super().slow_start(flow, acked)
        k = int(flow.cwnd / (0.5 * p.max_ssthresh))
        flow.cwnd = min(flow.cwnd + acked / k, flow.ssthresh)
        return 0.0

    def cong_avoid(self, flow, acked):
        a, _ = hstcp_lookup(flow.cwnd)
        flow.cwnd += a * acked / flow.cwnd

    def loss_multiplier(self, flow):
        return 1.0 - hstcp_lookup(flow.cwnd)[1]
