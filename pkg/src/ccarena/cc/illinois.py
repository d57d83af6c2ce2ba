from __future__ import annotations

from dataclasses import dataclass

from .base import CongestionControl
from ..tcp import CONG_AVOID


@dataclass
class IllinoisParams:
    alpha_max: float = 10.0
    alpha_min: float = 0.3
    beta_min: float = 0.125
    beta_max: float = 0.5
    d1: float = 0.01  # thresholds as fractions of the max queuing delay
    d2: float = 0.1
    d3: float = 0.8
    alpha_base: float = 1.0  # used until the first congestion-avoidance round
    beta_base: float = 0.5


def illinois_coeffs(d_a: float, d_m: float, p: IllinoisParams = IllinoisParams()
                    ) -> tuple[float, float]:
    """(alpha, beta) from the average and maximum queuing delay.

    alpha is flat at alpha_max up to d1 then falls as k1/(k2 + d_a), reaching
    alpha_min at d_m; beta ramps linearly from beta_min at d2 to beta_max at d3.
    """
    if d_m <= 0:
        return p.alpha_max, p.beta_min
    d1, d2, d3 = p.d1 * d_m, p.d2 * d_m, p.d3 * d_m
    if d_a <= d1:
        alpha = p.alpha_max
    else:
        span = p.alpha_max - p.alpha_min
        k1 = (d_m - d1) * p.alpha_min * p.alpha_max / span
        k2 = (d_m - d1) * p.alpha_min / span - d1
        alpha = k1 / (k2 + d_a)
    if d_a <= d2:
        beta = p.beta_min
    elif d_a >= d3:
        beta = p.beta_max
    else:
        beta = p.beta_min + (p.beta_max - p.beta_min) * (d_a - d2) / (d3 - d2)
    return alpha, beta


class Illinois(CongestionControl):
    name = "illinois"
    Params = IllinoisParams

    def init(self, flow):
        self.alpha = self.p.alpha_base
        self.beta = self.p.beta_base

    def _coeffs(self, flow):
        return illinois_coeffs(flow.rtt.queuing_delay_avg, flow.rtt.queuing_delay_max, self.p)

    def on_round_end(self, flow):
        # delay samples from slow start say little about the steady queue
        if flow.state == CONG_AVOID:
            self.alpha, self.beta = self._coeffs(flow)

    def cong_avoid(self, flow, acked):
        flow.cwnd += self.alpha * acked / flow.cwnd

    def loss_multiplier(self, flow):
        if flow.state == CONG_AVOID:
            self.alpha, self.beta = self._coeffs(flow)
        else:
            self.alpha, self.beta = self.p.alpha_base, self.p.beta_base
        return 1.0 - self.beta
