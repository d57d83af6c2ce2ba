from dataclasses import dataclass

from .base import CongestionControl


@dataclass
class StcpParams:
    alpha: float = 0.01
    beta: float = 0.125

    def __post_init__(self):
        if not (0 < self.alpha < 1 and 0 < self.beta < 1):
            raise ValueError("scalable alpha and beta must lie in (0, 1)")


def stcp_ack(cwnd: float, alpha: float = 0.01) -> float:
    return cwnd + alpha


def stcp_loss(cwnd: float, beta: float = 0.125) -> float:
    return cwnd - beta * cwnd


class Scalable(CongestionControl):
    """Scalable TCP: fixed per-ACK increment, fixed fractional decrease."""

    name = "scalable"
    Params = StcpParams

    def cong_avoid(self, flow, acked):
        flow.cwnd += self.p.alpha * acked

    def loss_multiplier(self, flow):
        return 1.0 - self.p.beta
