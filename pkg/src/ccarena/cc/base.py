from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, ClassVar, Optional

from ..tcp import SLOW_START, TcpFlowState


@dataclass
class NoParams:
    pass


class CongestionControl:
    """Congestion-control plug-in.

    The sender calls these hooks; each hook may change ``flow.cwnd``,
    ``flow.ssthresh`` and the controller's own attributes, never sequencing
    state. ``on_ack`` is only invoked for new-data ACKs outside fast recovery.
    """

    name: ClassVar[str] = "base"
    Params: ClassVar[type] = NoParams

    def __init__(self, params: Optional[Any] = None, **overrides: Any):
        self.p = params if params is not None else self.Params()
        if overrides:
            self.p = dataclasses.replace(self.p, **overrides)

    @classmethod
    def param_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls.Params)]

    def init(self, flow: TcpFlowState) -> None:
        pass

    # -- hooks -------------------------------------------------------------

    def on_ack(self, flow: TcpFlowState, acked: int, rtt: Optional[float]) -> None:
        if flow.cwnd < flow.ssthresh:
            acked = self.slow_start(flow, acked)
            if acked <= 0:
                return
        self.cong_avoid(flow, acked)

    def on_loss_dupack(self, flow: TcpFlowState) -> None:
        flow.ssthresh = max(flow.cwnd * self.loss_multiplier(flow), 2.0)
        flow.cwnd = flow.ssthresh

    def on_timeout(self, flow: TcpFlowState) -> None:
        pass

    def on_rtt_sample(self, flow: TcpFlowState, rtt: float) -> None:
        pass

    def on_round_end(self, flow: TcpFlowState) -> None:
        pass

    def on_recovery_exit(self, flow: TcpFlowState) -> None:
        pass

    # -- building blocks ---------------------------------------------------

    def slow_start(self, flow: TcpFlowState, acked: float) -> float:
        """One segment per acked segment up to ssthresh; returns the unused acks."""
        cwnd = flow.cwnd + acked
        if cwnd > flow.ssthresh:
            left = cwnd - flow.ssthresh
            flow.cwnd = flow.ssthresh
            return left
        flow.cwnd = cwnd
        return 0.0

    def cong_avoid(self, flow: TcpFlowState, acked: float) -> None:
        flow.cwnd += acked / flow.cwnd

    def loss_multiplier(self, flow: TcpFlowState) -> float:
        return 0.5

    def in_slow_start(self, flow: TcpFlowState) -> bool:
        return flow.state == SLOW_START and flow.cwnd < flow.ssthresh


def queue_estimate(cwnd: float, rtt: float, rtt_min: float) -> float:
    """Vegas-style count of this flow's packets sitting in queues."""
    if rtt <= 0:
        return 0.0
    return max(cwnd * (rtt - rtt_min) / rtt, 0.0)


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x
