from __future__ import annotations

from dataclasses import dataclass, field

from ..tcp import CONG_AVOID, FAST_RECOVERY
from .base import CongestionControl, clamp


@dataclass
class BicParams:
    s_max: float = 32.0
    s_min: float = 0.01
    beta: float = 0.8  # multiplier applied on loss
    low_window: float = 14.0
    fast_convergence: bool = False


@dataclass
class BicState:
    w_min: float = 0.0
    w_max: float = 0.0
    s_max: float = 32.0
    s_min: float = 0.01
    steps: list = field(default_factory=list)


def bic_target_step(state: BicState, cwnd: float) -> float:
    """Per-RTT increment.

    Below ``w_max`` this is a binary search toward the midpoint of
    [w_min, w_max]; at or above it the distance past ``w_max`` is doubled each
    RTT (the mirror image of the search), both clamped to [s_min, s_max].
    """
    if cwnd < state.w_max:
        target = (state.w_min + state.w_max) / 2.0
        return clamp(target - cwnd, state.s_min, state.s_max)
    return clamp(cwnd - state.w_max, state.s_min, state.s_max)


class Bic(CongestionControl):
    name = "bic"
    Params = BicParams

    def init(self, flow):
        self.state = BicState(s_max=self.p.s_max, s_min=self.p.s_min)
        self.step = self.p.s_min

    def _recompute(self, flow):
        st = self.state
        st.w_min = flow.cwnd
        self.step = bic_target_step(st, flow.cwnd)

    def on_round_end(self, flow):
        if flow.state == CONG_AVOID and flow.cwnd >= self.p.low_window:
            self._recompute(flow)
            self.state.steps.append((flow.now, self.step, flow.cwnd, self.state.w_max))

    def cong_avoid(self, flow, acked):
        if flow.cwnd < self.p.low_window:
            flow.cwnd += acked / flow.cwnd
        else:
            flow.cwnd += self.step * acked / flow.cwnd

    def on_loss_dupack(self, flow):
        p, st = self.p, self.state
        cwnd = flow.cwnd
        if p.fast_convergence and cwnd < st.w_max:
            st.w_max = cwnd * (1.0 + p.beta) / 2.0
        else:
            st.w_max = cwnd
        mult = 0.5 if cwnd < p.low_window else p.beta
        flow.ssthresh = max(cwnd * mult, 2.0)
        flow.cwnd = flow.ssthresh
        self._recompute(flow)

    def on_timeout(self, flow):
        if flow.state != FAST_RECOVERY and not flow.repeat_timeout:
            self.state.w_max = flow.cwnd

    def on_recovery_exit(self, flow):
        self._recompute(flow)
