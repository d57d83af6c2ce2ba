from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from ..tcp import FAST_RECOVERY
from .base import CongestionControl


def cubic_k(w_max: float, c: float = 0.4, beta: float = 0.2) -> float:
    return (beta * w_max / c) ** (1.0 / 3.0)


def cubic_window(w_max: float, t: float, c: float = 0.4, beta: float = 0.2,
                 rtt: Optional[float] = None) -> float:
    """Window ``t`` seconds into a congestion epoch.

    With ``rtt`` given, the result is floored by the Reno-friendly window
    w_max(1 - beta) + 3 beta/(2 - beta) * t/rtt.
    """
    w = c * (t - cubic_k(w_max, c, beta)) ** 3 + w_max
    if rtt:
        w = max(w, reno_friendly_window(w_max, t, rtt, beta))
    return w


def reno_friendly_window(w_max: float, t: float, rtt: float, beta: float = 0.2) -> float:
    return w_max * (1.0 - beta) + 3.0 * beta / (2.0 - beta) * t / rtt


@dataclass
class CubicParams:
    c: float = 0.4
    beta: float = 0.2
    tcp_friendly: bool = True
    # Evaluate the target one minimum RTT ahead so cwnd, which trails the
    # target by about one RTT, tracks the curve itself.
    lookahead: bool = True
    fast_convergence: bool = False


@dataclass
class CubicState:
    c: float = 0.4
    beta: float = 0.2
    w_max: float = 0.0
    epoch_start: Optional[float] = None
    epochs: list = field(default_factory=list)  # (opened at, epoch_start, w_max)

    @property
    def k(self) -> float:
        return cubic_k(self.w_max, self.c, self.beta)


class Cubic(CongestionControl):
    name = "cubic"
    Params = CubicParams

    def init(self, flow):
        self.state = CubicState(c=self.p.c, beta=self.p.beta)
        self._t0 = 0.0
        self._w0 = flow.cwnd

    def target(self, flow) -> float:
        st, p = self.state, self.p
        elapsed = flow.now - self._t0
        t = flow.now - st.epoch_start
        if p.lookahead and flow.rtt.rtt_min != math.inf:
            t += flow.rtt.rtt_min
            elapsed += flow.rtt.rtt_min
        w = cubic_window(st.w_max, t, p.c, p.beta)
        if p.tcp_friendly and flow.rtt.srtt:
            # Reno-friendly line anchored at the window the epoch began with;
            # after a multiplicative decrease that is exactly w_max(1 - beta).
            w = max(w, self._w0 + 3.0 * p.beta / (2.0 - p.beta) * elapsed / flow.rtt.srtt)
        return w

    def cong_avoid(self, flow, acked):
        st = self.state
        if st.epoch_start is None:
            self._t0 = flow.now
            self._w0 = flow.cwnd
            if flow.cwnd >= st.w_max:
                # Already past the old maximum: start on the plateau.
                st.w_max = flow.cwnd
                st.epoch_start = flow.now - st.k
            else:
                # Shift the curve so it passes through the current window; this
                # is a no-op right after a decrease to (1 - beta) w_max.
                k_now = ((st.w_max - flow.cwnd) / st.c) ** (1.0 / 3.0)
                st.epoch_start = flow.now - (st.k - k_now)
            st.epochs.append((flow.now, st.epoch_start, st.w_max))
        target = self.target(flow)
        if target > flow.cwnd:
            flow.cwnd = min(flow.cwnd + (target - flow.cwnd) * acked / flow.cwnd, target)
        else:
            flow.cwnd += 0.01 * acked / flow.cwnd

    def on_loss_dupack(self, flow):
        st, p = self.state, self.p
        cwnd = flow.cwnd
        if p.fast_convergence and cwnd < st.w_max:
            st.w_max = cwnd * (2.0 - p.beta) / 2.0
        else:
            st.w_max = cwnd
        st.epoch_start = None
        flow.ssthresh = max(cwnd * (1.0 - p.beta), 2.0)
        flow.cwnd = flow.ssthresh

    def on_timeout(self, flow):
        if flow.state != FAST_RECOVERY and not flow.repeat_timeout:
            self.state.w_max = flow.cwnd
        self.state.epoch_start = None
