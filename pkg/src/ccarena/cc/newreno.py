from .base import CongestionControl


class NewReno(CongestionControl):
    """Standard AIMD: +1 segment per RTT, halve on loss."""

    name = "newreno"
