"""Packet-level simulator for comparing TCP congestion-control variants."""

from .cc import VARIANTS, make
from .engine import Engine, Network
from .metrics import MetricsReport, jain_index
from .scenarios import (Scenario, SweepSpec, build_exp1, build_exp2, dump_scenario,
                        load_scenario, run_scenario, run_sweep)

__version__ = "0.1.0"

__all__ = ["VARIANTS", "make", "Engine", "Network", "MetricsReport", "jain_index", "Scenario",
           "SweepSpec", "build_exp1", "build_exp2", "dump_scenario", "load_scenario",
           "run_scenario", "run_sweep"]
