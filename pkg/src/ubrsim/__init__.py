"""Cell-level simulation of WWW traffic over TCP/IP across an ATM UBR+
satellite bottleneck, plus full-factorial analysis of the resulting
efficiency and fairness matrices."""

__version__ = "1.0.0"

from .aal5 import cells_for_segment, max_tcp_throughput
from .factorial import analyze
from .kernel import Simulator
from .metrics import efficiency, fairness, max_min_allocation
from .netsim import run_cell
from .scenarios import build_scenario, buffer_table, grid
from .tcp import FLAVORS

__all__ = [
    "__version__",
    "Simulator",
    "FLAVORS",
    "analyze",
    "build_scenario",
    "buffer_table",
    "cells_for_segment",
    "efficiency",
    "fairness",
    "grid",
    "max_min_allocation",
    "max_tcp_throughput",
    "run_cell",
]
