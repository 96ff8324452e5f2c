"""Experiment scenarios: orbit delay classes, link rates, windows, buffers.

A scenario fixes everything shared by one 24-cell experiment grid: the
bottleneck and access links, the number of connections, TCP window and
slow-start presets sized to the path, and the three buffer sizes (0.5, 1 and
2 round-trip-times worth of cells).  A `scale` below 1 shrinks connection
count and link rates together, preserving the offered-load-to-capacity ratio
so that reduced runs exercise the same congestion regimes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .aal5 import CELL_BYTES, cells_for_segment
from .kernel import NS_PER_MS, NS_PER_US
from .switchport import EPD, SD
from .tcp import FLAVORS, initial_ssthresh
from .www import TrafficParams

BOTTLENECK_BPS = 45_000_000.0
ACCESS_BPS = 149_760_000.0
ACCESS_PROP_NS = 5 * NS_PER_US
DEFAULT_CONNECTIONS = 100
DEFAULT_DURATION_S = 100.0
BASE_WINDOW = 65_535          # largest window without scaling

POLICIES = (EPD, SD)
BUFFER_LEVELS = ("0.5", "1", "2")


@dataclass(frozen=True)
class DelayClass:
    name: str
    one_way_ms: int           # bottleneck propagation, one direction
    mss: int
    buffer_granule: int       # cells; half-RTT buffer is rounded up to this


DELAY_CLASSES = {
    "wan": DelayClass("wan", 5, 1024, 1),
    "meo": DelayClass("meo", 100, 9180, 5),
    "geo": DelayClass("geo", 275, 9180, 5),
}


def _ceil_to(x: float, granule: int) -> int:
    return math.ceil(x / granule - 1e-9) * granule


def buffer_table(delay_class: str, scale: float = 1.0,
                 connections: int | None = None) -> dict:
    """Buffer sizes in cells for the 0.5, 1 and 2 RTT levels.

    The half-RTT buffer holds half an RTT of bottleneck cells, rounded up to
    the class granule; 1 RTT doubles it.  The 2 RTT level is widened when
    needed so every connection can hold one full segment's cells (which only
    binds for the small-MSS terrestrial class).
    """
    dc = DELAY_CLASSES[delay_class]
    bw = BOTTLENECK_BPS * scale
    conns = connections if connections is not None else _default_connections(scale)
    rtt_s = 2 * dc.one_way_ms / 1000.0
    half_cells = _ceil_to(rtt_s / 2 * bw / 8 / CELL_BYTES, dc.buffer_granule)
    two_rtt = max(4 * half_cells, conns * cells_for_segment(dc.mss))
    return {"0.5": half_cells, "1": 2 * half_cells, "2": two_rtt}


def _default_connections(scale: float) -> int:
    return max(1, round(DEFAULT_CONNECTIONS * scale))


@dataclass(frozen=True)
class Scenario:
    delay_class: str
    scale: float
    seed: int
    connections: int
    duration_s: float
    mss: int
    bottleneck_bps: float
    access_bps: float
    bottleneck_prop_ns: int
    access_prop_ns: int
    rtt_s: float
    init_ssthresh: int
    wscale: int
    rcv_wnd: int
    buffers: tuple            # cells, aligned with BUFFER_LEVELS
    traffic: TrafficParams

    def buffer_cells(self, level: str) -> int:
        return self.buffers[BUFFER_LEVELS.index(level)]


def build_scenario(delay_class: str, seed: int = 1, scale: float = 1.0,
                   connections: int | None = None,
                   duration_s: float | None = None,
                   traffic: TrafficParams | None = None,
                   buffers: tuple | None = None) -> Scenario:
    if delay_class not in DELAY_CLASSES:
        raise ValueError(f"unknown delay class {delay_class!r}; "
                         f"choose from {', '.join(DELAY_CLASSES)}")
    if not 0 < scale <= 1:
        raise ValueError(f"scale must be in (0, 1], got {scale}")
    dc = DELAY_CLASSES[delay_class]
    bw = BOTTLENECK_BPS * scale
    conns = connections if connections is not None else _default_connections(scale)
    if conns < 1:
        raise ValueError("need at least one connection")
    duration = DEFAULT_DURATION_S if duration_s is None else duration_s
    if duration <= 0:
        raise ValueError("duration must be positive")
    rtt_s = 2 * dc.one_way_ms / 1000.0
    ssthresh = initial_ssthresh(rtt_s, bw)
    target = rtt_s * bw / 8
    wscale = 0
    while (BASE_WINDOW << wscale) < target:
        wscale += 1
    if buffers is None:
        table = buffer_table(delay_class, scale, conns)
        buffers = tuple(table[level] for level in BUFFER_LEVELS)
    else:
        buffers = tuple(int(b) for b in buffers)
        if len(buffers) != len(BUFFER_LEVELS):
            raise ValueError(f"need {len(BUFFER_LEVELS)} buffer sizes")
        if any(b <= 0 for b in buffers):
            raise ValueError("buffer sizes must be positive")
    return Scenario(
        delay_class=delay_class,
        scale=scale,
        seed=seed,
        connections=conns,
        duration_s=duration,
        mss=dc.mss,
        bottleneck_bps=bw,
        access_bps=ACCESS_BPS * scale,
        bottleneck_prop_ns=dc.one_way_ms * NS_PER_MS,
        access_prop_ns=ACCESS_PROP_NS,
        rtt_s=rtt_s,
        init_ssthresh=ssthresh,
        wscale=wscale,
        rcv_wnd=BASE_WINDOW << wscale,
        buffers=buffers,
        traffic=traffic if traffic is not None else TrafficParams(),
    )


@dataclass(frozen=True)
class RunSpec:
    """One cell of the experiment grid."""
    scenario: Scenario
    drop_policy: str
    tcp_flavor: str
    buffer_rtt: str

    @property
    def buffer_cells(self) -> int:
        return self.scenario.buffer_cells(self.buffer_rtt)


def grid(scenario: Scenario) -> list:
    """The 24 grid cells in canonical order: policy, then flavor, then buffer."""
    return [RunSpec(scenario, policy, flavor, level)
            for policy in POLICIES
            for flavor in FLAVORS
            for level in BUFFER_LEVELS]
