"""UBR+ bottleneck port (EPD / Selective Drop) and access-link conveyors.

The two inter-switch output ports are simulated cell by cell: every cell
arrival is an event, every cell transmission completion is an event, and the
drop policy is evaluated at frame boundaries against the live buffer state.
Access links never drop and never reorder, so they are simulated as exact
closed-form FIFO rate servers: each cell's departure time is
max(arrival, previous departure) + 424/rate, identical to an event-driven
queue but without per-cell events off the bottleneck.
"""

from __future__ import annotations

import math

from .aal5 import CELL_BYTES, Cell
from .kernel import Simulator

EPD = "epd"
SD = "sd"

ACCEPT = "accept"
DROP_FRAME_START = "drop_frame_start"
DROP_TAIL_OVERFLOW = "drop_tail_overflow"

# per-VC frame-walk states
_IDLE = 0        # next cell starts a new frame
_ADMITTING = 1
_DISCARDING = 2


def cell_time_ns(rate_bps: float) -> int:
    return round(CELL_BYTES * 8 * 1_000_000_000 / rate_bps)


def sd_over_fair_share(x_i: int, x_total: int, n_active: int, z: float) -> bool:
    """Selective Drop fair-share test: X_i > Z * X / N_a.

    The drop-audit tooling uses this same expression, so logged decisions can
    be re-checked exactly.
    """
    return x_i > z * x_total / n_active


class PolicyPort:
    """FIFO output port with a K-cell buffer and a frame-aware drop policy.

    EPD discards an arriving frame entirely when occupancy exceeds R*K.
    Selective Drop additionally requires the frame's VC to hold more than
    Z*X/N_a cells, i.e. more than its share among the N_a VCs currently
    buffered.  Mid-frame arrivals that meet a full buffer are tail-dropped
    and the rest of the frame, eom included, is discarded with them.
    """

    def __init__(self, sim: Simulator, name: str, rate_bps: float, capacity: int,
                 policy: str, num_vcs: int, r: float = 0.8, z: float = 0.8,
                 log_drops: bool = False):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        if policy not in (EPD, SD):
            raise ValueError(f"unknown policy {policy!r}")
        self.sim = sim
        self.name = name
        self.capacity = capacity
        self.policy = policy
        self.r = r
        self.z = z
        self.threshold = math.floor(r * capacity + 1e-9)  # R*K in whole cells
        self.tx_ns = cell_time_ns(rate_bps)
        self.queue: list[Cell] = []  # deque semantics via head index
        self._head = 0
        self.x_per_vc = [0] * num_vcs
        self.n_active = 0
        self._state = [_IDLE] * num_vcs
        self._busy = False
        self.egress = [None] * num_vcs  # set by the topology builder
        self.cells_in = 0
        self.cells_out = 0
        self.cells_dropped = 0
        self.frames_discarded = 0
        self.drop_log: list | None = [] if log_drops else None
        sim.register_port(self)

    @property
    def occupancy(self) -> int:
        return len(self.queue) - self._head

    def on_cell(self, cell: Cell) -> None:
        """Arrival event: policy decision at frame starts, then enqueue/drop."""
        vc = cell.vc
        state = self._state[vc]
        self.cells_in += 1
        if state == _DISCARDING:
            self.cells_dropped += 1
            if cell.eom:
                self._state[vc] = _IDLE
            return
        x = len(self.queue) - self._head
        if state == _IDLE:
            # first cell of a frame: the only place the policy may refuse it
            if x > self.threshold:
                if self.policy == EPD:
                    self._drop_frame(cell, DROP_FRAME_START, x)
                    return
                if sd_over_fair_share(self.x_per_vc[vc], x, self.n_active, self.z):
                    self._drop_frame(cell, DROP_FRAME_START, x)
                    return
            if x >= self.capacity:
                self._drop_frame(cell, DROP_TAIL_OVERFLOW, x)
                return
            if not cell.eom:
                self._state[vc] = _ADMITTING
        else:  # admitting, mid-frame
            if x >= self.capacity:
                self._drop_frame(cell, DROP_TAIL_OVERFLOW, x)
                return
            if cell.eom:
                self._state[vc] = _IDLE
        self.queue.append(cell)
        xi = self.x_per_vc[vc]
        if xi == 0:
            self.n_active += 1
        self.x_per_vc[vc] = xi + 1
        if not self._busy:
            self._busy = True
            self.sim.schedule(self.sim.now + self.tx_ns, self._complete)

    def _drop_frame(self, cell: Cell, verdict: str, x: int) -> None:
        vc = cell.vc
        self.cells_dropped += 1
        self.frames_discarded += 1
        if self.drop_log is not None:
            self.drop_log.append(
                (self.sim.now, vc, verdict, x, self.x_per_vc[vc], self.n_active))
        self._state[vc] = _IDLE if cell.eom else _DISCARDING

    def _complete(self, _=None) -> None:
        """Service completion: the head cell has been fully transmitted."""
        q = self.queue
        cell = q[self._head]
        self._head += 1
        if self._head > 4096 and self._head * 2 > len(q):
            del q[:self._head]
            self._head = 0
        vc = cell.vc
        xi = self.x_per_vc[vc] - 1
        self.x_per_vc[vc] = xi
        if xi == 0:
            self.n_active -= 1
        self.cells_out += 1
        self.egress[vc].offer(cell)
        if len(q) > self._head:
            self.sim.schedule(self.sim.now + self.tx_ns, self._complete)
        else:
            self._busy = False

    def conservation_ok(self) -> bool:
        return self.cells_in == self.cells_out + self.cells_dropped + self.occupancy


class IngressLink:
    """Host NIC onto its access link, feeding one policy port.

    Exact FIFO rate server: cells offered at time t depart at
    max(t, previous departure) + tx and reach the switch one propagation
    delay later, where each becomes a port arrival event.
    """

    __slots__ = ("sim", "port", "tx_ns", "prop_ns", "_free_at", "cells_in")

    def __init__(self, sim: Simulator, port: PolicyPort, rate_bps: float, prop_ns: int):
        self.sim = sim
        self.port = port
        self.tx_ns = cell_time_ns(rate_bps)
        self.prop_ns = prop_ns
        self._free_at = 0
        self.cells_in = 0

    def offer_frame(self, cells: list[Cell]) -> None:
        sim = self.sim
        dep = max(sim.now, self._free_at)
        tx = self.tx_ns
        arrival = self.prop_ns
        on_cell = self.port.on_cell
        for cell in cells:
            dep += tx
            sim.schedule(dep + arrival, on_cell, cell)
        self._free_at = dep
        self.cells_in += len(cells)


class EgressLink:
    """Far-side path of one VC: bottleneck propagation, then its access link.

    Receives cells synchronously as the policy port finishes transmitting
    them.  Body cells are tallied into the reassembler immediately (their
    delivery order within the frame is immaterial); the frame verdict is
    computed at the eom cell and, when the frame is intact, delivery of the
    segment to the endpoint is scheduled for the eom cell's arrival time.
    """

    __slots__ = ("sim", "reasm", "deliver", "tx_ns", "lead_ns", "_free_at",
                 "cells_in", "_access_prop_ns")

    def __init__(self, sim: Simulator, rate_bps: float, bottleneck_prop_ns: int,
                 access_prop_ns: int, reassembler, deliver):
        self.sim = sim
        self.reasm = reassembler
        self.deliver = deliver  # deliver(segment) at the endpoint
        self.tx_ns = cell_time_ns(rate_bps)
        self.lead_ns = bottleneck_prop_ns
        self._access_prop_ns = access_prop_ns
        self._free_at = 0
        self.cells_in = 0

    def offer(self, cell: Cell) -> None:
        self.cells_in += 1
        dep = max(self.sim.now + self.lead_ns, self._free_at) + self.tx_ns
        self._free_at = dep
        if not cell.eom:
            self.reasm.body()
            return
        if self.reasm.eom(cell.seg):
            self.sim.schedule(dep + self._access_prop_ns, self.deliver, cell.seg)
