"""Topology wiring and execution of one experiment cell.

Each of N connections is a WWW client behind one switch and a server behind
the other.  Server responses cross the server access link, the forward
bottleneck port, and the client access link; requests and ACKs take the
mirrored reverse path through their own bottleneck port.  Both bottleneck
ports run the cell rate, buffer size, and drop policy under test; access
links are overprovisioned and lossless.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .aal5 import Cell, Reassembler, Segment, segment_to_cells
from .kernel import Simulator, seconds
from .metrics import efficiency, fairness
from .scenarios import RunSpec
from .switchport import EgressLink, IngressLink, PolicyPort
from .tcp import TcpEndpoint, TcpParams
from .www import ClientApp, ServerApp, TrafficParams


@dataclass
class RunResult:
    delay_class: str
    drop_policy: str
    tcp_flavor: str
    buffer_rtt: str
    buffer_cells: int
    seed: int
    scale: float
    connections: int
    duration_s: float
    efficiency: float
    fairness: float
    goodput_bps: float
    offered_bps: float
    cells_in: int
    cells_out: int
    cells_dropped: int
    rev_cells_dropped: int
    frames_corrupt: int
    timeouts: int
    fast_recoveries: int
    rexmit_segs: int
    events: int
    status: str = "ok"
    # per-connection detail, not serialized into results rows
    goodputs: list = field(default_factory=list, repr=False)
    demands: list = field(default_factory=list, repr=False)
    drop_logs: dict | None = field(default=None, repr=False)


CSV_COLUMNS = ("delay_class", "drop_policy", "tcp_flavor", "buffer_rtt",
               "buffer_cells", "seed", "scale", "connections", "duration_s",
               "efficiency", "fairness", "goodput_bps", "offered_bps",
               "cells_in", "cells_out", "cells_dropped", "rev_cells_dropped",
               "frames_corrupt", "timeouts", "fast_recoveries", "rexmit_segs",
               "events", "status")


def _make_transmit(vc: int, ingress: IngressLink):
    body = Cell(vc, False, None)  # body cells are interchangeable, share one

    def transmit(seg: Segment):
        ingress.offer_frame(segment_to_cells(vc, seg, body))

    return transmit


class Topology:
    """All simulation objects for one cell, kept alive together."""

    def __init__(self, spec: RunSpec, log_drops: bool = False):
        sc = spec.scenario
        self.spec = spec
        self.sim = Simulator(seed=sc.seed)
        n = sc.connections
        self.forward = PolicyPort(self.sim, "forward", sc.bottleneck_bps,
                                  spec.buffer_cells, spec.drop_policy, n,
                                  log_drops=log_drops)
        self.reverse = PolicyPort(self.sim, "reverse", sc.bottleneck_bps,
                                  spec.buffer_cells, spec.drop_policy, n,
                                  log_drops=log_drops)
        params = TcpParams(mss=sc.mss, rcv_wnd=sc.rcv_wnd,
                           init_ssthresh=sc.init_ssthresh)
        duration_ns = seconds(sc.duration_s)
        self.servers: list[TcpEndpoint] = []
        self.clients: list[TcpEndpoint] = []
        self.client_apps: list[ClientApp] = []
        self.server_apps: list[ServerApp] = []
        self.client_reasm: list[Reassembler] = []
        for c in range(n):
            server_in = IngressLink(self.sim, self.forward, sc.access_bps,
                                    sc.access_prop_ns)
            client_in = IngressLink(self.sim, self.reverse, sc.access_bps,
                                    sc.access_prop_ns)
            server = TcpEndpoint(self.sim, c, 1, spec.tcp_flavor, params,
                                 _make_transmit(c, server_in))
            client = TcpEndpoint(self.sim, c, 0, spec.tcp_flavor, params,
                                 _make_transmit(c, client_in))
            c_reasm = Reassembler()
            s_reasm = Reassembler()
            self.forward.egress[c] = EgressLink(
                self.sim, sc.access_bps, sc.bottleneck_prop_ns,
                sc.access_prop_ns, c_reasm, client.on_frame)
            self.reverse.egress[c] = EgressLink(
                self.sim, sc.access_bps, sc.bottleneck_prop_ns,
                sc.access_prop_ns, s_reasm, server.on_frame)
            app_c = ClientApp(self.sim, client, sc.traffic,
                              self.sim.stream(f"request-count:{c}"),
                              self.sim.stream(f"inter-request-gap:{c}"),
                              duration_ns)
            app_s = ServerApp(server, sc.traffic,
                              self.sim.stream(f"file-size:{c}"))
            self.servers.append(server)
            self.clients.append(client)
            self.client_apps.append(app_c)
            self.server_apps.append(app_s)
            self.client_reasm.append(c_reasm)

    def run(self) -> RunResult:
        sc = self.spec.scenario
        stats = self.sim.run_until(seconds(sc.duration_s))
        for port in (self.forward, self.reverse):
            if not port.conservation_ok():
                raise RuntimeError(
                    f"cell conservation violated on {port.name} port: "
                    f"in={port.cells_in} out={port.cells_out} "
                    f"dropped={port.cells_dropped} queued={port.occupancy}")
        goodputs = [cl.rcv_nxt * 8.0 / sc.duration_s for cl in self.clients]
        demands = [sv.app_bytes * 8.0 / sc.duration_s for sv in self.servers]
        eff = efficiency(goodputs, sc.mss, sc.bottleneck_bps)
        fair = fairness(goodputs, demands, sc.mss, sc.bottleneck_bps)
        ends = self.servers + self.clients
        drop_logs = None
        if self.forward.drop_log is not None:
            drop_logs = {"forward": self.forward.drop_log,
                         "reverse": self.reverse.drop_log}
        return RunResult(
            delay_class=sc.delay_class,
            drop_policy=self.spec.drop_policy,
            tcp_flavor=self.spec.tcp_flavor,
            buffer_rtt=self.spec.buffer_rtt,
            buffer_cells=self.spec.buffer_cells,
            seed=sc.seed,
            scale=sc.scale,
            connections=sc.connections,
            duration_s=sc.duration_s,
            efficiency=eff,
            fairness=fair,
            goodput_bps=sum(goodputs),
            offered_bps=sum(demands),
            cells_in=self.forward.cells_in,
            cells_out=self.forward.cells_out,
            cells_dropped=self.forward.cells_dropped,
            rev_cells_dropped=self.reverse.cells_dropped,
            frames_corrupt=sum(r.frames_corrupt for r in self.client_reasm),
            timeouts=sum(e.timeouts for e in ends),
            fast_recoveries=sum(e.fast_recoveries for e in ends),
            rexmit_segs=sum(e.rexmit_segs for e in ends),
            events=stats.events,
            goodputs=goodputs,
            demands=demands,
            drop_logs=drop_logs,
        )


def run_cell(spec: RunSpec, log_drops: bool = False) -> RunResult:
    """Build and run one grid cell to completion."""
    return Topology(spec, log_drops=log_drops).run()
