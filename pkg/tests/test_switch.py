"""Bottleneck policy port: drop decisions, conservation, conveyor links."""

import random

import pytest

from ubrsim.aal5 import Cell, Reassembler, Segment, segment_to_cells
from ubrsim.kernel import Simulator
from ubrsim.switchport import (DROP_FRAME_START, DROP_TAIL_OVERFLOW, EPD, SD,
                               EgressLink, IngressLink, PolicyPort,
                               cell_time_ns, sd_over_fair_share)


class EgressRecorder:
    def __init__(self):
        self.cells = []

    def offer(self, cell):
        self.cells.append(cell)


def make_port(policy, capacity=1000, num_vcs=4, rate=45e6, log=True):
    sim = Simulator()
    port = PolicyPort(sim, "fwd", rate, capacity, policy, num_vcs, log_drops=log)
    port.egress = [EgressRecorder() for _ in range(num_vcs)]
    return sim, port


def feed_frame(port, vc, ncells, length=0):
    seg = Segment(vc, 1, 0, length, None)
    for _ in range(ncells - 1):
        port.on_cell(Cell(vc, False, None))
    port.on_cell(Cell(vc, True, seg))


def test_cell_time_at_bottleneck_rate():
    assert cell_time_ns(45e6) == 9422        # 424 bits / 45 Mbps
    assert cell_time_ns(149.76e6) == 2831


def test_epd_drops_new_frame_above_threshold():
    sim, port = make_port(EPD)
    assert port.threshold == 800
    feed_frame(port, 0, 801)                 # occupancy ends at exactly 801
    assert port.occupancy == 801
    feed_frame(port, 1, 5)
    assert port.occupancy == 801             # whole frame refused
    assert port.frames_discarded == 1
    assert port.cells_dropped == 5
    verdicts = {e[2] for e in port.drop_log}
    assert verdicts == {DROP_FRAME_START}


def test_epd_admits_new_frame_at_threshold_boundary():
    sim, port = make_port(EPD)
    feed_frame(port, 0, 800)                 # occupancy == threshold, not above
    feed_frame(port, 1, 5)
    assert port.occupancy == 805
    assert port.frames_discarded == 0


def test_sd_drop_requires_both_conditions():
    sim, port = make_port(SD)
    for vc, n in ((0, 300), (1, 250), (2, 150), (3, 200)):
        feed_frame(port, vc, n)
    assert port.occupancy == 900 and port.n_active == 4
    # fair share = 0.8 * 900 / 4 = 180; VC3 holds 200 > 180: dropped
    feed_frame(port, 3, 10)
    assert port.frames_discarded == 1
    t, vc, verdict, x, x_i, n_a = port.drop_log[0]
    assert (vc, verdict, x, x_i, n_a) == (3, DROP_FRAME_START, 900, 200, 4)
    assert sd_over_fair_share(x_i, x, n_a, port.z)
    # VC2 holds 150 <= 180: admitted despite occupancy above threshold
    feed_frame(port, 2, 10)
    assert port.frames_discarded == 1
    assert port.occupancy == 910


def test_sd_drop_log_audit_matches_shared_predicate():
    sim, port = make_port(SD, capacity=60, num_vcs=3)
    rng = random.Random(42)
    t = 0
    for _ in range(300):
        t += rng.randrange(0, 40_000)
        sim.run_until(t)
        feed_frame(port, rng.randrange(3), rng.randint(1, 12))
    for _, vc, verdict, x, x_i, n_a in port.drop_log:
        if verdict == DROP_FRAME_START:
            assert x > port.threshold
            assert sd_over_fair_share(x_i, x, n_a, port.z)


def test_tail_overflow_discards_rest_of_frame():
    sim, port = make_port(EPD, capacity=10, num_vcs=2)
    feed_frame(port, 0, 8)                   # below threshold 8: admitted
    assert port.occupancy == 8
    feed_frame(port, 1, 6)                   # X=8 == threshold: frame admitted,
    assert port.occupancy == 10              # fills to K, then tail-drops
    assert port.cells_dropped == 4
    assert any(e[2] == DROP_TAIL_OVERFLOW for e in port.drop_log)
    # next frame decision is fresh (prior frame state cleared at its eom)
    sim.run_until(sim.now + 9422 * 6)        # drain a few cells
    feed_frame(port, 1, 2)
    assert port.cells_in == 8 + 6 + 2


def test_service_preserves_fifo_and_routes_per_vc():
    sim, port = make_port(EPD, num_vcs=2)
    feed_frame(port, 0, 3)
    feed_frame(port, 1, 2)
    sim.run_until(9422 * 5 + 1)
    assert [c.vc for c in port.egress[0].cells] == [0, 0, 0]
    assert [c.vc for c in port.egress[1].cells] == [1, 1]
    assert port.cells_out == 5
    assert port.occupancy == 0
    assert not port._busy


def test_active_vc_count_tracks_buffered_cells():
    sim, port = make_port(EPD, num_vcs=3)
    feed_frame(port, 0, 2)
    feed_frame(port, 2, 2)
    assert port.n_active == 2
    sim.run_until(9422 * 2 + 1)              # VC0's two cells served
    assert port.n_active == 1
    sim.run_until(9422 * 4 + 1)
    assert port.n_active == 0
    assert port.x_per_vc == [0, 0, 0]


def test_cell_conservation_through_random_load():
    sim, port = make_port(SD, capacity=40, num_vcs=4)
    rng = random.Random(7)
    t = 0
    for _ in range(500):
        t += rng.randrange(0, 30_000)
        sim.run_until(t)
        feed_frame(port, rng.randrange(4), rng.randint(1, 9))
        assert port.conservation_ok()
    sim.run_until(t + 10 ** 9)
    assert port.conservation_ok()
    assert port.occupancy == 0
    assert port.cells_in == port.cells_out + port.cells_dropped


def test_single_vc_sd_behaves_like_epd():
    """With one active VC the fair share is Z*X, and X_i = X > Z*X whenever
    X > 0, so SD's gate collapses to EPD's occupancy test."""
    logs = []
    for policy in (EPD, SD):
        sim, port = make_port(policy, capacity=50, num_vcs=1)
        rng = random.Random(123)
        t = 0
        for _ in range(400):
            t += rng.randrange(0, 25_000)
            sim.run_until(t)
            feed_frame(port, 0, rng.randint(1, 10))
        logs.append([(e[0], e[2]) for e in port.drop_log])
    assert logs[0] == logs[1]


def test_ingress_link_paces_and_delays_cells():
    sim = Simulator()
    arrivals = []

    class PortStub:
        def on_cell(self, cell):
            arrivals.append((sim.now, cell))

    link = IngressLink(sim, PortStub(), 149.76e6, prop_ns=5000)
    seg = Segment(0, 1, 0, 100, None)
    link.offer_frame(segment_to_cells(0, seg))         # 4 cells
    link.offer_frame(segment_to_cells(0, seg))         # queued behind
    sim.run_until(10 ** 9)
    tx = 2831
    assert [t for t, _ in arrivals] == [tx * k + 5000 for k in range(1, 9)]
    assert arrivals[3][1].eom and arrivals[3][1].seg == seg


def test_egress_link_delivers_intact_frames_at_arrival_time():
    sim = Simulator()
    delivered = []
    link = EgressLink(sim, 149.76e6, bottleneck_prop_ns=5_000_000,
                      access_prop_ns=5000, reassembler=Reassembler(),
                      deliver=lambda seg: delivered.append((sim.now, seg)))
    seg = Segment(0, 1, 0, 100, None)
    cells = segment_to_cells(0, seg)
    for c in cells:                         # all offered at t=0
        link.offer(c)
    sim.run_until(10 ** 9)
    assert delivered == [(5_000_000 + 4 * 2831 + 5000, seg)]


def test_egress_link_drops_frame_missing_a_cell():
    sim = Simulator()
    delivered = []
    reasm = Reassembler()
    link = EgressLink(sim, 149.76e6, 5_000_000, 5000, reasm,
                      lambda seg: delivered.append(seg))
    seg = Segment(0, 1, 0, 100, None)
    cells = segment_to_cells(0, seg)
    for c in cells[1:]:                     # first body cell lost upstream
        link.offer(c)
    good = Segment(0, 1, 1, 100, None)
    for c in segment_to_cells(0, good):
        link.offer(c)
    sim.run_until(10 ** 9)
    assert delivered == [good]
    assert reasm.frames_corrupt == 1


def test_port_rejects_bad_parameters():
    sim = Simulator()
    with pytest.raises(ValueError):
        PolicyPort(sim, "x", 45e6, 0, EPD, 1)
    with pytest.raises(ValueError):
        PolicyPort(sim, "x", 45e6, 10, "red", 1)
