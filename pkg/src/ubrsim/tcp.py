"""TCP endpoints with four loss-recovery flavors over a frame transport.

Each endpoint is both a sender and a receiver for its side of one duplex
connection.  Receivers ACK every arriving data segment immediately (no
delayed ACKs, no piggybacking: ACKs are separate zero-payload segments) and
advertise a fixed window, since the consuming application is infinitely
fast.  Senders emit segments of up to MSS as soon as min(cwnd, rcv_wnd)
permits, including sub-MSS tails; segmentation is fixed at first emission
and retransmissions reuse the original boundaries.

Flavors:
  vanilla  slow start + congestion avoidance; losses recovered by RTO only
  reno     + fast retransmit / fast recovery at the 3rd duplicate ACK,
           halving once per recovery episode even for multi-loss windows
  newreno  + partial-ACK retransmission: stays in recovery until the
           cumulative ACK reaches the `recover` mark, one hole per RTT
  sack     + scoreboard of SACKed ranges, conservative pipe: transmits
           (retransmissions first) only while pipe < cwnd
"""

from __future__ import annotations

from dataclasses import dataclass

from .aal5 import Segment
from .kernel import NS_PER_MS, NS_PER_SEC, Simulator

VANILLA = "vanilla"
RENO = "reno"
NEWRENO = "newreno"
SACK = "sack"
FLAVORS = (VANILLA, RENO, NEWRENO, SACK)

DUP_THRESH = 3


def initial_ssthresh(rtt_s: float, bottleneck_bps: float) -> int:
    """Slow-start threshold preset to the path's RTT-bandwidth product (bytes)."""
    return round(rtt_s * bottleneck_bps / 8)


@dataclass(frozen=True)
class TcpParams:
    mss: int
    rcv_wnd: int
    init_ssthresh: int
    granularity_ns: int = 100 * NS_PER_MS
    min_granules: int = 2           # floor of the quantized RTO
    max_rto_ns: int = 64 * NS_PER_SEC
    init_rto_ns: int = 3 * NS_PER_SEC


class SegRecord:
    __slots__ = ("start", "end", "sacked", "rtx", "lost")

    def __init__(self, start: int, end: int):
        self.start = start
        self.end = end
        self.sacked = False
        self.rtx = False    # retransmitted in the current recovery episode
        self.lost = False

    def __repr__(self):
        flags = "".join(f for f, on in
                        (("S", self.sacked), ("R", self.rtx), ("L", self.lost)) if on)
        return f"<{self.start}:{self.end}{' ' + flags if flags else ''}>"


class TcpEndpoint:
    """One side of a pre-established duplex TCP connection."""

    def __init__(self, sim: Simulator, conn: int, sender_id: int, flavor: str,
                 params: TcpParams, transmit, app_recv=None, trace=None):
        if flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {flavor!r}")
        self.sim = sim
        self.conn = conn
        self.sender_id = sender_id
        self.flavor = flavor
        self.params = params
        self.transmit = transmit      # transmit(Segment)
        self.app_recv = app_recv      # app_recv(newly delivered in-order bytes)
        self.trace = trace

        # --- sender ---
        self.snd_una = 0
        self.snd_nxt = 0              # high-water mark, never rewinds
        self._cursor = 0              # next byte to (re)transmit
        self.app_bytes = 0            # total bytes the application wrote
        self.cwnd = float(params.mss)
        self.ssthresh = float(params.init_ssthresh)
        self._recs: list[SegRecord] = []
        self._base = 0                # index of first live record
        self._cursor_i = 0
        self.dupacks = 0
        self.in_recovery = False
        self.recover = 0
        # RTO state
        self.srtt = None
        self.rttvar = 0.0
        self.rto_ns = params.init_rto_ns
        self.backoff = 0
        self._timer_gen = 0
        self._timer_on = False
        self._timed_end = None        # seq end of the segment being timed
        self._timed_at = 0
        # --- receiver ---
        self.rcv_nxt = 0
        self._ooo: list[list] = []    # [start, end, recency] above rcv_nxt
        self._stamp = 0
        # --- counters ---
        self.segs_sent = 0
        self.rexmit_segs = 0
        self.timeouts = 0
        self.fast_recoveries = 0
        self.protocol_errors = 0
        self.window_drops = 0

    # ------------------------------------------------------------- sending

    def write(self, nbytes: int) -> None:
        """Application hands nbytes to the send buffer."""
        if nbytes <= 0:
            return
        self.app_bytes += nbytes
        self._try_send()

    def _emit(self, rec: SegRecord, retransmission: bool) -> None:
        if retransmission:
            self.rexmit_segs += 1
            if self._timed_end is not None and rec.start < self._timed_end:
                self._timed_end = None  # Karn: sample spoiled by retransmission
        elif self._timed_end is None:
            self._timed_end = rec.end
            self._timed_at = self.sim.now
        self.segs_sent += 1
        if self.trace:
            self.trace((self.sim.now, "rtx" if retransmission else "snd",
                        self.cwnd, self.ssthresh, self.snd_una))
        self.transmit(Segment(self.conn, self.sender_id, rec.start,
                              rec.end - rec.start, None))

    def _try_send(self) -> None:
        """Window-gated transmission from the cursor; whole segments only."""
        if self.in_recovery and self.flavor == SACK:
            self._sack_send()
            return
        p = self.params
        win = min(int(self.cwnd), p.rcv_wnd)
        while True:
            flight = self._cursor - self.snd_una
            if self._cursor < self.snd_nxt:
                rec = self._recs[self._cursor_i]
                if self.flavor == SACK and rec.sacked:
                    self._cursor = rec.end       # already delivered, skip
                    self._cursor_i += 1
                    continue
                size = rec.end - rec.start
                if flight + size > win:
                    return
                self._cursor = rec.end
                self._cursor_i += 1
                self._emit(rec, True)
            else:
                avail = self.app_bytes - self.snd_nxt
                if avail <= 0:
                    return
                size = min(p.mss, avail)
                if flight + size > win:
                    return
                rec = SegRecord(self.snd_nxt, self.snd_nxt + size)
                self._recs.append(rec)
                self.snd_nxt = rec.end
                self._cursor = rec.end
                self._cursor_i = len(self._recs)
                self._emit(rec, False)
            if not self._timer_on:
                self._restart_timer()

    # --------------------------------------------------------- ACK handling

    def _on_ack(self, seg: Segment) -> None:
        ack = seg.ack
        if ack > self.snd_nxt:
            self.protocol_errors += 1
            return
        if self.flavor == SACK and seg.sacks:
            self._apply_sacks(seg.sacks)
        if ack > self.snd_una:
            self._on_new_ack(ack)
        elif ack == self.snd_una and self.snd_nxt > self.snd_una:
            self._on_dupack()
        # acks below snd_una are stale; ignore

    def _on_new_ack(self, ack: int) -> None:
        acked = ack - self.snd_una
        self.snd_una = ack
        recs = self._recs
        b = self._base
        while b < len(recs) and recs[b].end <= ack:
            b += 1
        self._base = b
        if self._cursor < ack:
            self._cursor = ack
            self._cursor_i = b
        elif self._cursor_i < b:
            self._cursor_i = b
        if b > 1024 and b * 2 > len(recs):
            del recs[:b]
            self._cursor_i -= b
            self._base = 0
        self.backoff = 0
        if self._timed_end is not None and ack >= self._timed_end:
            self._rtt_sample(self.sim.now - self._timed_at)
            self._timed_end = None
        p = self.params
        if self.in_recovery:
            if self.flavor == RENO:
                self.cwnd = self.ssthresh          # deflate, episode over
                self._exit_recovery()
            elif self.flavor == NEWRENO:
                if ack >= self.recover:
                    self.cwnd = self.ssthresh
                    self._exit_recovery()
                else:
                    # partial ACK: next hole starts at the new snd_una
                    self._retransmit_head()
                    self.cwnd = max(self.cwnd - acked + p.mss, float(p.mss))
                    self._restart_timer()
            else:  # SACK
                if ack >= self.recover:
                    self.cwnd = self.ssthresh
                    self._exit_recovery()
                else:
                    self._restart_timer()
        else:
            if self.cwnd < self.ssthresh:
                self.cwnd += p.mss                 # slow start
            else:
                self.cwnd += p.mss * p.mss / self.cwnd
        self.dupacks = 0
        if self.snd_una < self.snd_nxt:
            self._restart_timer()
        else:
            self._stop_timer()
        self._try_send()

    def _on_dupack(self) -> None:
        self.dupacks += 1
        flavor = self.flavor
        if flavor == VANILLA:
            return
        p = self.params
        if self.in_recovery:
            if flavor == SACK:
                self._sack_send()
            else:
                self.cwnd += p.mss                 # inflation
                self._try_send()
            return
        if self.dupacks != DUP_THRESH:
            return
        if flavor != RENO and self.snd_una < self.recover:
            return  # newreno/sack: no second fast retransmit for the same window
        # enter fast retransmit / fast recovery
        flight = self.snd_nxt - self.snd_una
        self.ssthresh = float(max(flight // 2, 2 * p.mss))
        self.recover = self.snd_nxt
        self.in_recovery = True
        self.fast_recoveries += 1
        if self.trace:
            self.trace((self.sim.now, "fastrtx", self.cwnd, self.ssthresh, self.snd_una))
        if flavor == SACK:
            self.cwnd = self.ssthresh
            for i in range(self._base, len(self._recs)):
                self._recs[i].rtx = False
            self._sack_send()
        else:
            self._retransmit_head()
            self.cwnd = self.ssthresh + DUP_THRESH * p.mss
            self._try_send()
        self._restart_timer()

    def _exit_recovery(self) -> None:
        self.in_recovery = False
        self.dupacks = 0
        if self.trace:
            self.trace((self.sim.now, "recov_exit", self.cwnd, self.ssthresh, self.snd_una))

    def _retransmit_head(self) -> None:
        if self._base < len(self._recs):
            self._emit(self._recs[self._base], True)

    # ------------------------------------------------------------ SACK path

    def _apply_sacks(self, sacks) -> None:
        recs = self._recs
        n = len(recs)
        for lo, hi in sacks:
            if hi <= self.snd_una or lo >= self.snd_nxt:
                continue
            i = self._base
            while i < n and recs[i].end <= lo:
                i += 1
            while i < n and recs[i].start < hi:
                recs[i].sacked = True
                i += 1

    def _sack_send(self) -> None:
        """Scoreboard pass: mark losses, compute pipe, send while pipe < cwnd."""
        p = self.params
        recs = self._recs
        n = len(recs)
        thresh = DUP_THRESH * p.mss
        suffix = 0
        pipe = 0
        candidates = []
        for i in range(n - 1, self._base - 1, -1):
            r = recs[i]
            size = r.end - r.start
            if r.sacked:
                suffix += size
                continue
            r.lost = suffix >= thresh
            if r.lost:
                if r.rtx:
                    pipe += size
                else:
                    candidates.append(i)
            else:
                pipe += size
        candidates.reverse()
        cwnd_i = int(self.cwnd)
        ci = 0
        while pipe < cwnd_i:
            if ci < len(candidates):
                rec = recs[candidates[ci]]
                ci += 1
                rec.rtx = True
                self._emit(rec, True)
                pipe += rec.end - rec.start
                if not self._timer_on:
                    self._restart_timer()
                continue
            avail = self.app_bytes - self.snd_nxt
            if avail <= 0:
                return
            size = min(p.mss, avail)
            if self.snd_nxt + size - self.snd_una > p.rcv_wnd:
                return
            rec = SegRecord(self.snd_nxt, self.snd_nxt + size)
            recs.append(rec)
            self.snd_nxt = rec.end
            if self._cursor < rec.end:
                self._cursor = rec.end
                self._cursor_i = len(recs)
            self._emit(rec, False)
            pipe += size
            if not self._timer_on:
                self._restart_timer()

    # ------------------------------------------------------------- timeout

    def _rtt_sample(self, sample_ns: int) -> None:
        r = float(sample_ns)
        if self.srtt is None:
            self.srtt = r
            self.rttvar = r / 2.0
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - r)
            self.srtt = 0.875 * self.srtt + 0.125 * r
        p = self.params
        g = p.granularity_ns
        raw = self.srtt + max(g, 4.0 * self.rttvar)
        quantized = -(-int(raw) // g) * g        # round up to the granule
        self.rto_ns = min(max(quantized, p.min_granules * g), p.max_rto_ns)

    def _effective_rto(self) -> int:
        return min(self.rto_ns << self.backoff, self.params.max_rto_ns)

    def _restart_timer(self) -> None:
        self._timer_gen += 1
        self._timer_on = True
        self.sim.schedule(self.sim.now + self._effective_rto(),
                          self._on_timer, self._timer_gen)

    def _stop_timer(self) -> None:
        self._timer_gen += 1
        self._timer_on = False

    def _on_timer(self, gen: int) -> None:
        if gen != self._timer_gen:
            return  # superseded or stopped
        self._timer_on = False
        if self.snd_una >= self.snd_nxt:
            return
        p = self.params
        self.timeouts += 1
        flight = self.snd_nxt - self.snd_una
        self.ssthresh = float(max(flight // 2, 2 * p.mss))
        self.cwnd = float(p.mss)
        if self.backoff < 12:
            self.backoff += 1
        self.in_recovery = False
        self.dupacks = 0
        self.recover = self.snd_nxt
        self._timed_end = None                   # Karn
        self._cursor = self.snd_una              # go-back-N from the hole
        self._cursor_i = self._base
        for i in range(self._base, len(self._recs)):
            self._recs[i].rtx = False
        if self.trace:
            self.trace((self.sim.now, "timeout", self.cwnd, self.ssthresh, self.snd_una))
        self._restart_timer()
        self._try_send()

    # ------------------------------------------------------------ receiving

    def on_frame(self, seg: Segment) -> None:
        """Entry point for every intact frame addressed to this endpoint."""
        if seg.length > 0:
            self._on_data(seg)
        else:
            self._on_ack(seg)

    def _on_data(self, seg: Segment) -> None:
        start, end = seg.seq, seg.seq + seg.length
        if end > self.rcv_nxt + self.params.rcv_wnd:
            self.window_drops += 1
            self._send_ack()
            return
        if end <= self.rcv_nxt:
            self._send_ack(dup_of=None)          # pure duplicate
            return
        if start <= self.rcv_nxt:
            self.rcv_nxt = end
            ooo = self._ooo
            while ooo and ooo[0][0] <= self.rcv_nxt:
                if ooo[0][1] > self.rcv_nxt:
                    self.rcv_nxt = ooo[0][1]
                ooo.pop(0)
            delivered = self.rcv_nxt - start
            if self.app_recv is not None:
                self.app_recv(delivered)
            self._send_ack()
        else:
            self._insert_ooo(start, end)
            self._send_ack(dup_of=(start, end))

    def _insert_ooo(self, start: int, end: int) -> None:
        self._stamp += 1
        ooo = self._ooo
        i = 0
        while i < len(ooo) and ooo[i][1] < start:
            i += 1
        # merge every range overlapping or adjacent to [start, end)
        j = i
        while j < len(ooo) and ooo[j][0] <= end:
            start = min(start, ooo[j][0])
            end = max(end, ooo[j][1])
            j += 1
        ooo[i:j] = [[start, end, self._stamp]]

    def _sack_blocks(self, dup_of) -> tuple:
        if self.flavor != SACK or not self._ooo:
            return ()
        ranges = sorted(self._ooo, key=lambda r: -r[2])
        if dup_of is not None:
            s, e = dup_of
            for k, r in enumerate(ranges):
                if r[0] <= s and e <= r[1]:
                    ranges.insert(0, ranges.pop(k))
                    break
        return tuple((r[0], r[1]) for r in ranges[:3])

    def _send_ack(self, dup_of=None) -> None:
        self.transmit(Segment(self.conn, self.sender_id, 0, 0,
                              self.rcv_nxt, self._sack_blocks(dup_of)))
