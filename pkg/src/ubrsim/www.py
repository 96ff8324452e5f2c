"""WWW request/response workload riding on the TCP endpoints.

Each client issues batches of HTTP-like transactions: every `batch_period_s`
it draws a batch size from a truncated Poisson (1..9 requests, mean 5) and
spaces the requests uniformly within [gap_min_s, gap_max_s).  A request is a
fixed 128-byte upload; the server answers each complete request with one
response whose size is drawn from a two-stage distribution: a document class
(100 B .. 1 MB base, heavily skewed toward small documents) times a uniform
multiplier 1..9.  The resulting mean response is 117.5 KB.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from itertools import accumulate

from .kernel import NS_PER_SEC, RngStream, Simulator
from .tcp import TcpEndpoint

CLASS_BASES = (100, 1_000, 10_000, 100_000, 1_000_000)
CLASS_FREQS = (0.20, 0.28, 0.40, 0.112, 0.008)

BATCH_MIN = 1
BATCH_MAX = 9
BATCH_MEAN = 5.0


@dataclass(frozen=True)
class TrafficParams:
    request_bytes: int = 128
    batch_period_s: float = 10.0
    gap_min_s: float = 0.1
    gap_max_s: float = 0.5
    class_bases: tuple = CLASS_BASES
    class_freqs: tuple = CLASS_FREQS

    def __post_init__(self):
        if len(self.class_bases) != len(self.class_freqs):
            raise ValueError("class_bases and class_freqs lengths differ")
        if abs(sum(self.class_freqs) - 1.0) > 1e-9:
            raise ValueError("class frequencies must sum to 1")

    @property
    def class_cum(self) -> tuple:
        return tuple(accumulate(self.class_freqs))

    def mean_response_bytes(self) -> float:
        mult = (1 + 9) / 2.0
        return mult * sum(b * f for b, f in zip(self.class_bases, self.class_freqs))


def classify(u: float, class_cum) -> int:
    """Map a uniform [0,1) draw to a document class index."""
    return min(bisect_right(class_cum, u), len(class_cum) - 1)


def draw_response_bytes(size_rng: RngStream, params: TrafficParams) -> int:
    """One response size: class base (by frequency) times a uniform 1..9 index."""
    cls = classify(size_rng.random(), params.class_cum)
    index = size_rng.randint(1, 9)
    return params.class_bases[cls] * index


class ClientApp:
    """Issues request batches and tallies the bytes received in responses."""

    def __init__(self, sim: Simulator, tcp: TcpEndpoint, params: TrafficParams,
                 count_rng: RngStream, gap_rng: RngStream, duration_ns: int):
        self.sim = sim
        self.tcp = tcp
        self.params = params
        self.count_rng = count_rng
        self.gap_rng = gap_rng
        self.duration_ns = duration_ns
        self.requests_sent = 0
        self.bytes_received = 0
        tcp.app_recv = self._on_bytes
        sim.schedule(0, self._batch, None)

    def _batch(self, _):
        p = self.params
        n = self.count_rng.truncated_poisson(BATCH_MEAN, BATCH_MIN, BATCH_MAX)
        base = self.sim.now
        for _ in range(n):
            gap = self.gap_rng.uniform(p.gap_min_s, p.gap_max_s)
            at = base + round(gap * NS_PER_SEC)
            if at < self.duration_ns:
                self.sim.schedule(at, self._send_request, None)
        nxt = base + round(p.batch_period_s * NS_PER_SEC)
        if nxt < self.duration_ns:
            self.sim.schedule(nxt, self._batch, None)

    def _send_request(self, _):
        self.requests_sent += 1
        self.tcp.write(self.params.request_bytes)

    def _on_bytes(self, n: int):
        self.bytes_received += n


class ServerApp:
    """Answers each complete 128-byte request with one drawn response."""

    def __init__(self, tcp: TcpEndpoint, params: TrafficParams, size_rng: RngStream):
        self.tcp = tcp
        self.params = params
        self.size_rng = size_rng
        self.responses_sent = 0
        self.response_bytes = 0
        self._pending = 0
        tcp.app_recv = self._on_bytes

    def _on_bytes(self, n: int):
        self._pending += n
        req = self.params.request_bytes
        while self._pending >= req:
            self._pending -= req
            size = draw_response_bytes(self.size_rng, self.params)
            self.responses_sent += 1
            self.response_bytes += size
            self.tcp.write(size)


def offered_load_bps(master_seed: int, clients: int, duration_s: float,
                     params: TrafficParams | None = None) -> float:
    """Generation-only estimate: mean response bytes scheduled per second.

    Replays the batch and size draws without any network, so it measures the
    workload the clients would offer to an unconstrained path.  Stream ids
    match the ones the simulator uses, so the draws line up run for run.
    """
    params = params or TrafficParams()
    total = 0
    horizon = round(duration_s * NS_PER_SEC)
    for c in range(clients):
        count_rng = RngStream(master_seed, f"request-count:{c}")
        size_rng = RngStream(master_seed, f"file-size:{c}")
        t = 0
        while t < horizon:
            n = count_rng.truncated_poisson(BATCH_MEAN, BATCH_MIN, BATCH_MAX)
            for _ in range(n):
                total += draw_response_bytes(size_rng, params)
            t += round(params.batch_period_s * NS_PER_SEC)
    return total * 8.0 / duration_s
