"""Deterministic discrete-event core: virtual clock, event queue, named RNG streams.

Time is an integer count of simulated nanoseconds so that event ordering is
exact and runs are bit-reproducible across platforms.  Events fire in strict
(fire_at, sequence) order, where sequence is the schedule order.
"""

from __future__ import annotations

import hashlib
import math
import random
from bisect import bisect_right
from dataclasses import dataclass
from heapq import heappop, heappush

NS_PER_SEC = 1_000_000_000
NS_PER_MS = 1_000_000
NS_PER_US = 1_000


def seconds(t: float | int) -> int:
    """Convert seconds to integer simulation time (ns)."""
    return round(t * NS_PER_SEC)


class SchedulingError(Exception):
    """Raised when an event is scheduled before the current virtual time."""


@dataclass
class RunStats:
    events: int = 0
    cells_forwarded: int = 0
    cells_dropped: int = 0


def derive_seed(master_seed: int, *labels) -> int:
    """Stable 64-bit seed from a master seed and any labels (ints or strings)."""
    text = ":".join([str(master_seed)] + [str(x) for x in labels])
    digest = hashlib.sha256(text.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


class RngStream:
    """One named pseudo-random stream.

    Streams are independent per (seed, stream_id); a given (seed, stream_id,
    draw index) yields the same value on any platform.  Backed by the stdlib
    Mersenne Twister, whose random() output is stable across Python versions.
    """

    def __init__(self, seed: int, stream_id: str):
        self.seed = seed
        self.stream_id = stream_id
        self._rng = random.Random(derive_seed(seed, stream_id))
        self._poisson_cache: dict[tuple[float, int, int], tuple[list[float], int]] = {}

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return self._rng.random()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], derived from one random() draw."""
        if lo > hi:
            raise ValueError(f"randint needs lo <= hi, got {lo}, {hi}")
        v = lo + int(self._rng.random() * (hi - lo + 1))
        return v if v <= hi else hi

    def uniform(self, lo: float, hi: float) -> float:
        """Uniform float in [lo, hi)."""
        if not lo < hi:
            raise ValueError(f"uniform needs lo < hi, got [{lo}, {hi})")
        v = lo + (hi - lo) * self._rng.random()
        if v >= hi:  # guard the closed end against float rounding
            v = math.nextafter(hi, lo)
        return v

    def truncated_poisson(self, mean: float, lo: int, hi: int) -> int:
        """Poisson-shaped integer on [lo, hi] whose truncated mean equals `mean`.

        The underlying rate is calibrated so that the distribution restricted
        to [lo, hi] has expectation exactly `mean` (plain conditioning at
        rate=mean would bias the mean low whenever the upper tail is cut).
        Sampling is by inversion over the truncated support: one uniform per
        draw, identical in law to rejection resampling of out-of-range values.
        """
        if not lo <= mean <= hi:
            raise ValueError(f"need lo <= mean <= hi, got {lo}, {mean}, {hi}")
        if lo == hi:
            return lo
        if mean == lo:
            return lo
        if mean == hi:
            return hi
        key = (mean, lo, hi)
        entry = self._poisson_cache.get(key)
        if entry is None:
            lam = _calibrate_rate(mean, lo, hi)
            cdf = _truncated_cdf(lam, lo, hi)
            entry = (cdf, lo)
            self._poisson_cache[key] = entry
        cdf, base = entry
        u = self._rng.random()
        return base + bisect_right(cdf, u * cdf[-1])


def _poisson_weights(lam: float, lo: int, hi: int) -> list[float]:
    # unnormalized lam^k / k!, built iteratively to dodge overflow
    w = 1.0
    for k in range(1, lo + 1):
        w *= lam / k
    out = [w]
    for k in range(lo + 1, hi + 1):
        w *= lam / k
        out.append(w)
    return out


def truncated_poisson_mean(lam: float, lo: int, hi: int) -> float:
    """Expectation of Poisson(lam) conditioned on lo <= k <= hi."""
    w = _poisson_weights(lam, lo, hi)
    total = sum(w)
    return sum(k * wk for k, wk in zip(range(lo, hi + 1), w)) / total


def _calibrate_rate(mean: float, lo: int, hi: int) -> float:
    # conditional mean is monotone in the rate; bisect to the target
    a, b = 1e-12, 4.0 * hi + 64.0
    for _ in range(200):
        m = 0.5 * (a + b)
        if truncated_poisson_mean(m, lo, hi) < mean:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _truncated_cdf(lam: float, lo: int, hi: int) -> list[float]:
    cdf = []
    acc = 0.0
    for w in _poisson_weights(lam, lo, hi):
        acc += w
        cdf.append(acc)
    return cdf


class Simulator:
    """Virtual clock plus a (fire_at, sequence)-ordered event queue."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._now = 0
        self._seq = 0
        self._heap: list = []
        self._streams: dict[str, RngStream] = {}
        self._ports: list = []
        self.events_processed = 0

    @property
    def now(self) -> int:
        return self._now

    def stream(self, stream_id: str) -> RngStream:
        """Named RNG stream derived from this simulator's seed."""
        s = self._streams.get(stream_id)
        if s is None:
            s = RngStream(self.seed, stream_id)
            self._streams[stream_id] = s
        return s

    def schedule(self, at: int, fn, arg=None) -> None:
        """Schedule fn(arg) at virtual time `at` (ns).  Past times are fatal."""
        if at < self._now:
            raise SchedulingError(f"schedule at t={at} ns before now={self._now} ns")
        heappush(self._heap, (at, self._seq, fn, arg))
        self._seq += 1

    def register_port(self, port) -> None:
        """Ports registered here feed the cell counters in RunStats."""
        self._ports.append(port)

    def run_until(self, end: int) -> RunStats:
        """Process every event with fire_at <= end; clock finishes at `end`."""
        heap = self._heap
        n = 0
        while heap:
            t, _, fn, arg = heap[0]
            if t > end:
                break
            heappop(heap)
            self._now = t
            fn(arg)
            n += 1
        self.events_processed += n
        if end > self._now:
            self._now = end
        fwd = sum(p.cells_out for p in self._ports)
        drop = sum(p.cells_dropped for p in self._ports)
        return RunStats(self.events_processed, fwd, drop)
