"""Deterministic discrete-event core: virtual clock, ordered event queue, seeded RNG substreams."""

from __future__ import annotations

import hashlib
import heapq
import random

US_PER_S = 1_000_000


def usec(seconds: float) -> int:
    """Convert seconds to the integer-microsecond clock used internally."""
    return round(seconds * US_PER_S)


def sec(us: int) -> float:
    return us / US_PER_S


class SchedulingError(Exception):
    """Raised when an event is scheduled behind the virtual clock (engine bug)."""


class EventHandle:
    __slots__ = ("time_us", "seq", "kind", "target", "fn", "args", "cancelled", "housekeeping")

    def __init__(self, time_us, seq, kind, target, fn, args, housekeeping):
        self.time_us = time_us
        self.seq = seq
        self.kind = kind
        self.target = target
        self.fn = fn
        self.args = args
        self.cancelled = False
        self.housekeeping = housekeeping


class SimEngine:
    """Single-threaded event loop over integer-microsecond times.

    Events fire in (time, insertion index) order; ties are broken by
    insertion so that identical schedules replay identically. Housekeeping
    events (periodic channel resampling) keep firing but do not keep the
    loop alive on their own.
    """

    def __init__(self, trace: list[str] | None = None):
        self.now = 0
        self.trace = trace
        self.processed = 0
        self._heap: list[tuple[int, int, EventHandle]] = []
        self._seq = 0
        self._live = 0

    def schedule_at(self, time_us: int, kind: str, target, fn, *args,
                    housekeeping: bool = False) -> EventHandle:
        if time_us < self.now:
            raise SchedulingError(
                f"cannot schedule {kind!r} at t={time_us}us behind clock t={self.now}us")
        handle = EventHandle(time_us, self._seq, kind, target, fn, args, housekeeping)
        self._seq += 1
        if not housekeeping:
            self._live += 1
        heapq.heappush(self._heap, (time_us, handle.seq, handle))
        return handle

    def schedule_in(self, delay_us: int, kind: str, target, fn, *args,
                    housekeeping: bool = False) -> EventHandle:
        return self.schedule_at(self.now + delay_us, kind, target, fn, *args,
                                housekeeping=housekeeping)

    def cancel(self, handle: EventHandle) -> None:
        if not handle.cancelled:
            handle.cancelled = True
            if not handle.housekeeping:
                self._live -= 1

    def _dispatch(self, handle: EventHandle) -> None:
        assert handle.time_us >= self.now, "event popped out of order"
        self.now = handle.time_us
        self.processed += 1
        if not handle.housekeeping:
            self._live -= 1
        if self.trace is not None:
            self.trace.append(f"{handle.time_us} {handle.kind} {handle.target}")
        handle.fn(*handle.args)

    def run_until(self, t_end_us: int) -> int:
        """Process every event with fire time <= t_end_us; return the clock.

        The clock ends at the last processed event (or stays put if nothing
        fired), never jumping ahead to t_end_us.
        """
        heap = self._heap
        while heap and heap[0][0] <= t_end_us:
            _, _, handle = heapq.heappop(heap)
            if handle.cancelled:
                continue
            self._dispatch(handle)
        return self.now

    def run_to_quiescence(self, cap_us: int) -> tuple[int, bool]:
        """Run until no live (non-housekeeping) events remain, or the cap is hit.

        Returns (clock, quiesced). Housekeeping events pending at quiescence
        are simply abandoned.
        """
        heap = self._heap
        while heap and self._live > 0:
            if heap[0][0] > cap_us:
                return self.now, False
            _, _, handle = heapq.heappop(heap)
            if handle.cancelled:
                continue
            self._dispatch(handle)
        return self.now, True

    @property
    def pending_live(self) -> int:
        return self._live


class RngManager:
    """Seeded, named RNG substreams.

    Streams are derived from (seed, tags) through SHA-256, so distinct
    purposes (channel sampling, per-node MAC backoff, per-node strategy
    draws) never share state and one consumer drawing more or fewer values
    cannot perturb another stream's sequence.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[tuple, random.Random] = {}

    def stream(self, *tags) -> random.Random:
        key = tags
        rng = self._streams.get(key)
        if rng is None:
            material = repr((self.seed,) + tags).encode()
            derived = int.from_bytes(hashlib.sha256(material).digest()[:8], "big")
            rng = random.Random(derived)
            self._streams[key] = rng
        return rng


def draw_uniform01(rng: random.Random) -> float:
    return rng.random()


def draw_normal(rng: random.Random, mean: float, sigma: float) -> float:
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return mean
    return rng.gauss(mean, sigma)


def draw_uniform_int(rng: random.Random, n: int) -> int:
    """Uniform draw from {0, ..., n-1}."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return rng.randrange(n)


def draw_bernoulli(rng: random.Random, p: float) -> bool:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    return rng.random() < p
