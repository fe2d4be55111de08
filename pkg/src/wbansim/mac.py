"""Unslotted CSMA/CA MAC with a bounded drop-tail FIFO; broadcast frames, no ACKs or retries."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from .channel import Channel, NodeSite, Outcome
from .engine import SimEngine, US_PER_S, draw_uniform_int


@dataclass(frozen=True)
class MacParams:
    """802.15.4 default contention parameters and frame overhead."""

    min_be: int = 3
    max_be: int = 5
    max_csma_backoffs: int = 4
    backoff_unit_us: int = 320
    data_rate_bps: int = 250_000
    header_bits: int = 136

    def __post_init__(self):
        if self.min_be > self.max_be:
            raise ValueError("min_be must be <= max_be")

    def airtime_us(self, payload_bits: int) -> int:
        return round((self.header_bits + payload_bits) * US_PER_S / self.data_rate_bps)


@dataclass(frozen=True)
class Frame:
    """One MAC frame; mac_dest None means link-layer broadcast."""

    kind: str                      # "data" | "hello" | "ack"
    sender: NodeSite
    payload_bits: int
    mac_dest: NodeSite | None = None
    msg: object = None             # BroadcastMessage for data frames
    payload: object = None         # strategy control payload


class NodeMac:
    """Per-node transmit queue plus unslotted CSMA/CA state machine.

    Head-of-queue frames go through binary exponential backoff with clear
    channel assessment; a frame stays queued until its transmission
    completes, so an in-flight frame still occupies a queue slot. Enqueues
    on a full queue drop the new frame (drop tail). After the configured
    number of busy CCAs the head frame is discarded (channel access
    failure). Completion chains straight into CSMA for the next frame with
    a fresh backoff exponent.
    """

    def __init__(self, site: NodeSite, params: MacParams, capacity: int,
                 engine: SimEngine, channel: Channel, rng: random.Random,
                 deliver, metrics, trace: list[str] | None = None):
        if capacity < 1:
            raise ValueError("queue capacity must be >= 1")
        self.site = site
        self.params = params
        self.capacity = capacity
        self.engine = engine
        self.channel = channel
        self.rng = rng
        self.deliver = deliver      # callback(receiver, frame, now_us)
        self.metrics = metrics
        self.trace = trace
        self.queue: deque[Frame] = deque()
        self.busy = False           # head frame owns a backoff/CCA/tx sequence
        self.transmitting = False
        self._be = params.min_be
        self._busy_ccas = 0
        # conservation counters, checked at end of run
        self.offered = 0
        self.sent = 0
        self.queue_drops = 0
        self.csma_drops = 0

    def enqueue(self, frame: Frame) -> bool:
        self.offered += 1
        if len(self.queue) >= self.capacity:
            self.queue_drops += 1
            self.metrics.note_drop_queue(self.site)
            if self.trace is not None:
                self.trace.append(f"t={self.engine.now / 1e6:.6f} {self.site.label} "
                                  f"drop-queue {describe(frame)}")
            return False
        self.queue.append(frame)
        if not self.busy:
            self._begin_csma()
        return True

    def _begin_csma(self) -> None:
        self.busy = True
        self._be = self.params.min_be
        self._busy_ccas = 0
        self._backoff()

    def _backoff(self) -> None:
        slots = draw_uniform_int(self.rng, 2 ** self._be)
        delay = slots * self.params.backoff_unit_us
        self.engine.schedule_in(delay, "cca", self.site.label, self._cca)

    def _cca(self) -> None:
        if self.channel.carrier_busy(self.site):
            self._busy_ccas += 1
            if self._busy_ccas >= self.params.max_csma_backoffs:
                frame = self.queue.popleft()
                self.csma_drops += 1
                self.metrics.note_drop_csma(self.site)
                if self.trace is not None:
                    self.trace.append(f"t={self.engine.now / 1e6:.6f} {self.site.label} "
                                      f"drop-csma {describe(frame)}")
                if self.queue:
                    self._begin_csma()
                else:
                    self.busy = False
                return
            self._be = min(self._be + 1, self.params.max_be)
            self._backoff()
            return
        self._tx_start()

    def _tx_start(self) -> None:
        frame = self.queue[0]
        airtime = self.params.airtime_us(frame.payload_bits)
        rec = self.channel.begin_tx(self.site, frame, airtime)
        self.transmitting = True
        self.metrics.note_tx(self.site, frame, self.engine.now)
        if self.trace is not None:
            self.trace.append(f"t={self.engine.now / 1e6:.6f} {self.site.label} "
                              f"tx-start {describe(frame)}")
        self.engine.schedule_in(airtime, "tx_end", self.site.label, self._tx_end, rec)

    def _tx_end(self, rec) -> None:
        self.transmitting = False
        self.sent += 1
        self.queue.popleft()
        now = self.engine.now
        for receiver, outcome in self.channel.end_tx(rec):
            if self.trace is not None:
                self.trace.append(f"t={now / 1e6:.6f} {receiver.label} "
                                  f"{outcome.value} {describe(rec.frame)}")
            if outcome is Outcome.RECEIVED:
                self.deliver(receiver, rec.frame, now)
        if self.queue:
            self._begin_csma()
        else:
            self.busy = False


def describe(frame: Frame) -> str:
    if frame.kind == "data":
        m = frame.msg
        dest = f" to={frame.mac_dest.label}" if frame.mac_dest is not None else ""
        return (f"data {m.origin.label}#{m.seq} ttl={m.ttl} hops={m.hops}"
                f"{dest} from={frame.sender.label}")
    dest = f" to={frame.mac_dest.label}" if frame.mac_dest is not None else ""
    return f"{frame.kind}{dest} from={frame.sender.label}"
