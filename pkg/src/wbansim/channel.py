"""Posture-dependent stochastic on-body link model with collisions and carrier sensing."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field

from .engine import SimEngine, draw_normal, usec


class NodeSite(enum.IntEnum):
    """Body placement of the seven nodes; the chest node is the sink."""

    HEAD = 0
    CHEST = 1
    UPPER_ARM = 2
    WRIST = 3
    NAVEL = 4
    THIGH = 5
    ANKLE = 6

    @property
    def label(self) -> str:
        return self.name.lower()


SINK = NodeSite.CHEST
SITES = tuple(NodeSite)
SITE_BY_LABEL = {s.label: s for s in SITES}


class Posture(str, enum.Enum):
    WALK = "walk"
    WEAK = "weak"
    RUN = "run"
    SIT = "sit"
    WEAR = "wear"
    SLEEP = "sleep"
    LIE = "lie"


POSTURES = tuple(Posture)


@dataclass(frozen=True)
class LinkStats:
    """Gaussian attenuation statistics (dB) for one unordered node pair."""

    mean_db: float
    std_db: float

    def __post_init__(self):
        if self.std_db < 0:
            raise ValueError(f"std_db must be >= 0, got {self.std_db}")


def pair_key(a: NodeSite, b: NodeSite) -> tuple[NodeSite, NodeSite]:
    return (a, b) if a < b else (b, a)


ALL_PAIRS = tuple(pair_key(a, b) for i, a in enumerate(SITES) for b in SITES[i + 1:])


@dataclass
class ChannelConfig:
    """Per-posture pairwise link statistics plus radio constants."""

    matrices: dict[Posture, dict[tuple[NodeSite, NodeSite], LinkStats]]
    coherence_interval_s: float = 0.1
    tx_power_dbm: float = -60.0
    sensitivity_dbm: float = -100.0

    def stats(self, posture: Posture, a: NodeSite, b: NodeSite) -> LinkStats:
        if a == b:
            raise ValueError("no link statistics for a node with itself")
        try:
            return self.matrices[posture][pair_key(a, b)]
        except KeyError:
            raise ConfigError(f"missing link stats for {a.label}-{b.label} in {posture.value}")

    def check(self) -> None:
        for posture in POSTURES:
            if posture not in self.matrices:
                raise ConfigError(f"missing posture block {posture.value!r}")
            table = self.matrices[posture]
            for pair in ALL_PAIRS:
                if pair not in table:
                    a, b = pair
                    raise ConfigError(
                        f"{posture.value}: missing link stats for {a.label}-{b.label}")
        if self.coherence_interval_s <= 0:
            raise ConfigError("coherence_interval must be > 0")


class ConfigError(Exception):
    """Bad channel or scenario configuration, detected at load time."""


def link_margin(tx_power_dbm: float, attenuation_db: float, sensitivity_dbm: float) -> float:
    """Link margin in dB; a frame is receivable iff the margin is >= 0."""
    return tx_power_dbm - attenuation_db - sensitivity_dbm


class Outcome(enum.Enum):
    RECEIVED = "received"
    COLLISION = "collision"
    OUT_OF_RANGE = "out_of_range"


class TxRecord:
    __slots__ = ("sender", "frame", "start_us", "end_us", "aud_all", "aud_any", "done")

    def __init__(self, sender, frame, start_us, end_us):
        self.sender = sender
        self.frame = frame
        self.start_us = start_us
        self.end_us = end_us
        self.aud_all: dict[NodeSite, bool] = {}
        self.aud_any: dict[NodeSite, bool] = {}
        self.done = False

    def overlaps(self, other: "TxRecord") -> bool:
        return self.start_us < other.end_us and other.start_us < self.end_us


class Channel:
    """One simulation run's radio medium.

    Attenuations are sampled per pair from the posture's Gaussian statistics
    and held fixed for a coherence interval, then resampled (slow shadowing).
    A frame is received iff its margin stayed non-negative for the whole
    airtime and no other audible transmission overlapped it at the receiver;
    there is no capture. A node's own transmission counts as an audible
    overlap, which loses frames arriving while it transmits (half duplex).
    """

    def __init__(self, config: ChannelConfig, posture: Posture, engine: SimEngine,
                 rng: random.Random, trace: list[str] | None = None):
        self.config = config
        self.posture = posture
        self.engine = engine
        self.rng = rng
        self.trace = trace
        self._atten: dict[tuple[NodeSite, NodeSite], float] = {}
        self._txs: list[TxRecord] = []
        self._sample_all()

    # -- attenuation sampling ------------------------------------------------

    def _sample_all(self) -> None:
        for pair in ALL_PAIRS:
            st = self.config.stats(self.posture, *pair)
            value = draw_normal(self.rng, st.mean_db, st.std_db)
            self._atten[pair] = max(0.0, value)

    def start(self) -> None:
        """Arm periodic resampling; the initial sample was drawn at build time."""
        self._schedule_resample()

    def _schedule_resample(self) -> None:
        self.engine.schedule_in(usec(self.config.coherence_interval_s), "resample",
                                "channel", self._resample, housekeeping=True)

    def _resample(self) -> None:
        self._sample_all()
        # in-flight frames see the new shadowing state immediately
        for rec in self._txs:
            if not rec.done:
                self._update_audibility(rec)
        if self.trace is not None:
            self.trace.append(f"t={self.engine.now / 1e6:.6f} channel resample")
        self._schedule_resample()

    def attenuation(self, a: NodeSite, b: NodeSite) -> float:
        """Current cached attenuation for the pair; constant within a coherence interval."""
        return self._atten[pair_key(a, b)]

    def margin(self, a: NodeSite, b: NodeSite) -> float:
        return link_margin(self.config.tx_power_dbm, self.attenuation(a, b),
                           self.config.sensitivity_dbm)

    def audible(self, a: NodeSite, b: NodeSite) -> bool:
        return self.margin(a, b) >= 0.0

    # -- medium state ---------------------------------------------------------

    def carrier_busy(self, site: NodeSite) -> bool:
        """True iff some in-flight frame is currently audible at this node."""
        for rec in self._txs:
            if rec.done or rec.sender == site:
                continue
            if self.audible(rec.sender, site):
                return True
        return False

    def _update_audibility(self, rec: TxRecord) -> None:
        for site in SITES:
            if site == rec.sender:
                continue
            if self.audible(rec.sender, site):
                rec.aud_any[site] = True
            else:
                rec.aud_all[site] = False

    def begin_tx(self, sender: NodeSite, frame, airtime_us: int) -> TxRecord:
        now = self.engine.now
        rec = TxRecord(sender, frame, now, now + airtime_us)
        for site in SITES:
            if site == sender:
                continue
            aud = self.audible(sender, site)
            rec.aud_all[site] = aud
            rec.aud_any[site] = aud
        self._txs.append(rec)
        return rec

    def end_tx(self, rec: TxRecord) -> list[tuple[NodeSite, Outcome]]:
        """Resolve per-receiver outcomes for a frame whose airtime just ended."""
        rec.done = True
        outcomes = []
        for site in SITES:
            if site == rec.sender:
                continue
            outcomes.append((site, self._outcome_at(rec, site)))
        self._prune()
        return outcomes

    def _outcome_at(self, rec: TxRecord, site: NodeSite) -> Outcome:
        if not rec.aud_all[site]:
            return Outcome.OUT_OF_RANGE
        for other in self._txs:
            if other is rec or not other.overlaps(rec):
                continue
            if other.sender == site or other.aud_any.get(site, False):
                return Outcome.COLLISION
        return Outcome.RECEIVED

    def _prune(self) -> None:
        active_starts = [r.start_us for r in self._txs if not r.done]
        if not active_starts:
            if any(r.done for r in self._txs):
                self._txs = [r for r in self._txs if not r.done]
            return
        horizon = min(active_starts)
        self._txs = [r for r in self._txs if not r.done or r.end_us > horizon]
