"""Wires engine, channel, MAC, strategy and metrics into one seeded run."""

from __future__ import annotations

from dataclasses import dataclass, field

from .channel import Channel, ChannelConfig, NodeSite, Posture, SINK, SITES
from .engine import RngManager, SimEngine, usec
from .mac import Frame, MacParams, NodeMac, describe
from .metrics import RunRecord
from .strategies import (BroadcastMessage, NodeProtocolState, SendAck, SendHello,
                         SendMessage, StartTimer, make_strategy)

HELLO_BASE_BITS = 32
HELLO_ENTRY_BITS = 16
ACK_BITS = 32


@dataclass(frozen=True)
class StrategyParams:
    """Tunables of the nine strategies; unused fields are ignored."""

    k: int = 3
    p: float = 0.5
    hello_interval_s: float = 0.5
    delta: int = 2
    timer_s: float = 0.05
    quota: int = 1


@dataclass(frozen=True)
class RunConfig:
    """Everything one seeded run needs, independent of sweep bookkeeping."""

    strategy: str
    posture: Posture
    channel: ChannelConfig
    seed: int
    ttl: int = 8
    params: StrategyParams = field(default_factory=StrategyParams)
    mac: MacParams = field(default_factory=MacParams)
    queue_capacity: int = 100
    payload_bits: int = 512
    source_mode: str = "single"      # "single" | "rate"
    rate_pps: float = 10.0
    packets: int = 1
    duration_s: float = 30.0


def inter_packet_gap_us(rate_pps: float) -> int:
    if rate_pps <= 0:
        raise ValueError("packet rate must be > 0")
    return usec(1.0 / rate_pps)


class Simulation:
    """One run: 7 nodes, one strategy, one posture, one seed."""

    def __init__(self, cfg: RunConfig, trace: bool = False, record_frames: bool = False):
        self.cfg = cfg
        self.trace: list[str] | None = [] if trace else None
        self.frames_sent: list[tuple[int, Frame]] | None = [] if record_frames else None
        self.rngs = RngManager(cfg.seed)
        self.engine = SimEngine()
        self.record = RunRecord()
        self.channel = Channel(cfg.channel, cfg.posture, self.engine,
                               self.rngs.stream("channel"), trace=self.trace)
        self.strategy = make_strategy(cfg.strategy, cfg.params)
        self.states = {s: NodeProtocolState() for s in SITES}
        self.macs = {
            s: NodeMac(s, cfg.mac, cfg.queue_capacity, self.engine, self.channel,
                       self.rngs.stream("mac", int(s)), self._deliver, self.record,
                       trace=self.trace)
            for s in SITES
        }
        self._next_seq = 0
        self._setup()

    # -- construction ----------------------------------------------------------

    def _setup(self) -> None:
        # the application source comes first so the first trace line is its due
        if self.cfg.source_mode == "single":
            self.engine.schedule_at(0, "app_due", SINK.label, self._originate)
        elif self.cfg.source_mode == "rate":
            self.engine.schedule_at(0, "app_due", SINK.label, self._rate_tick)
        else:
            raise ValueError(f"unknown source mode {self.cfg.source_mode!r}")
        self.channel.start()
        if self.strategy.uses_hello:
            interval = usec(self.strategy.hello_interval_s)
            for site in SITES:
                jitter = self.rngs.stream("strategy", int(site)).randrange(interval)
                self.engine.schedule_at(jitter, "hello_due", site.label,
                                        self._hello_due, site)

    # -- application source ------------------------------------------------------

    def _originate(self) -> None:
        seq = self._next_seq
        self._next_seq += 1
        msg = BroadcastMessage(origin=SINK, seq=seq, ttl=self.cfg.ttl, hops=1,
                               payload_bits=self.cfg.payload_bits)
        now = self.engine.now
        self.record.note_originate(msg, now)
        if self.trace is not None:
            self.trace.append(f"t={now / 1e6:.6f} {SINK.label} app-send #{seq}")
        rng = self.rngs.stream("strategy", int(SINK))
        actions = self.strategy.on_originate(self.states[SINK], SINK, msg, rng)
        self._apply(SINK, actions)

    def _rate_tick(self) -> None:
        self._originate()
        if self._next_seq < self.cfg.packets:
            self.engine.schedule_in(inter_packet_gap_us(self.cfg.rate_pps), "app_due",
                                    SINK.label, self._rate_tick)

    # -- event plumbing ----------------------------------------------------------

    def _hello_due(self, site: NodeSite) -> None:
        actions = self.strategy.on_hello_due(self.states[site], site, self.engine.now)
        self._apply(site, actions)
        self.engine.schedule_in(usec(self.strategy.hello_interval_s), "hello_due",
                                site.label, self._hello_due, site)

    def _timer_fired(self, site: NodeSite, msg_key) -> None:
        actions = self.strategy.on_timer(self.states[site], site, msg_key,
                                         self.engine.now)
        self._apply(site, actions)

    def _deliver(self, receiver: NodeSite, frame: Frame, now_us: int) -> None:
        self.record.note_rx(receiver, frame)
        if frame.mac_dest is not None and frame.mac_dest != receiver:
            return      # address-filtered below the application
        st = self.states[receiver]
        if frame.kind == "data":
            msg = frame.msg
            if receiver != msg.origin:
                self.record.note_first_rx(receiver, msg, now_us)
            rng = self.rngs.stream("strategy", int(receiver))
            actions = self.strategy.on_data(st, receiver, msg, frame.sender, rng, now_us)
        elif frame.kind == "hello":
            actions = self.strategy.on_hello(st, receiver, frame.sender,
                                             frame.payload, now_us)
        elif frame.kind == "ack":
            actions = self.strategy.on_ack(st, receiver, frame.payload,
                                           frame.sender, now_us)
        else:
            raise AssertionError(f"unknown frame kind {frame.kind!r}")
        self._apply(receiver, actions)

    def _apply(self, site: NodeSite, actions) -> None:
        for action in actions:
            if isinstance(action, SendMessage):
                msg = action.msg
                assert msg.ttl >= 1, "transmit queue must never see ttl < 1"
                frame = Frame(kind="data", sender=site,
                              payload_bits=msg.payload_bits + self.strategy.extra_state_bits,
                              mac_dest=action.mac_dest, msg=msg)
            elif isinstance(action, SendAck):
                frame = Frame(kind="ack", sender=site, payload_bits=ACK_BITS,
                              mac_dest=action.to, payload=action.msg_key)
            elif isinstance(action, SendHello):
                bits = HELLO_BASE_BITS + HELLO_ENTRY_BITS * len(action.entries)
                frame = Frame(kind="hello", sender=site, payload_bits=bits,
                              mac_dest=None, payload=action.entries)
            elif isinstance(action, StartTimer):
                self.engine.schedule_in(action.delay_us, "timer", site.label,
                                        self._timer_fired, site, action.msg_key)
                continue
            else:
                raise AssertionError(f"unknown action {action!r}")
            if self.frames_sent is not None:
                self.frames_sent.append((self.engine.now, frame))
            self.macs[site].enqueue(frame)

    # -- run --------------------------------------------------------------------

    def run(self) -> RunRecord:
        cap = usec(self.cfg.duration_s)
        _, self.quiesced = self.engine.run_to_quiescence(cap)
        self._check_conservation()
        return self.record

    def _check_conservation(self) -> None:
        for site, mac in self.macs.items():
            accepted = mac.offered - mac.queue_drops
            resolved = mac.sent + mac.csma_drops + len(mac.queue)
            assert accepted == resolved, (
                f"{site.label}: accepted {accepted} != sent {mac.sent} "
                f"+ csma {mac.csma_drops} + queued {len(mac.queue)}")
        tx_recorded = self.record.tx_total()
        tx_sent = sum(m.sent for m in self.macs.values()) + sum(
            1 for m in self.macs.values() if m.transmitting)
        assert tx_recorded == tx_sent, "metrics tx count diverged from MAC tx starts"


def replay_trace(cfg: RunConfig) -> list[str]:
    """Full human-readable event trace of one run; identical across invocations."""
    sim = Simulation(cfg, trace=True)
    sim.run()
    header = [
        f"# strategy={cfg.strategy} posture={cfg.posture.value} seed={cfg.seed} "
        f"ttl={cfg.ttl} mode={cfg.source_mode}",
    ]
    return header + sim.trace
