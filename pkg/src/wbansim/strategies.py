"""The nine broadcast forwarding policies as pure state machines.

Each strategy consumes receive/timer/hello events against a per-node
protocol state and returns a list of actions (send a message copy, send a
control frame, arm a timer); the simulation layer turns actions into MAC
enqueues and engine timers. All randomness comes in through the caller's
RNG stream, so decisions replay exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

from .channel import SINK, SITES, NodeSite
from .engine import draw_uniform01

N_NODES = len(SITES)

# neighbor-count thresholds by body site: demanding at the central sink,
# permissive at the extremities that rarely see uncovered peers
NEIGHBOR_THRESHOLD = {
    NodeSite.CHEST: 3,
    NodeSite.HEAD: 1,
    NodeSite.ANKLE: 1,
    NodeSite.WRIST: 1,
    NodeSite.UPPER_ARM: 2,
    NodeSite.NAVEL: 2,
    NodeSite.THIGH: 2,
}


@dataclass(frozen=True)
class BroadcastMessage:
    """One copy of a disseminated packet as it sits in a frame.

    hops counts MAC transmissions undergone since the sink, including the
    one that delivered this copy; contributors is the coverage tally
    carried by optflood copies; covered is tabu's per-copy coverage map;
    dest is the addressed forwarder for pruned copies.
    """

    origin: NodeSite
    seq: int
    ttl: int
    hops: int
    payload_bits: int
    contributors: frozenset[NodeSite] = frozenset()
    covered: frozenset[NodeSite] = frozenset()
    dest: NodeSite | None = None

    @property
    def key(self) -> tuple[NodeSite, int]:
        return (self.origin, self.seq)


def forwarded(msg: BroadcastMessage, **changes) -> BroadcastMessage:
    """A copy as it will leave the forwarding node: one less TTL, one more hop."""
    assert msg.ttl > 1, "never forward at ttl <= 1"
    return replace(msg, ttl=msg.ttl - 1, hops=msg.hops + 1, **changes)


@dataclass
class NodeProtocolState:
    """Per-node strategy memory shared across the nine policies."""

    seen: set = field(default_factory=set)
    rx_count: dict = field(default_factory=dict)        # msg key -> receptions so far
    cpt_local: dict = field(default_factory=dict)       # msg key -> freshest tally seen
    of_done: set = field(default_factory=set)           # msg keys suppressed for good
    neighbor_last_heard: dict = field(default_factory=dict)   # site -> time_us
    covered_by: dict = field(default_factory=dict)      # msg key -> set of covered sites
    held: dict = field(default_factory=dict)            # msg key -> mutable [msg]
    ack_count: dict = field(default_factory=dict)       # msg key -> acks tallied
    wait_pending: dict = field(default_factory=dict)    # msg key -> copy awaiting timer
    wait_done: set = field(default_factory=set)         # msg keys with quota met


# -- actions -------------------------------------------------------------------

@dataclass(frozen=True)
class SendMessage:
    msg: BroadcastMessage
    mac_dest: NodeSite | None = None


@dataclass(frozen=True)
class SendAck:
    msg_key: tuple
    to: NodeSite


@dataclass(frozen=True)
class SendHello:
    entries: tuple


@dataclass(frozen=True)
class StartTimer:
    msg_key: tuple
    delay_us: int


class BroadcastStrategy:
    """Base: originate broadcasts unconditionally, never forward."""

    name = ""
    uses_hello = False
    extra_state_bits = 0

    def on_originate(self, st: NodeProtocolState, me: NodeSite, msg: BroadcastMessage,
                     rng: random.Random) -> list:
        st.seen.add(msg.key)
        return [SendMessage(msg)]

    def on_data(self, st, me, msg, sender, rng, now_us) -> list:
        return []

    def on_ack(self, st, me, msg_key, sender, now_us) -> list:
        return []

    def on_hello(self, st, me, sender, entries, now_us) -> list:
        return []

    def on_hello_due(self, st, me, now_us) -> list:
        return []

    def on_timer(self, st, me, msg_key, now_us) -> list:
        return []


class Flooding(BroadcastStrategy):
    """Rebroadcast every received copy while its TTL allows, regardless of the past."""

    name = "flooding"

    def on_data(self, st, me, msg, sender, rng, now_us):
        if msg.ttl > 1:
            return [SendMessage(forwarded(msg))]
        return []


class PlainFlooding(BroadcastStrategy):
    """Rebroadcast only the first received copy of each message."""

    name = "plain"

    def on_data(self, st, me, msg, sender, rng, now_us):
        first = msg.key not in st.seen
        st.seen.add(msg.key)
        if first and msg.ttl > 1:
            return [SendMessage(forwarded(msg))]
        return []


class PrunedFlooding(BroadcastStrategy):
    """Forward each packet as k duplicated copies addressed to random nodes."""

    name = "pruned"

    def __init__(self, k: int):
        if not 1 <= k <= N_NODES - 1:
            raise ValueError(f"k must be in 1..{N_NODES - 1}, got {k}")
        self.k = k

    def _spray(self, me, msg_out, rng):
        candidates = [s for s in SITES if s != me]
        chosen = rng.sample(candidates, self.k)
        return [SendMessage(replace(msg_out, dest=d), mac_dest=d) for d in chosen]

    def on_originate(self, st, me, msg, rng):
        st.seen.add(msg.key)
        return self._spray(me, msg, rng)

    def on_data(self, st, me, msg, sender, rng, now_us):
        if msg.dest != me:
            return []       # copies addressed elsewhere are not rebroadcast
        first = msg.key not in st.seen
        st.seen.add(msg.key)
        if first and msg.ttl > 1:
            return self._spray(me, forwarded(msg), rng)
        return []


class ProbabilisticFlooding(BroadcastStrategy):
    """Coin-gated flooding; constant p, or p halving per reception of a message."""

    name = "probabilistic"

    def __init__(self, p: float = 0.5, decreasing: bool = False):
        if not 0.0 < p <= 1.0:
            raise ValueError(f"p must be in (0, 1], got {p}")
        self.p = p
        self.decreasing = decreasing
        self.name = "probabilistic_decreasing" if decreasing else "probabilistic_const"

    def forward_probability(self, n_th_reception: int) -> float:
        if self.decreasing:
            return 2.0 ** (-(n_th_reception - 1))
        return self.p

    def on_data(self, st, me, msg, sender, rng, now_us):
        n = st.rx_count.get(msg.key, 0) + 1
        st.rx_count[msg.key] = n
        p = self.forward_probability(n)
        if msg.ttl > 1 and draw_uniform01(rng) < p:
            return [SendMessage(forwarded(msg))]
        return []


class TabuFlooding(BroadcastStrategy):
    """Carry the set of already-covered nodes; forward only toward the rest."""

    name = "tabu"
    extra_state_bits = 8    # 7-bit coverage map on the wire

    def on_originate(self, st, me, msg, rng):
        st.seen.add(msg.key)
        return [SendMessage(replace(msg, covered=frozenset((me,))))]

    def on_data(self, st, me, msg, sender, rng, now_us):
        if me in msg.covered and msg.key in st.seen:
            return []       # not among the intended targets, nothing to add
        st.seen.add(msg.key)
        covered = frozenset(msg.covered | {me})
        if len(covered) == N_NODES or msg.ttl <= 1:
            return []
        return [SendMessage(forwarded(msg, covered=covered))]


class NeighborGatedBroadcast(BroadcastStrategy):
    """Hello-driven forwarding: transmit only with enough fresh neighbors,
    at least one of them not yet covered.

    Neighbor freshness expires after two hello intervals. Coverage knowledge
    comes from overheard data (a forwarder plainly has the message) and from
    hello frames advertising the sender's recently seen messages. After
    forwarding, the currently fresh neighbors are assumed covered, which is
    what lets the broadcast stop on its own; a neighbor that only turns up
    later still triggers a retransmission. The optimism is also the
    protocol's weakness: a forward lost to shadowing is never repaired.
    """

    name = "ebp"
    uses_hello = True
    hello_advertise_cap = 8

    def __init__(self, hello_interval_s: float = 0.5):
        if hello_interval_s <= 0:
            raise ValueError("hello interval must be > 0")
        self.hello_interval_s = hello_interval_s

    def _fresh_neighbors(self, st, now_us):
        horizon = now_us - round(2 * self.hello_interval_s * 1e6)
        return {s for s, t in st.neighbor_last_heard.items() if t >= horizon}

    def _evaluate(self, st, me, now_us):
        actions = []
        fresh = self._fresh_neighbors(st, now_us)
        for key in list(st.held):
            slot = st.held[key]
            msg = slot[0]
            if msg.ttl <= 1:
                del st.held[key]
                continue
            covered = st.covered_by.setdefault(key, set())
            if len(fresh) >= NEIGHBOR_THRESHOLD[me] and (fresh - covered):
                out = forwarded(msg)
                slot[0] = replace(msg, ttl=msg.ttl - 1)
                covered.update(fresh)
                actions.append(SendMessage(out))
                if slot[0].ttl <= 1:
                    del st.held[key]
        return actions

    def on_data(self, st, me, msg, sender, rng, now_us):
        st.neighbor_last_heard[sender] = now_us
        st.covered_by.setdefault(msg.key, set()).add(sender)
        if msg.key not in st.seen:
            st.seen.add(msg.key)
            st.held[msg.key] = [msg]
        return self._evaluate(st, me, now_us)

    def on_hello(self, st, me, sender, entries, now_us):
        st.neighbor_last_heard[sender] = now_us
        for key in entries:
            st.covered_by.setdefault(key, set()).add(sender)
        return self._evaluate(st, me, now_us)

    def on_hello_due(self, st, me, now_us):
        recent = sorted(st.seen)[-self.hello_advertise_cap:]
        return [SendHello(tuple(recent))] + self._evaluate(st, me, now_us)


class HopThresholdBroadcast(BroadcastStrategy):
    """Flood close to the sink; past the hop threshold, wait for ack quota.

    Copies within the hop threshold are reflooded immediately. At and past
    it, the node arms a timer and rebroadcasts only if fewer than the quota
    of acknowledgments arrived before it fired; past the threshold it also
    acks the node the copy came from. A met quota silences the message for
    good at that node.
    """

    name = "mbp"

    def __init__(self, delta: int = 2, timer_s: float = 0.05, quota: int = 1):
        if delta < 1:
            raise ValueError("delta must be >= 1")
        if timer_s < 0:
            raise ValueError("timer must be >= 0")
        if quota < 1:
            raise ValueError("quota must be >= 1")
        self.delta = delta
        self.timer_s = timer_s
        self.quota = quota

    def on_data(self, st, me, msg, sender, rng, now_us):
        st.seen.add(msg.key)
        actions = []
        if msg.hops > self.delta:
            actions.append(SendAck(msg.key, sender))
        if msg.hops < self.delta:
            if msg.ttl > 1:
                actions.append(SendMessage(forwarded(msg)))
            return actions
        if msg.key in st.wait_done or msg.key in st.wait_pending:
            return actions
        if msg.ttl <= 1:
            return actions
        st.wait_pending[msg.key] = msg
        actions.append(StartTimer(msg.key, round(self.timer_s * 1e6)))
        return actions

    def on_ack(self, st, me, msg_key, sender, now_us):
        st.ack_count[msg_key] = st.ack_count.get(msg_key, 0) + 1
        return []

    def on_timer(self, st, me, msg_key, now_us):
        msg = st.wait_pending.pop(msg_key, None)
        if msg is None:
            return []
        if st.ack_count.get(msg_key, 0) >= self.quota:
            st.wait_done.add(msg_key)
            return []
        return [SendMessage(forwarded(msg))]


class OptimizedFlooding(BroadcastStrategy):
    """Flooding gated by a per-copy contributor tally against a local copy.

    Every receiver joins the copy's contributor set; a copy whose tally is
    not fresher than the node's local value is obsolete and dropped, and a
    full tally silences the message everywhere it arrives.
    """

    name = "optflood"
    extra_state_bits = 8    # 7-bit contributor map on the wire

    def on_originate(self, st, me, msg, rng):
        st.seen.add(msg.key)
        out = replace(msg, contributors=frozenset((me,)))
        st.cpt_local[msg.key] = len(out.contributors)
        return [SendMessage(out)]

    def on_data(self, st, me, msg, sender, rng, now_us):
        key = msg.key
        if key in st.of_done:
            return []
        contributors = frozenset(msg.contributors | {me})
        tally = len(contributors)
        first = key not in st.seen
        st.seen.add(key)
        if tally == N_NODES:
            st.of_done.add(key)
            st.cpt_local[key] = tally
            return []
        if not first and tally <= st.cpt_local.get(key, 0):
            return []       # obsolete copy
        assert tally >= st.cpt_local.get(key, 0), "contributor tally went backwards"
        st.cpt_local[key] = tally
        if msg.ttl > 1:
            return [SendMessage(forwarded(msg, contributors=contributors))]
        return []


STRATEGY_NAMES = (
    "flooding",
    "plain",
    "pruned",
    "probabilistic_const",
    "probabilistic_decreasing",
    "tabu",
    "ebp",
    "mbp",
    "optflood",
)


def make_strategy(name: str, params) -> BroadcastStrategy:
    """Build a strategy from its scenario name and a StrategyParams-like object."""
    if name == "flooding":
        return Flooding()
    if name == "plain":
        return PlainFlooding()
    if name == "pruned":
        return PrunedFlooding(params.k)
    if name == "probabilistic_const":
        return ProbabilisticFlooding(p=params.p, decreasing=False)
    if name == "probabilistic_decreasing":
        return ProbabilisticFlooding(decreasing=True)
    if name == "tabu":
        return TabuFlooding()
    if name == "ebp":
        return NeighborGatedBroadcast(hello_interval_s=params.hello_interval_s)
    if name == "mbp":
        return HopThresholdBroadcast(delta=params.delta, timer_s=params.timer_s,
                                     quota=params.quota)
    if name == "optflood":
        return OptimizedFlooding()
    raise ValueError(f"unknown strategy {name!r}")
