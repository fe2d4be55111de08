"""Per-run observation and cross-seed aggregation of coverage, delay, traffic and ordering."""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from .channel import SITES, NodeSite


class RunRecord:
    """Counters and first-reception times for a single seeded run.

    Receptions are counted at the radio (any successfully decoded frame);
    application-level first receptions feed coverage, delay and the
    out-of-order tally. Control frames (hellos, acks) are counted apart
    from data so both a data-only and a total-traffic view exist.
    """

    def __init__(self):
        self.originated: dict[tuple, int] = {}          # msg key -> origination time_us
        self.first_rx: dict[NodeSite, dict[tuple, int]] = {s: {} for s in SITES}
        self.data_tx = {s: 0 for s in SITES}
        self.data_rx = {s: 0 for s in SITES}
        self.control_tx = {s: 0 for s in SITES}
        self.control_rx = {s: 0 for s in SITES}
        self.drops_queue = {s: 0 for s in SITES}
        self.drops_csma = {s: 0 for s in SITES}
        self.max_seq_seen = {s: -1 for s in SITES}
        self.out_of_order = {s: 0 for s in SITES}
        self.tx_per_msg: dict[NodeSite, dict[tuple, int]] = {s: {} for s in SITES}

    # -- recording hooks -------------------------------------------------------

    def note_originate(self, msg, time_us: int) -> None:
        self.originated[msg.key] = time_us

    def note_tx(self, site: NodeSite, frame, time_us: int) -> None:
        if frame.kind == "data":
            self.data_tx[site] += 1
            per_msg = self.tx_per_msg[site]
            per_msg[frame.msg.key] = per_msg.get(frame.msg.key, 0) + 1
        else:
            self.control_tx[site] += 1

    def note_rx(self, site: NodeSite, frame) -> None:
        if frame.kind == "data":
            self.data_rx[site] += 1
        else:
            self.control_rx[site] += 1

    def note_first_rx(self, site: NodeSite, msg, time_us: int) -> None:
        """Application-level first delivery of a message at a non-origin node."""
        table = self.first_rx[site]
        if msg.key in table:
            return
        table[msg.key] = time_us
        if self.max_seq_seen[site] > msg.seq:
            self.out_of_order[site] += 1
        else:
            self.max_seq_seen[site] = msg.seq

    def note_drop_queue(self, site: NodeSite) -> None:
        self.drops_queue[site] += 1

    def note_drop_csma(self, site: NodeSite) -> None:
        self.drops_csma[site] += 1

    # -- derived metrics -------------------------------------------------------

    def coverage_pct(self) -> float:
        """Delivered-message ratio per non-sink node, averaged over nodes, in percent."""
        total = len(self.originated)
        if total == 0:
            return 0.0
        origins = {k[0] for k in self.originated}
        receivers = [s for s in SITES if s not in origins]
        ratios = [len(self.first_rx[s]) / total for s in receivers]
        return 100.0 * sum(ratios) / len(ratios)

    def node_delay_s(self, site: NodeSite) -> float | None:
        """Mean first-reception delay at one node; None if it never received."""
        table = self.first_rx[site]
        if not table:
            return None
        total = sum(t - self.originated[key] for key, t in table.items())
        return total / len(table) / 1e6

    def delay_s(self) -> float | None:
        """Network mean delay: node averages over nodes that received anything."""
        origins = {k[0] for k in self.originated}
        values = []
        for site in SITES:
            if site in origins:
                continue
            d = self.node_delay_s(site)
            if d is not None:
                values.append(d)
        if not values:
            return None
        return sum(values) / len(values)

    def node_deseq_pct(self, site: NodeSite) -> float:
        received = len(self.first_rx[site])
        if received == 0:
            return 0.0
        return 100.0 * self.out_of_order[site] / received

    def deseq_pct(self) -> float:
        origins = {k[0] for k in self.originated}
        receivers = [s for s in SITES if s not in origins]
        return sum(self.node_deseq_pct(s) for s in receivers) / len(receivers)

    def node_tx_rx(self, site: NodeSite) -> int:
        return (self.data_tx[site] + self.control_tx[site]
                + self.data_rx[site] + self.control_rx[site])

    def tx_total(self) -> int:
        return sum(self.data_tx.values()) + sum(self.control_tx.values())

    def rx_total(self) -> int:
        return sum(self.data_rx.values()) + sum(self.control_rx.values())

    def data_tx_rx_total(self) -> int:
        return sum(self.data_tx.values()) + sum(self.data_rx.values())

    def drops_total(self) -> int:
        return sum(self.drops_queue.values()) + sum(self.drops_csma.values())

    def summary(self) -> dict:
        return {
            "coverage_pct": self.coverage_pct(),
            "delay_s": self.delay_s(),
            "tx": float(self.tx_total()),
            "rx": float(self.rx_total()),
            "deseq_pct": self.deseq_pct(),
            "drops": float(self.drops_total()),
        }


@dataclass(frozen=True)
class MetricAggregate:
    mean: float | None
    std: float | None
    n: int


def _mean_std(values: list[float]) -> MetricAggregate:
    if not values:
        return MetricAggregate(None, None, 0)
    mean = sum(values) / len(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return MetricAggregate(mean, std, len(values))


def aggregate(summaries: list[dict]) -> dict[str, MetricAggregate]:
    """Order-independent per-metric mean and sample standard deviation over seeds."""
    if not summaries:
        raise ValueError("need at least one run to aggregate")
    keys = summaries[0].keys()
    if any(s.keys() != keys for s in summaries):
        raise ValueError("cannot aggregate records from different scenarios")
    out = {}
    for key in keys:
        values = [s[key] for s in summaries if s[key] is not None]
        out[key] = _mean_std(values)
    return out
