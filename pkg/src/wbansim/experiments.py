"""The six experiment families as sweep definitions, plus the CSV runner."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .channel import Posture, SITES
from .metrics import aggregate
from .scenario import Scenario
from .simulation import RunConfig, Simulation, StrategyParams

CSV_COLUMNS = [
    "scenario", "strategy", "posture",
    "ttl", "K", "P", "I", "delta", "T", "Q", "rate", "queue_capacity",
    "coverage_pct_mean", "coverage_pct_std",
    "delay_s_mean", "delay_s_std",
    "tx_mean", "rx_mean",
    "deseq_pct_mean", "deseq_pct_std",
    "drops",
]

PER_NODE_COLUMNS = [
    "scenario", "strategy", "posture", "ttl", "node",
    "delay_s_mean", "tx_rx_mean",
]


@dataclass(frozen=True)
class StrategyEntry:
    """A strategy plus the parameter overrides that identify it in a sweep."""

    name: str
    overrides: tuple = ()       # (field, value) pairs applied to StrategyParams

    def params(self, base: StrategyParams) -> StrategyParams:
        return replace(base, **dict(self.overrides))

    def label(self) -> str:
        if not self.overrides:
            return self.name
        tail = ",".join(f"{k}={v}" for k, v in self.overrides)
        return f"{self.name}[{tail}]"


@dataclass(frozen=True)
class SweepSpec:
    """One experiment family: a swept axis crossed with strategies and postures."""

    name: str
    axis: str                   # "ttl" | "rate" | "queue_capacity" | "timer"
    values: tuple
    strategies: tuple[StrategyEntry, ...]
    postures: tuple[Posture, ...] | None = None     # None: scenario's postures
    source_mode: str = "single"
    rate_pps: float | None = None
    packets: int | None = None
    ttl: int | None = None
    per_node_csv: bool = False


BASELINE_ENTRIES = (
    StrategyEntry("flooding"),
    StrategyEntry("plain"),
    StrategyEntry("pruned", (("k", 3),)),
    StrategyEntry("probabilistic_const"),
    StrategyEntry("probabilistic_decreasing"),
    StrategyEntry("tabu"),
    StrategyEntry("ebp", (("hello_interval_s", 0.5),)),
    StrategyEntry("mbp"),
    StrategyEntry("optflood"),
)

# the strategies kept once coverage rules out plain and tabu
COMPARED_ENTRIES = (
    StrategyEntry("flooding"),
    StrategyEntry("pruned", (("k", 3),)),
    StrategyEntry("probabilistic_const"),
    StrategyEntry("probabilistic_decreasing"),
    StrategyEntry("ebp", (("hello_interval_s", 0.25),)),
    StrategyEntry("ebp", (("hello_interval_s", 0.5),)),
    StrategyEntry("mbp"),
    StrategyEntry("optflood"),
)

RATE_ENTRIES = (
    StrategyEntry("flooding"),
    StrategyEntry("pruned", (("k", 3),)),
    StrategyEntry("probabilistic_decreasing"),
    StrategyEntry("mbp"),
    StrategyEntry("optflood"),
)

QUEUE_ENTRIES = (
    StrategyEntry("flooding"),
    StrategyEntry("probabilistic_decreasing"),
    StrategyEntry("mbp"),
    StrategyEntry("optflood"),
)

E4_RATES = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)
E5_CAPACITIES = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)


def mbp_timer_values(n: int = 15, lo: float = 0.005, hi: float = 1.0) -> tuple[float, ...]:
    """n log-spaced timer values spanning [lo, hi]."""
    return tuple(round(lo * (hi / lo) ** (i / (n - 1)), 6) for i in range(n))


EXPERIMENTS: dict[str, SweepSpec] = {
    # coverage in function of the TTL, all strategies, walk posture
    "E1": SweepSpec(
        name="E1", axis="ttl", values=tuple(range(1, 9)),
        strategies=BASELINE_ENTRIES + (
            StrategyEntry("pruned", (("k", 2),)),
            StrategyEntry("pruned", (("k", 5),)),
            StrategyEntry("ebp", (("hello_interval_s", 0.25),)),
        ),
        postures=(Posture.WALK,),
    ),
    # end-to-end delay per strategy / node / posture at the default TTL
    "E2": SweepSpec(
        name="E2", axis="ttl", values=(8,),
        strategies=COMPARED_ENTRIES, postures=None, per_node_csv=True,
    ),
    # transmission and reception counts per strategy / node / posture
    "E3": SweepSpec(
        name="E3", axis="ttl", values=(8,),
        strategies=COMPARED_ENTRIES, postures=None, per_node_csv=True,
    ),
    # total-order stress: packet rate sweep at queue capacity 100
    "E4": SweepSpec(
        name="E4", axis="rate", values=E4_RATES,
        strategies=RATE_ENTRIES, postures=(Posture.WALK,),
        source_mode="rate", packets=150, ttl=4,
    ),
    # MAC queue capacity sweep at 100 packets per second
    "E5": SweepSpec(
        name="E5", axis="queue_capacity", values=E5_CAPACITIES,
        strategies=QUEUE_ENTRIES, postures=(Posture.WALK,),
        source_mode="rate", rate_pps=100.0, packets=30, ttl=4,
    ),
    # hop-threshold broadcast timer sweep
    "E6": SweepSpec(
        name="E6", axis="timer", values=mbp_timer_values(),
        strategies=(StrategyEntry("mbp"),), postures=(Posture.WALK,),
    ),
}


@dataclass(frozen=True)
class SweepPoint:
    scenario_name: str
    entry: StrategyEntry
    posture: Posture
    axis: str
    value: object
    run_cfg_base: RunConfig
    seeds: tuple[int, ...]


def sweep_points(scenario: Scenario, spec: SweepSpec,
                 seed_count: int | None = None,
                 seed_base: int | None = None) -> list[SweepPoint]:
    """Cross product of the declared lists, in CSV emission order."""
    postures = spec.postures if spec.postures is not None else tuple(scenario.postures)
    count = scenario.seed_count if seed_count is None else seed_count
    base = scenario.seed_base if seed_base is None else seed_base
    seeds = tuple(base + i for i in range(count))
    points = []
    for value in spec.values:
        for entry in spec.strategies:
            for posture in postures:
                params = entry.params(scenario.params)
                ttl = spec.ttl if spec.ttl is not None else scenario.ttl
                rate = spec.rate_pps if spec.rate_pps is not None else scenario.rate_pps
                packets = spec.packets if spec.packets is not None else scenario.packets
                capacity = scenario.queue_capacity
                if spec.axis == "ttl":
                    ttl = value
                elif spec.axis == "rate":
                    rate = float(value)
                elif spec.axis == "queue_capacity":
                    capacity = int(value)
                elif spec.axis == "timer":
                    params = replace(params, timer_s=float(value))
                else:
                    raise ValueError(f"unknown sweep axis {spec.axis!r}")
                duration = scenario.duration_s
                if spec.source_mode == "rate":
                    duration = packets / rate + 10.0
                cfg = RunConfig(
                    strategy=entry.name, posture=posture, channel=scenario.channel,
                    seed=0, ttl=ttl, params=params, mac=scenario.mac,
                    queue_capacity=capacity, payload_bits=scenario.payload_bits,
                    source_mode=spec.source_mode, rate_pps=rate, packets=packets,
                    duration_s=duration,
                )
                points.append(SweepPoint(scenario.name, entry, posture,
                                         spec.axis, value, cfg, seeds))
    return points


def run_point(point: SweepPoint) -> dict:
    """Run all seeds of one sweep point and aggregate; safe in a worker process."""
    summaries = []
    node_delays = {s: [] for s in SITES}
    node_txrx = {s: [] for s in SITES}
    for seed in point.seeds:
        record = Simulation(replace(point.run_cfg_base, seed=seed)).run()
        summaries.append(record.summary())
        for site in SITES:
            d = record.node_delay_s(site)
            if d is not None:
                node_delays[site].append(d)
            node_txrx[site].append(record.node_tx_rx(site))
    agg = aggregate(summaries)
    return {
        "point": point,
        "agg": agg,
        "node_delay_mean": {
            s: (sum(v) / len(v) if v else None) for s, v in node_delays.items()},
        "node_txrx_mean": {s: sum(v) / len(v) for s, v in node_txrx.items()},
    }


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _param_cells(point: SweepPoint) -> dict:
    cfg = point.run_cfg_base
    p = cfg.params
    name = point.entry.name
    cells = {c: "" for c in ("ttl", "K", "P", "I", "delta", "T", "Q", "rate",
                             "queue_capacity")}
    cells["ttl"] = str(cfg.ttl)
    cells["queue_capacity"] = str(cfg.queue_capacity)
    if cfg.source_mode == "rate":
        cells["rate"] = _fmt(float(cfg.rate_pps))
    if name == "pruned":
        cells["K"] = str(p.k)
    if name == "probabilistic_const":
        cells["P"] = _fmt(float(p.p))
    if name == "ebp":
        cells["I"] = _fmt(float(p.hello_interval_s))
    if name == "mbp":
        cells["delta"] = str(p.delta)
        cells["T"] = _fmt(float(p.timer_s))
        cells["Q"] = str(p.quota)
    return cells


def result_row(result: dict) -> list[str]:
    point = result["point"]
    agg = result["agg"]
    cells = _param_cells(point)
    row = [point.scenario_name, point.entry.label(), point.posture.value]
    row += [cells[c] for c in ("ttl", "K", "P", "I", "delta", "T", "Q", "rate",
                               "queue_capacity")]
    row += [
        _fmt(agg["coverage_pct"].mean), _fmt(agg["coverage_pct"].std),
        _fmt(agg["delay_s"].mean), _fmt(agg["delay_s"].std),
        _fmt(agg["tx"].mean), _fmt(agg["rx"].mean),
        _fmt(agg["deseq_pct"].mean), _fmt(agg["deseq_pct"].std),
        _fmt(agg["drops"].mean),
    ]
    return row


def run_experiment(scenario: Scenario, experiment: str, out_dir: str,
                   jobs: int = 1, seed_count: int | None = None,
                   seed_base: int | None = None, verbose: bool = False) -> list[str]:
    """Execute one experiment family and write its CSV file(s); returns the paths."""
    spec = EXPERIMENTS[experiment]
    points = sweep_points(scenario, spec, seed_count=seed_count, seed_base=seed_base)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_point, points, chunksize=1))
    else:
        results = []
        for i, point in enumerate(points):
            results.append(run_point(point))
            if verbose:
                print(f"[{spec.name}] {i + 1}/{len(points)} "
                      f"{point.entry.label()} {point.posture.value} "
                      f"{point.axis}={point.value}", flush=True)

    os.makedirs(out_dir, exist_ok=True)
    main_path = os.path.join(out_dir, f"{spec.name}.csv")
    with open(main_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for result in results:
            writer.writerow(result_row(result))
    paths = [main_path]

    if spec.per_node_csv:
        node_path = os.path.join(out_dir, f"{spec.name}_per_node.csv")
        with open(node_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(PER_NODE_COLUMNS)
            for result in results:
                point = result["point"]
                for site in SITES:
                    writer.writerow([
                        point.scenario_name, point.entry.label(),
                        point.posture.value, str(point.run_cfg_base.ttl),
                        site.label,
                        _fmt(result["node_delay_mean"][site]),
                        _fmt(result["node_txrx_mean"][site]),
                    ])
        paths.append(node_path)
    return paths
