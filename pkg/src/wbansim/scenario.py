"""Scenario file loading and validation; ships a synthetic default channel."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources

import yaml

from .channel import (ALL_PAIRS, ChannelConfig, ConfigError, LinkStats, NodeSite,
                      Posture, POSTURES, SITE_BY_LABEL, SITES, pair_key)
from .mac import MacParams
from .simulation import RunConfig, StrategyParams
from .strategies import STRATEGY_NAMES

N = len(SITES)


class ScenarioIOError(Exception):
    """The scenario file could not be read or parsed at all (not a validation failure)."""


@dataclass
class Scenario:
    name: str
    strategy: str
    ttl: int
    params: StrategyParams
    postures: list[Posture]
    source_mode: str
    rate_pps: float
    packets: int
    seed_count: int
    seed_base: int
    duration_s: float
    queue_capacity: int
    mac: MacParams
    channel: ChannelConfig
    payload_bits: int = 512

    def run_config(self, *, seed: int, strategy: str | None = None,
                   posture: Posture | None = None, ttl: int | None = None,
                   params: StrategyParams | None = None,
                   queue_capacity: int | None = None,
                   source_mode: str | None = None, rate_pps: float | None = None,
                   packets: int | None = None,
                   duration_s: float | None = None) -> RunConfig:
        return RunConfig(
            strategy=strategy or self.strategy,
            posture=posture or self.postures[0],
            channel=self.channel,
            seed=seed,
            ttl=self.ttl if ttl is None else ttl,
            params=params or self.params,
            mac=self.mac,
            queue_capacity=self.queue_capacity if queue_capacity is None else queue_capacity,
            payload_bits=self.payload_bits,
            source_mode=source_mode or self.source_mode,
            rate_pps=self.rate_pps if rate_pps is None else rate_pps,
            packets=self.packets if packets is None else packets,
            duration_s=self.duration_s if duration_s is None else duration_s,
        )


# -- channel config parsing ------------------------------------------------------


def _parse_cell(cell) -> LinkStats | None:
    if cell is None or cell == "-" or cell == "":
        return None
    if isinstance(cell, str):
        mean_s, _, std_s = cell.partition("/")
        return LinkStats(float(mean_s), float(std_s))
    if isinstance(cell, (list, tuple)) and len(cell) == 2:
        return LinkStats(float(cell[0]), float(cell[1]))
    raise ValueError(f"cannot parse link cell {cell!r}")


def parse_channel_mapping(data: dict, violations: list[str] | None = None) -> ChannelConfig:
    """Build a ChannelConfig from a parsed channel mapping.

    With a violations list the problems are appended and parsing continues
    where possible; without one the first problem raises ConfigError.
    """
    strict = violations is None
    problems: list[str] = [] if strict else violations

    def problem(msg: str):
        if strict:
            raise ConfigError(msg)
        problems.append(msg)

    order = data.get("site_order", [s.label for s in SITES])
    sites = []
    for label in order:
        if label not in SITE_BY_LABEL:
            problem(f"channel.site_order: unknown site {label!r}")
            continue
        sites.append(SITE_BY_LABEL[label])
    if len(sites) != N:
        problem(f"channel.site_order: expected the {N} body sites, got {order!r}")
        sites = list(SITES)

    matrices: dict[Posture, dict] = {}
    posture_blocks = data.get("postures", {})
    for posture in POSTURES:
        rows = posture_blocks.get(posture.value)
        if rows is None:
            problem(f"channel.postures: missing block for {posture.value!r}")
            continue
        if len(rows) != N or any(len(r) != N for r in rows):
            problem(f"channel.postures.{posture.value}: matrix must be {N}x{N}")
            continue
        table: dict[tuple[NodeSite, NodeSite], LinkStats] = {}
        for i in range(N):
            for j in range(N):
                try:
                    cell = _parse_cell(rows[i][j])
                except ValueError as exc:
                    problem(f"channel.postures.{posture.value}[{i}][{j}]: {exc}")
                    continue
                if cell is None:
                    continue
                if i == j:
                    continue    # diagonal unused
                if cell.std_db < 0:
                    problem(f"channel.postures.{posture.value}[{i}][{j}]: std < 0")
                    continue
                a, b = sites[i], sites[j]
                key = pair_key(a, b)
                if key in table and table[key] != cell:
                    problem(f"channel.postures.{posture.value}: asymmetric entry for "
                            f"{a.label}-{b.label} "
                            f"({table[key].mean_db}/{table[key].std_db} vs "
                            f"{cell.mean_db}/{cell.std_db})")
                    continue
                table[key] = cell
        for pair in ALL_PAIRS:
            if pair not in table:
                problem(f"channel.postures.{posture.value}: missing entry for "
                        f"{pair[0].label}-{pair[1].label}")
        matrices[posture] = table

    coherence = float(data.get("coherence_interval", 0.1))
    if coherence <= 0:
        problem("channel.coherence_interval: must be > 0")
        coherence = 0.1
    return ChannelConfig(
        matrices=matrices,
        coherence_interval_s=coherence,
        tx_power_dbm=float(data.get("tx_power_dbm", -60.0)),
        sensitivity_dbm=float(data.get("sensitivity_dbm", -100.0)),
    )


def default_channel_config() -> ChannelConfig:
    """The packaged synthetic channel (see data/default_channel.yaml)."""
    text = resources.files("wbansim.data").joinpath("default_channel.yaml").read_text()
    return parse_channel_mapping(yaml.safe_load(text))


# -- scenario parsing --------------------------------------------------------------


def _read_yaml(path: str) -> dict:
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except OSError as exc:
        raise ScenarioIOError(f"cannot read scenario file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioIOError(f"cannot parse scenario file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioIOError(f"scenario file {path} is not a mapping")
    return data


def validate_scenario_data(data: dict) -> list[str]:
    """All invariant violations in a parsed scenario, naming key and rule."""
    v: list[str] = []

    strategy = data.get("strategy", "flooding")
    if strategy not in STRATEGY_NAMES:
        v.append(f"strategy: unknown name {strategy!r}, expected one of {STRATEGY_NAMES}")

    ttl = data.get("ttl", 8)
    if not isinstance(ttl, int) or ttl < 1:
        v.append(f"ttl: must be an integer >= 1, got {ttl!r}")

    params = data.get("params", {}) or {}
    k = params.get("k", 3)
    if not isinstance(k, int) or not 1 <= k <= N - 1:
        v.append(f"params.k: must be an integer in 1..{N - 1}, got {k!r}")
    p = params.get("p", 0.5)
    if not 0 < p <= 1:
        v.append(f"params.p: must be in (0, 1], got {p!r}")
    if params.get("hello_interval", 0.5) <= 0:
        v.append("params.hello_interval: must be > 0")
    if params.get("delta", 2) < 1:
        v.append("params.delta: must be >= 1")
    if params.get("timer", 0.05) < 0:
        v.append("params.timer: must be >= 0")
    if params.get("quota", 1) < 1:
        v.append("params.quota: must be >= 1")

    postures = data.get("postures", ["walk"])
    if not postures:
        v.append("postures: list must not be empty")
    for name in postures:
        if name not in {p.value for p in POSTURES}:
            v.append(f"postures: unknown posture {name!r}")

    source = data.get("source", {}) or {}
    mode = source.get("mode", "single")
    if mode not in ("single", "rate"):
        v.append(f"source.mode: must be 'single' or 'rate', got {mode!r}")
    if source.get("rate", 10) <= 0:
        v.append("source.rate: must be > 0")
    if source.get("packets", 1) < 1:
        v.append("source.packets: must be >= 1")

    seeds = data.get("seeds", {}) or {}
    if seeds.get("count", 50) < 1:
        v.append("seeds.count: must be >= 1")

    if data.get("duration", 30.0) <= 0:
        v.append("duration: must be > 0")
    if data.get("payload_bits", 512) < 1:
        v.append("payload_bits: must be >= 1")

    mac = data.get("mac", {}) or {}
    if mac.get("queue_capacity", 100) < 1:
        v.append("mac.queue_capacity: must be >= 1")
    if mac.get("min_be", 3) > mac.get("max_be", 5):
        v.append("mac.min_be: must be <= mac.max_be")
    if mac.get("max_csma_backoffs", 4) < 1:
        v.append("mac.max_csma_backoffs: must be >= 1")
    if mac.get("data_rate", 250_000) <= 0:
        v.append("mac.data_rate: must be > 0")

    channel = data.get("channel", "default")
    if channel == "default":
        pass
    elif isinstance(channel, dict):
        parse_channel_mapping(channel, violations=v)
    else:
        v.append(f"channel: must be 'default' or a mapping, got {channel!r}")
    return v


def validate_scenario(path: str) -> list[str]:
    return validate_scenario_data(_read_yaml(path))


def load_scenario(path: str) -> Scenario:
    data = _read_yaml(path)
    violations = validate_scenario_data(data)
    if violations:
        raise ConfigError("invalid scenario:\n" + "\n".join(violations))
    return scenario_from_data(data)


def scenario_from_data(data: dict) -> Scenario:
    params = data.get("params", {}) or {}
    source = data.get("source", {}) or {}
    seeds = data.get("seeds", {}) or {}
    mac = data.get("mac", {}) or {}
    channel = data.get("channel", "default")
    if channel == "default":
        channel_cfg = default_channel_config()
    else:
        channel_cfg = parse_channel_mapping(channel)
    channel_cfg.check()
    return Scenario(
        name=str(data.get("name", "scenario")),
        strategy=data.get("strategy", "flooding"),
        ttl=data.get("ttl", 8),
        params=StrategyParams(
            k=params.get("k", 3),
            p=params.get("p", 0.5),
            hello_interval_s=params.get("hello_interval", 0.5),
            delta=params.get("delta", 2),
            timer_s=params.get("timer", 0.05),
            quota=params.get("quota", 1),
        ),
        postures=[Posture(name) for name in data.get("postures", ["walk"])],
        source_mode=source.get("mode", "single"),
        rate_pps=float(source.get("rate", 10)),
        packets=int(source.get("packets", 1)),
        seed_count=int(seeds.get("count", 50)),
        seed_base=int(seeds.get("base", 1000)),
        duration_s=float(data.get("duration", 30.0)),
        queue_capacity=int(mac.get("queue_capacity", 100)),
        mac=MacParams(
            min_be=mac.get("min_be", 3),
            max_be=mac.get("max_be", 5),
            max_csma_backoffs=mac.get("max_csma_backoffs", 4),
            backoff_unit_us=mac.get("backoff_unit_us", 320),
            data_rate_bps=mac.get("data_rate", 250_000),
            header_bits=mac.get("header_bits", 136),
        ),
        channel=channel_cfg,
        payload_bits=int(data.get("payload_bits", 512)),
    )


def default_scenario() -> Scenario:
    """The paper-style defaults without touching the filesystem."""
    return scenario_from_data({})
