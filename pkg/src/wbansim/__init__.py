"""Seeded discrete-event simulator for broadcast strategies in a 7-node on-body network."""

from .channel import (Channel, ChannelConfig, LinkStats, NodeSite, Outcome, Posture,
                      SINK, SITES, link_margin)
from .engine import RngManager, SimEngine, usec, sec
from .mac import Frame, MacParams, NodeMac
from .metrics import RunRecord, aggregate
from .scenario import (Scenario, default_channel_config, default_scenario,
                       load_scenario, validate_scenario)
from .simulation import RunConfig, Simulation, StrategyParams, replay_trace
from .strategies import (BroadcastMessage, NodeProtocolState, STRATEGY_NAMES,
                         make_strategy)

__all__ = [
    "BroadcastMessage", "Channel", "ChannelConfig", "Frame", "LinkStats",
    "MacParams", "NodeMac", "NodeProtocolState", "NodeSite", "Outcome", "Posture",
    "RngManager", "RunConfig", "RunRecord", "Scenario", "SimEngine", "Simulation",
    "SINK", "SITES", "STRATEGY_NAMES", "StrategyParams", "aggregate",
    "default_channel_config", "default_scenario", "link_margin", "load_scenario",
    "make_strategy", "replay_trace", "sec", "usec", "validate_scenario",
]
