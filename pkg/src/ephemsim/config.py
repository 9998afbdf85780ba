"""Experiment configuration: a single YAML file, every default overridable.

Layout (all sections optional; defaults shown in README)::

    traces:    source (generate|csv), path, seed, days, window_len,
               forecast (provided|seasonal_naive), profile {base_load,
               diurnal_amplitude, noise_scale, p_true, peak_step}
    host:      {cpu_cores, mem_gb}
    unit:      {vcpu, mem_gb}
    economics: {cpe, cps, cpv, step_minutes}
    penalty_tiers: [[lower, upper|null, discount], ...]
    stable_capacity: {rule: fraction_of_peak|fixed, value}
    request:   {policy: all_available|fixed|poisson, amount, lam}
    agent:     {hidden_dim, learning_rate, batch_size, gamma, epsilon,
                epsilon_decay, epsilon_min, replay_capacity,
                target_sync_period, k_max}
    training:  {episodes, split}
    seeds:     [int, ...]
    policy:    agent|fixed|scavenger
    baseline:  {fixed_fraction, scavenger_k, history_window}
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import yaml

from .economics import CostModel, PenaltySchedule
from .environment import RequestPolicy, ResourceUnit
from .traces import GeneratorProfile, HostSpec


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class TraceSource:
    source: str = "generate"
    path: str | None = None
    seed: int = 123
    days: int = 10
    window_len: int = 480
    forecast: str = "provided"
    profile: GeneratorProfile = field(default_factory=GeneratorProfile)


@dataclass(frozen=True)
class StableCapacityRule:
    rule: str = "fraction_of_peak"  # fraction_of_peak | fixed
    value: float = 0.25

    def capacity_for(self, peak_units: int) -> int:
        if self.rule == "fraction_of_peak":
            return int(math.floor(peak_units * self.value))
        if self.rule == "fixed":
            return int(self.value)
        raise ConfigError(f"unknown stable capacity rule {self.rule!r}")


@dataclass(frozen=True)
class AgentParams:
    hidden_dim: int = 24
    learning_rate: float = 0.001
    batch_size: int = 50
    gamma: float = 0.95
    epsilon: float = 1.0
    epsilon_decay: float = 0.995
    epsilon_min: float = 0.01
    replay_capacity: int = 20000
    target_sync_period: int = 200
    k_max: int = 32


@dataclass(frozen=True)
class TrainingParams:
    episodes: int = 200
    split: float = 0.8


@dataclass(frozen=True)
class BaselineParams:
    fixed_fraction: float = 0.05
    scavenger_k: float = 1.0
    history_window: int = 480


@dataclass(frozen=True)
class ExperimentConfig:
    traces: TraceSource = field(default_factory=TraceSource)
    host: HostSpec = field(default_factory=lambda: HostSpec(48, 192))
    unit: ResourceUnit = field(default_factory=ResourceUnit)
    economics: CostModel = field(default_factory=CostModel)
    penalties: PenaltySchedule = field(default_factory=PenaltySchedule)
    stable_capacity: StableCapacityRule = field(default_factory=StableCapacityRule)
    request: RequestPolicy = field(default_factory=RequestPolicy)
    agent: AgentParams = field(default_factory=AgentParams)
    training: TrainingParams = field(default_factory=TrainingParams)
    seeds: tuple[int, ...] = (7,)
    policy: str = "agent"
    baseline: BaselineParams = field(default_factory=BaselineParams)


def _take(section: dict, cls, **overrides):
    try:
        return cls(**{**section, **overrides})
    except TypeError as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from None


def parse_config(raw: dict) -> ExperimentConfig:
    """Build a validated ExperimentConfig from a parsed YAML mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("top-level configuration must be a mapping")
    known = {
        "traces", "host", "unit", "economics", "penalty_tiers", "stable_capacity",
        "request", "agent", "training", "seeds", "policy", "baseline",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

    traces_raw = dict(raw.get("traces", {}))
    profile_raw = traces_raw.pop("profile", {})
    profile = _take(profile_raw, GeneratorProfile, window_len=traces_raw.get("window_len", 480))
    traces = _take(traces_raw, TraceSource, profile=profile)
    if traces.source not in ("generate", "csv"):
        raise ConfigError(f"traces.source must be 'generate' or 'csv', got {traces.source!r}")
    if traces.source == "csv":
        if not traces.path:
            raise ConfigError("traces.source=csv requires traces.path")
        if not os.path.exists(traces.path):
            raise ConfigError(f"trace file not found: {traces.path}")
    if traces.forecast not in ("provided", "seasonal_naive"):
        raise ConfigError(f"traces.forecast must be 'provided' or 'seasonal_naive', got {traces.forecast!r}")

    tiers_raw = raw.get("penalty_tiers")
    if tiers_raw is None:
        penalties = PenaltySchedule()
    else:
        tiers = tuple(
            (float(lo), math.inf if hi is None else float(hi), float(d)) for lo, hi, d in tiers_raw
        )
        penalties = _take({}, PenaltySchedule, tiers=tiers)

    seeds = tuple(int(s) for s in raw.get("seeds", (7,)))
    if not seeds:
        raise ConfigError("seed list must be non-empty")

    policy = raw.get("policy", "agent")
    if policy not in ("agent", "fixed", "scavenger"):
        raise ConfigError(f"policy must be agent|fixed|scavenger, got {policy!r}")

    request_raw = dict(raw.get("request", {}))
    request_kind = request_raw.pop("policy", request_raw.pop("kind", "all_available"))
    if request_kind not in ("all_available", "fixed", "poisson"):
        raise ConfigError(f"request.policy must be all_available|fixed|poisson, got {request_kind!r}")

    return ExperimentConfig(
        traces=traces,
        host=_take(raw.get("host", {}), HostSpec) if raw.get("host") else HostSpec(48, 192),
        unit=_take(raw.get("unit", {}), ResourceUnit),
        economics=_take(raw.get("economics", {}), CostModel),
        penalties=penalties,
        stable_capacity=_take(raw.get("stable_capacity", {}), StableCapacityRule),
        request=_take(request_raw, RequestPolicy, kind=request_kind),
        agent=_take(raw.get("agent", {}), AgentParams),
        training=_take(raw.get("training", {}), TrainingParams),
        seeds=seeds,
        policy=policy,
        baseline=_take(raw.get("baseline", {}), BaselineParams),
    )


def load_config(path: str) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError(f"configuration file not found: {path}")
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return parse_config(raw)
