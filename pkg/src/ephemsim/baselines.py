"""Safety-margin allocation policies (ephemeral pool only).

Both baselines deliberately leave a slice of the reclaimable capacity
unallocated to absorb demand spikes: Fixed reserves a constant fraction,
Scavenger scales its reserve with the recent variability of host
utilization. Withheld units are never offered to customers, so the SLA is
judged against what the policy committed to at each step; losses below
that commitment accrue violation time exactly as in the agent environment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .economics import CostModel
from .environment import (
    DEFAULT_UNIT,
    EnvState,
    EpisodeStats,
    RequestPolicy,
    ResourceUnit,
    advance_time,
    units_from_prediction,
)
from .traces import TraceSample, TraceWindow


@dataclass(frozen=True)
class MarginPolicy:
    kind: str = "fixed"  # fixed | scavenger
    fixed_fraction: float = 0.05
    scavenger_k: float = 1.0
    history_window: int = 480

    def __post_init__(self) -> None:
        if not 0.0 <= self.fixed_fraction <= 1.0:
            raise ValueError("fixed_fraction must lie in [0, 1]")
        if self.scavenger_k < 0.0:
            raise ValueError("scavenger_k must be non-negative")
        if self.kind not in ("fixed", "scavenger"):
            raise ValueError(f"unknown margin policy kind {self.kind!r}")


def allocatable_units_fixed(capacity_units: int, policy: MarginPolicy) -> int:
    """Units sellable after reserving the constant safety fraction."""
    if capacity_units < 0:
        raise ValueError("capacity must be non-negative")
    return int(math.floor(capacity_units * (1.0 - policy.fixed_fraction)))


def allocatable_units_scavenger(
    history: Sequence[TraceSample], free_units: int, policy: MarginPolicy
) -> int:
    """Units sellable after a dynamic margin of k standard deviations of the
    recent utilization (the larger of the CPU and memory margins)."""
    if len(history) < 2:
        raise ValueError("scavenger margin needs at least 2 history samples")
    recent = history[-policy.history_window :]
    cpu_sigma = float(np.std([s.cpu_used for s in recent], ddof=1))
    mem_sigma = float(np.std([s.mem_used for s in recent], ddof=1))
    margin = min(max(policy.scavenger_k * max(cpu_sigma, mem_sigma), 0.0), 1.0)
    return int(math.floor(free_units * (1.0 - margin)))


def run_baseline_episode(
    policy: MarginPolicy,
    window: TraceWindow,
    model: CostModel,
    request_policy: RequestPolicy = RequestPolicy(),
    unit: ResourceUnit = DEFAULT_UNIT,
    history: Sequence[TraceSample] = (),
    rng: np.random.Generator | None = None,
    event_rows: list[dict] | None = None,
) -> EpisodeStats:
    """One day under a margin policy: at each step allocate
    min(request, allocatable) ephemeral units, then settle against the
    actual utilization with the same reclamation and reward rules as the
    agent environment. The stable pool is never touched.

    ``history`` seeds the Scavenger utilization record; the samples of the
    window itself extend it as time passes.
    """
    request = request_policy.request_units(window, unit, rng)
    record: list[TraceSample] = list(history)
    stats = EpisodeStats()

    for t in range(len(window)):
        free_units = units_from_prediction(window, t, unit)
        if policy.kind == "fixed":
            allocatable = allocatable_units_fixed(free_units, policy)
        else:
            allocatable = (
                allocatable_units_scavenger(record, free_units, policy) if len(record) >= 2 else free_units
            )
        committed = min(request, allocatable)
        state = EnvState(
            res_rem=max(request - committed, 0),
            res_alloc_e=committed,
            res_alloc_s=0,
            res_avail_e=free_units - committed,
            res_avail_s=0,
            p=0.0,
        )
        # SLA accounting is against the policy's own commitment: the margin
        # slice was never sold, so it cannot be violated.
        outcome = advance_time(state, window, t, model, committed, unit)
        settled = outcome.next_state
        stats.total_reward += outcome.reward
        stats.ephemeral_unit_steps += settled.res_alloc_e
        stats.violation_steps += int(outcome.violated)
        stats.lost_units += outcome.lost_units
        stats.steps += 1
        stats.micro_actions += 1
        if event_rows is not None:
            event_rows.append(
                {
                    "t": t,
                    "actions": "SET_ALLOC",
                    "rem": settled.res_rem,
                    "alloc_e": settled.res_alloc_e,
                    "alloc_s": 0,
                    "lost_units": outcome.lost_units,
                    "reward": outcome.reward,
                    "violated": int(outcome.violated),
                }
            )
        record.append(window.samples[t])
    return stats
