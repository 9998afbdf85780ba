"""Discrete-time allocation environment over one trace window.

Two pools back customer requests: reclaimable (ephemeral) units whose
capacity follows the host trace, and stable on-demand units that are never
revoked. Time advances in trace steps. Within a step the decision source
issues unit-granular micro-actions until it signals "done" (Noop) or a cap
is hit; then the actual utilization of the step materializes and any
ephemeral units beyond the realized capacity are forcibly reclaimed.

Decisions see capacity derived from *predicted* utilization; settlement
uses the *actual* utilization, so forecast errors surface as lost units.
A step violates the SLA when requested units are not all provided
(``res_rem > 0`` after settlement).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Callable, Optional

import numpy as np

from .economics import CostModel, step_reward
from .traces import TraceWindow

K_MAX_DEFAULT = 32  # micro-action cap per time step


@dataclass(frozen=True)
class ResourceUnit:
    """Allocation granule (sized like a 2 vCPU / 8 GB instance)."""

    vcpu: int = 2
    mem_gb: int = 8

    def __post_init__(self) -> None:
        if self.vcpu <= 0 or self.mem_gb <= 0:
            raise ValueError("resource unit dimensions must be positive")


DEFAULT_UNIT = ResourceUnit()


class Action(IntEnum):
    ALLOC_EPHEMERAL = 0
    REMOVE_EPHEMERAL = 1
    ALLOC_STABLE = 2
    REMOVE_STABLE = 3
    NOOP = 4


@dataclass(frozen=True)
class EnvState:
    """Six-component decision state.

    ``res_rem`` is kept canonical: requested units minus total allocated,
    floored at zero, so over-allocated surplus never counts as owed.
    """

    res_rem: int
    res_alloc_e: int
    res_alloc_s: int
    res_avail_e: int
    res_avail_s: int
    p: float

    def __post_init__(self) -> None:
        if min(self.res_rem, self.res_alloc_e, self.res_alloc_s, self.res_avail_e, self.res_avail_s) < 0:
            raise ValueError("state counts must be non-negative")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("volatility rate must lie in [0, 1]")


@dataclass(frozen=True)
class StepOutcome:
    next_state: EnvState
    reward: float
    lost_units: int
    violated: bool
    terminal: bool


@dataclass(frozen=True)
class RequestPolicy:
    """How many units the customer asks for at episode start."""

    kind: str = "all_available"  # all_available | fixed | poisson
    amount: int = 0
    lam: float = 0.0

    def request_units(
        self, window: TraceWindow, unit: ResourceUnit = DEFAULT_UNIT, rng: Optional[np.random.Generator] = None
    ) -> int:
        if self.kind == "all_available":
            return units_from_prediction(window, 0, unit)
        if self.kind == "fixed":
            return self.amount
        if self.kind == "poisson":
            if rng is None:
                raise ValueError("poisson request policy needs a random generator")
            return int(rng.poisson(self.lam))
        raise ValueError(f"unknown request policy {self.kind!r}")


def _units(free_cpu: float, free_mem: float, unit: ResourceUnit) -> int:
    return int(math.floor(min(free_cpu / unit.vcpu, free_mem / unit.mem_gb)))


def units_from_prediction(window: TraceWindow, t: int, unit: ResourceUnit = DEFAULT_UNIT) -> int:
    """Whole units fitting into the host capacity left free by the
    *predicted* utilization at step t."""
    s = window.samples[t]
    host = window.host
    return _units(host.cpu_cores * (1.0 - s.cpu_pred), host.mem_gb * (1.0 - s.mem_pred), unit)


def units_from_actual(window: TraceWindow, t: int, unit: ResourceUnit = DEFAULT_UNIT) -> int:
    """Whole units actually free at step t, from measured utilization."""
    s = window.samples[t]
    host = window.host
    return _units(host.cpu_cores * (1.0 - s.cpu_used), host.mem_gb * (1.0 - s.mem_used), unit)


def _with_rem(state: EnvState, request: int) -> EnvState:
    rem = max(request - (state.res_alloc_e + state.res_alloc_s), 0)
    return replace(state, res_rem=rem)


def apply_action(state: EnvState, action: Action, request: int) -> EnvState:
    """Apply one micro-action. Invalid moves (empty pool, nothing to remove)
    are exact no-ops; they never fault."""
    if action == Action.ALLOC_EPHEMERAL:
        if state.res_avail_e == 0:
            return state
        return _with_rem(
            replace(state, res_alloc_e=state.res_alloc_e + 1, res_avail_e=state.res_avail_e - 1), request
        )
    if action == Action.REMOVE_EPHEMERAL:
        if state.res_alloc_e == 0:
            return state
        return _with_rem(
            replace(state, res_alloc_e=state.res_alloc_e - 1, res_avail_e=state.res_avail_e + 1), request
        )
    if action == Action.ALLOC_STABLE:
        if state.res_avail_s == 0:
            return state
        return _with_rem(
            replace(state, res_alloc_s=state.res_alloc_s + 1, res_avail_s=state.res_avail_s - 1), request
        )
    if action == Action.REMOVE_STABLE:
        if state.res_alloc_s == 0:
            return state
        return _with_rem(
            replace(state, res_alloc_s=state.res_alloc_s - 1, res_avail_s=state.res_avail_s + 1), request
        )
    if action == Action.NOOP:
        return state
    raise ValueError(f"unknown action {action!r}")


def valid_actions(state: EnvState) -> np.ndarray:
    """Boolean mask over the action space: True where the action would
    change the state (Noop is always valid)."""
    return np.array(
        [
            state.res_avail_e > 0,
            state.res_alloc_e > 0,
            state.res_avail_s > 0,
            state.res_alloc_s > 0,
            True,
        ]
    )


def valid_actions_from_vec(state_vecs: np.ndarray) -> np.ndarray:
    """Same mask recovered from encoded state vectors (a normalized count
    is zero exactly when the count is zero), vectorized over a batch."""
    vecs = np.atleast_2d(state_vecs)
    mask = np.empty((vecs.shape[0], 5), dtype=np.bool_)
    mask[:, 0] = vecs[:, 3] > 0.0
    mask[:, 1] = vecs[:, 1] > 0.0
    mask[:, 2] = vecs[:, 4] > 0.0
    mask[:, 3] = vecs[:, 2] > 0.0
    mask[:, 4] = True
    return mask


@dataclass
class DecideResult:
    actions: list[Action]
    transitions: list[tuple[EnvState, Action, EnvState]]
    state: EnvState


def decide_step(
    state: EnvState,
    policy: Callable[[EnvState], Action],
    request: int,
    k_max: int = K_MAX_DEFAULT,
) -> DecideResult:
    """Run the micro-decision loop for one time step: query the policy and
    apply actions until it emits Noop or ``k_max`` actions were taken.

    The loop does not stop when the request is met; allocating beyond the
    request is allowed (it buffers future losses).
    """
    actions: list[Action] = []
    transitions: list[tuple[EnvState, Action, EnvState]] = []
    for _ in range(k_max):
        action = Action(policy(state))
        new_state = apply_action(state, action, request)
        actions.append(action)
        transitions.append((state, action, new_state))
        state = new_state
        if action == Action.NOOP:
            break
    return DecideResult(actions=actions, transitions=transitions, state=state)


def advance_time(
    state: EnvState,
    window: TraceWindow,
    t: int,
    model: CostModel,
    request: int,
    unit: ResourceUnit = DEFAULT_UNIT,
) -> StepOutcome:
    """Settle step t against the actual utilization: forcibly reclaim
    ephemeral units beyond the realized capacity, refresh availability, and
    emit the per-step reward on the post-loss state."""
    capacity = units_from_actual(window, t, unit)
    lost = max(state.res_alloc_e - capacity, 0)
    alloc_e = state.res_alloc_e - lost
    avail_e = capacity - alloc_e
    rem = max(request - (alloc_e + state.res_alloc_s), 0)
    next_state = replace(state, res_rem=rem, res_alloc_e=alloc_e, res_avail_e=avail_e)
    reward = step_reward(alloc_e, state.res_alloc_s, rem, model)
    return StepOutcome(
        next_state=next_state,
        reward=reward,
        lost_units=lost,
        violated=rem > 0,
        terminal=t == len(window) - 1,
    )


def refresh_availability(
    state: EnvState, window: TraceWindow, t: int, unit: ResourceUnit = DEFAULT_UNIT
) -> EnvState:
    """Begin-of-step view: available ephemeral units derive from the
    prediction for step t (decisions never see the actuals)."""
    predicted = units_from_prediction(window, t, unit)
    return replace(state, res_avail_e=max(predicted - state.res_alloc_e, 0))


def reset(
    window: TraceWindow,
    stable_capacity: int,
    request_policy: RequestPolicy = RequestPolicy(),
    p: float = 1.0,
    unit: ResourceUnit = DEFAULT_UNIT,
    rng: Optional[np.random.Generator] = None,
) -> tuple[EnvState, int]:
    """Initial state for a fresh episode plus the customer request.

    ``p`` is the volatility estimated from the previous window; with no
    prior window the pessimistic prior 1.0 applies.
    """
    if stable_capacity < 0:
        raise ValueError("stable_capacity must be non-negative")
    avail_e = units_from_prediction(window, 0, unit)
    request = request_policy.request_units(window, unit, rng)
    state = EnvState(
        res_rem=request,
        res_alloc_e=0,
        res_alloc_s=0,
        res_avail_e=avail_e,
        res_avail_s=stable_capacity,
        p=p,
    )
    return state, request


def encode_state(state: EnvState, e_capacity: int, s_capacity: int) -> np.ndarray:
    """Numeric vector for the Q-network: counts normalized by their pool
    capacity (the request remainder by the combined capacity), volatility
    passed through."""

    def norm(count: int, cap: int) -> float:
        return count / cap if cap > 0 else 0.0

    total_cap = e_capacity + s_capacity
    return np.array(
        [
            norm(state.res_rem, total_cap),
            norm(state.res_alloc_e, e_capacity),
            norm(state.res_alloc_s, s_capacity),
            norm(state.res_avail_e, e_capacity),
            norm(state.res_avail_s, s_capacity),
            state.p,
        ],
        dtype=np.float64,
    )


@dataclass
class EpisodeStats:
    """Raw per-episode aggregates (converted to money by the harness)."""

    total_reward: float = 0.0
    ephemeral_unit_steps: int = 0
    stable_unit_steps: int = 0
    violation_steps: int = 0
    lost_units: int = 0
    steps: int = 0
    micro_actions: int = 0


ExperienceHook = Callable[[np.ndarray, int, float, np.ndarray, bool], None]


def run_episode(
    window: TraceWindow,
    policy: Callable[[EnvState, np.ndarray], Action],
    model: CostModel,
    stable_capacity: int,
    p: float = 1.0,
    request_policy: RequestPolicy = RequestPolicy(),
    unit: ResourceUnit = DEFAULT_UNIT,
    k_max: int = K_MAX_DEFAULT,
    rng: Optional[np.random.Generator] = None,
    on_experience: Optional[ExperienceHook] = None,
    event_rows: Optional[list[dict]] = None,
) -> EpisodeStats:
    """Drive one full episode (one window) with a micro-action policy.

    ``on_experience`` receives every micro-transition as
    (state_vec, action, reward, next_state_vec, terminal). The economics
    accrue once per time step: intermediate micro-actions carry zero
    reward (collecting the step rate on every micro-action would pay
    policies for stalling inside the decision loop), and the step-closing
    action carries the settlement reward plus, as its successor, the
    prediction-refreshed state the next decision will see.
    """
    state, request = reset(window, stable_capacity, request_policy, p, unit, rng)
    e_capacity = max(units_from_prediction(window, t, unit) for t in range(len(window)))
    stats = EpisodeStats()

    for t in range(len(window)):
        if t > 0:
            state = refresh_availability(state, window, t, unit)

        decided = decide_step(state, lambda s: policy(s, encode_state(s, e_capacity, stable_capacity)), request, k_max)
        stats.micro_actions += len(decided.actions)

        if on_experience is not None:
            for before, action, after in decided.transitions[:-1]:
                on_experience(
                    encode_state(before, e_capacity, stable_capacity),
                    int(action),
                    0.0,
                    encode_state(after, e_capacity, stable_capacity),
                    False,
                )

        outcome = advance_time(decided.state, window, t, model, request, unit)
        if outcome.terminal:
            successor = outcome.next_state
        else:
            successor = refresh_availability(outcome.next_state, window, t + 1, unit)
        if on_experience is not None:
            before, action, _ = decided.transitions[-1]
            on_experience(
                encode_state(before, e_capacity, stable_capacity),
                int(action),
                outcome.reward,
                encode_state(successor, e_capacity, stable_capacity),
                outcome.terminal,
            )

        settled = outcome.next_state
        stats.total_reward += outcome.reward
        stats.ephemeral_unit_steps += settled.res_alloc_e
        stats.stable_unit_steps += settled.res_alloc_s
        stats.violation_steps += int(outcome.violated)
        stats.lost_units += outcome.lost_units
        stats.steps += 1
        if event_rows is not None:
            event_rows.append(
                {
                    "t": t,
                    "actions": ";".join(a.name for a in decided.actions),
                    "rem": settled.res_rem,
                    "alloc_e": settled.res_alloc_e,
                    "alloc_s": settled.res_alloc_s,
                    "lost_units": outcome.lost_units,
                    "reward": outcome.reward,
                    "violated": int(outcome.violated),
                }
            )
        state = successor
    return stats
