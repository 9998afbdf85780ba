"""Prices, per-step rewards, and daily SLA penalty accounting.

Unit prices are hourly (modeled on on-demand vs. spot pricing of a
2 vCPU / 8 GB instance). Rewards are evaluated per simulation step, so
hourly prices are prorated by ``step_minutes / 60``. Reported profits use a
tiered discount on the ephemeral revenue, driven by the cumulative SLA
violation time of the day; the per-missing-unit price ``cpv`` only shapes
the learning signal and never enters reported profits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class CostModel:
    """Hourly unit prices plus the sampling period used for proration.

    cpe: price of one ephemeral (reclaimed) unit.
    cps: price of one stable on-demand unit; must exceed cpe.
    cpv: penalty rate per requested-but-missing unit (reward shaping only).
    """

    cpe: float = 0.0317
    cps: float = 0.0928
    cpv: float = 0.1856  # 2 * cps: violating must cost more than buying stable
    step_minutes: float = 3.0

    def __post_init__(self) -> None:
        if min(self.cpe, self.cps, self.cpv) < 0.0:
            raise ValueError("prices must be non-negative")
        if not self.cpe < self.cps:
            raise ValueError("ephemeral units must be cheaper than stable units (cpe < cps)")
        if self.step_minutes <= 0.0:
            raise ValueError("step_minutes must be positive")

    @property
    def step_hours(self) -> float:
        return self.step_minutes / 60.0


@dataclass(frozen=True)
class PenaltySchedule:
    """Ordered half-open violation-time tiers: (lower, upper] -> discount.

    Lower bounds are exclusive and upper bounds inclusive, so the schedule
    is a total function of violation minutes; time at or below the first
    lower bound incurs no discount.
    """

    tiers: tuple[tuple[float, float, float], ...] = (
        (15.0, 120.0, 0.10),
        (120.0, 720.0, 0.15),
        (720.0, math.inf, 0.30),
    )

    def __post_init__(self) -> None:
        prev_upper = 0.0
        prev_discount = 0.0
        for lower, upper, disc in self.tiers:
            if lower < prev_upper:
                raise ValueError("tiers must be ordered and non-overlapping")
            if upper <= lower:
                raise ValueError("tier upper bound must exceed its lower bound")
            if not 0.0 <= disc <= 1.0:
                raise ValueError("discounts must lie in [0, 1]")
            if disc < prev_discount:
                raise ValueError("discounts must be non-decreasing across tiers")
            prev_upper = upper
            prev_discount = disc


@dataclass(frozen=True)
class DailyLedger:
    """What one simulated day consumed and violated."""

    ephemeral_unit_hours: float = 0.0
    stable_unit_hours: float = 0.0
    violation_minutes: float = 0.0

    def __post_init__(self) -> None:
        if min(self.ephemeral_unit_hours, self.stable_unit_hours, self.violation_minutes) < 0.0:
            raise ValueError("ledger fields must be non-negative")
        if self.violation_minutes > 1440.0:
            raise ValueError("violation_minutes cannot exceed one day")


def step_reward(alloc_e: int, alloc_s: int, rem: int, model: CostModel) -> float:
    """Per-step net rate: ephemeral revenue minus stable cost minus the
    penalty on requested units not provided, prorated to one step."""
    if min(alloc_e, alloc_s, rem) < 0:
        raise ValueError("unit counts must be non-negative")
    hourly = alloc_e * model.cpe - alloc_s * model.cps - rem * model.cpv
    return hourly * model.step_hours


def discount(violation_minutes: float, schedule: PenaltySchedule) -> float:
    """Discount fraction of the tier containing the violation time."""
    if violation_minutes < 0.0:
        raise ValueError("violation_minutes must be non-negative")
    for lower, upper, disc in schedule.tiers:
        if lower < violation_minutes <= upper:
            return disc
    return 0.0


def daily_profit(ledger: DailyLedger, model: CostModel, schedule: PenaltySchedule) -> float:
    """Ephemeral revenue minus stable cost minus the SLA discount applied to
    that revenue."""
    gross = ledger.ephemeral_unit_hours * model.cpe
    sla_cost = gross * discount(ledger.violation_minutes, schedule)
    return gross - ledger.stable_unit_hours * model.cps - sla_cost
