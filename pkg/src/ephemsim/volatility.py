"""Volatility estimation for reclaimable capacity.

Reclaimed resources are lost whenever the forecast underestimated the real
utilization of a host. Over a window this loss event is modeled as a
Bernoulli variable; its empirical rate (the fraction of underestimated
steps) is the single volatility figure handed to allocation policies. Only
the sign of the prediction error matters, not its magnitude: a step that
underestimated by 1% counts the same as one that underestimated by 50%.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .traces import HostSpec, TraceSample, TraceWindow


@dataclass(frozen=True)
class VolatilityEstimate:
    """Empirical loss probability over one window."""

    p_hat: float
    window_len: int
    underestimation_count: int

    def __post_init__(self) -> None:
        if not 0 <= self.underestimation_count <= self.window_len:
            raise ValueError("underestimation_count outside [0, window_len]")
        if self.p_hat != self.underestimation_count / self.window_len:
            raise ValueError("p_hat must equal underestimation_count / window_len")


def indicator_z(sample: TraceSample) -> int:
    """1 if the prediction underestimated CPU or memory usage, else 0.

    An exact prediction (error 0) is not an underestimate.
    """
    return int(sample.cpu_pred < sample.cpu_used or sample.mem_pred < sample.mem_used)


def estimate_volatility(window: TraceWindow) -> VolatilityEstimate:
    """Mean of the underestimation indicator over the window."""
    n = len(window)
    if n == 0:
        raise ValueError("cannot estimate volatility of an empty window")
    count = sum(indicator_z(s) for s in window.samples)
    return VolatilityEstimate(p_hat=count / n, window_len=n, underestimation_count=count)


def aggregate_pool_volatility(
    estimates: Sequence[VolatilityEstimate], hosts: Sequence[HostSpec]
) -> float:
    """Single pool-level rate from per-host estimates, weighted by host CPU
    capacity (larger hosts contribute more reclaimable units)."""
    if len(estimates) != len(hosts) or not estimates:
        raise ValueError("need one estimate per host, at least one host")
    total = sum(h.cpu_cores for h in hosts)
    return sum(e.p_hat * h.cpu_cores for e, h in zip(estimates, hosts)) / total
