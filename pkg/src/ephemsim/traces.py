"""Host utilization traces: CSV ingest, synthetic generation, and forecasting.

A trace is a per-host time series sampled every 3 minutes. Each sample carries
the actual CPU/memory utilization of the host together with the utilization
that was predicted for that step. Traces are consumed in fixed-length windows
(default 480 steps = 24 hours), one window per simulated day.

CSV format (one row per step)::

    t,cpu_used,mem_used,cpu_pred,mem_pred

with ``t`` a non-negative consecutive integer starting at 0 and the remaining
fields decimal fractions in [0, 1]. In memory, sample indices are local to
their window (0 .. window_len-1).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

WINDOW_LEN = 480  # 24 h at 3-minute sampling
CSV_HEADER = ["t", "cpu_used", "mem_used", "cpu_pred", "mem_pred"]


class TraceParseError(ValueError):
    """Malformed trace file (bad header, non-numeric field, broken index)."""


class TraceValidationError(ValueError):
    """Structurally valid trace row with an out-of-range value."""


@dataclass(frozen=True)
class TraceSample:
    """One 3-minute sample of actual and predicted host utilization."""

    t: int
    cpu_used: float
    mem_used: float
    cpu_pred: float
    mem_pred: float

    def __post_init__(self) -> None:
        for name in ("cpu_used", "mem_used", "cpu_pred", "mem_pred"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise TraceValidationError(f"{name}={v} outside [0, 1]")
        if self.t < 0:
            raise TraceValidationError(f"t={self.t} is negative")


@dataclass(frozen=True)
class HostSpec:
    """Physical capacity of one host."""

    cpu_cores: int
    mem_gb: int

    def __post_init__(self) -> None:
        if self.cpu_cores <= 0 or self.mem_gb <= 0:
            raise ValueError("host capacity fields must be strictly positive")


@dataclass(frozen=True)
class TraceWindow:
    """One fixed-length block of samples for a host (one simulated day)."""

    host: HostSpec
    samples: tuple[TraceSample, ...]

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class GeneratorProfile:
    """Shape parameters for the synthetic trace generator.

    ``p_true`` is the per-step probability that the generated prediction
    underestimates the actual utilization (in at least one metric); the
    generator enforces the sign of the prediction error exactly, step by
    step, so the indicator series is i.i.d. Bernoulli(p_true).

    ``peak_step`` places the diurnal utilization maximum within the day.
    The default of 0 starts each window at its utilization peak, i.e. at
    the step with the least reclaimable capacity, so a request captured at
    window start stays satisfiable for the rest of the day.

    ``shock_scale`` bounds the magnitude of the injected prediction errors;
    it defaults to ``noise_scale`` so the error size tracks the ordinary
    variability unless decoupled explicitly.
    """

    base_load: float = 0.35
    diurnal_amplitude: float = 0.20
    noise_scale: float = 0.05
    p_true: float = 0.5
    shock_scale: float | None = None
    peak_step: int = 0
    window_len: int = WINDOW_LEN

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_true <= 1.0:
            raise ValueError(f"p_true={self.p_true} outside [0, 1]")
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")

    @property
    def error_scale(self) -> float:
        return self.noise_scale if self.shock_scale is None else self.shock_scale


def load_traces(path: str, host: HostSpec, window_len: int = WINDOW_LEN) -> list[TraceWindow]:
    """Read a trace CSV and partition it into consecutive full windows.

    A trailing block shorter than ``window_len`` is discarded (padding would
    fabricate utilization data). Raises :class:`TraceParseError` for
    malformed rows (with the 1-based line number) and
    :class:`TraceValidationError` for out-of-range values.
    """
    rows: list[tuple[float, float, float, float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceParseError(f"{path}: empty file") from None
        if header != CSV_HEADER:
            raise TraceParseError(
                f"{path}: line 1: expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise TraceParseError(f"{path}: line {lineno}: expected 5 fields, got {len(row)}")
            try:
                t = int(row[0])
                values = tuple(float(v) for v in row[1:])
            except ValueError as exc:
                raise TraceParseError(f"{path}: line {lineno}: {exc}") from None
            expected_t = len(rows)
            if t != expected_t:
                raise TraceParseError(
                    f"{path}: line {lineno}: step index {t} is not consecutive (expected {expected_t})"
                )
            for name, v in zip(CSV_HEADER[1:], values):
                if not 0.0 <= v <= 1.0:
                    raise TraceValidationError(f"{path}: line {lineno}: {name}={v} outside [0, 1]")
            rows.append(values)

    windows = []
    for start in range(0, len(rows) - len(rows) % window_len, window_len):
        samples = tuple(
            TraceSample(i, *rows[start + i]) for i in range(window_len)
        )
        windows.append(TraceWindow(host=host, samples=samples))
    return windows


def save_traces(path: str, windows: Sequence[TraceWindow]) -> None:
    """Write windows back to the CSV trace format with global step numbering."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        t = 0
        for window in windows:
            for s in window.samples:
                writer.writerow([t, repr(s.cpu_used), repr(s.mem_used), repr(s.cpu_pred), repr(s.mem_pred)])
                t += 1


def generate_synthetic(
    seed: int,
    days: int,
    profile: GeneratorProfile,
    host: HostSpec,
) -> list[TraceWindow]:
    """Generate ``days`` windows with sign-controlled prediction errors.

    The prediction follows a smooth sinusoidal day profile plus Gaussian
    noise; actual utilization is the prediction plus an injected shock
    whose sign is drawn per step: with probability p_true the actual
    exceeds the prediction (demand spiked, reclaimable capacity was lost),
    otherwise it falls at or below it. Predictions are kept far enough
    from 1 that an upward shock always fits, so the underestimation
    indicator is exactly Bernoulli(p_true). Bit-identical for a fixed seed.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    rng = np.random.default_rng(seed)
    n = days * profile.window_len
    steps = np.arange(n)

    shock = 0.01 + rng.uniform(0.0, profile.error_scale, (2, n))
    pred_ceiling = 0.98 - (0.01 + profile.error_scale)
    if pred_ceiling <= 0.02:
        raise ValueError("error scale too large: no room left for utilization shocks")
    phase = 2.0 * math.pi * (steps - profile.peak_step) / profile.window_len
    cpu_pred = profile.base_load + profile.diurnal_amplitude * np.cos(phase)
    mem_pred = profile.base_load + profile.diurnal_amplitude * np.cos(phase + 0.5)
    cpu_pred = np.clip(cpu_pred + rng.normal(0.0, profile.noise_scale, n), 0.02, pred_ceiling)
    mem_pred = np.clip(mem_pred + rng.normal(0.0, profile.noise_scale, n), 0.02, pred_ceiling)

    under = rng.random(n) < profile.p_true
    cpu = np.where(under, cpu_pred + shock[0], np.clip(cpu_pred - shock[0], 0.0, 1.0))
    mem = np.where(under, mem_pred + shock[1], np.clip(mem_pred - shock[1], 0.0, 1.0))

    windows = []
    for d in range(days):
        lo = d * profile.window_len
        samples = tuple(
            TraceSample(i, float(cpu[lo + i]), float(mem[lo + i]), float(cpu_pred[lo + i]), float(mem_pred[lo + i]))
            for i in range(profile.window_len)
        )
        windows.append(TraceWindow(host=host, samples=samples))
    return windows


def forecast_next_window(history: Sequence[TraceWindow]) -> list[tuple[float, float]]:
    """Seasonal-naive forecast: next window's predictions copy the most
    recent window's actual utilization, step for step."""
    if not history:
        raise ValueError("forecast requires a non-empty history")
    last = history[-1]
    return [(s.cpu_used, s.mem_used) for s in last.samples]


FORECASTERS: dict[str, Callable[[Sequence[TraceWindow]], list[tuple[float, float]]]] = {
    "seasonal_naive": forecast_next_window,
}


def apply_forecaster(windows: Sequence[TraceWindow], name: str) -> list[TraceWindow]:
    """Rewrite each window's predictions using the named forecaster fed with
    all preceding windows. The first window keeps its stored predictions."""
    try:
        forecaster = FORECASTERS[name]
    except KeyError:
        raise ValueError(f"unknown forecaster {name!r} (have {sorted(FORECASTERS)})") from None
    out = [windows[0]]
    for i in range(1, len(windows)):
        preds = forecaster(windows[:i])
        if len(preds) != len(windows[i]):
            raise ValueError("forecast length does not match window length")
        samples = tuple(
            TraceSample(s.t, s.cpu_used, s.mem_used, cp, mp)
            for s, (cp, mp) in zip(windows[i].samples, preds)
        )
        out.append(TraceWindow(host=windows[i].host, samples=samples))
    return out
