import numpy as np
import pytest

from ephemsim.traces import HostSpec, TraceSample, TraceWindow


@pytest.fixture
def host():
    return HostSpec(cpu_cores=48, mem_gb=192)


def make_window(host, rows):
    """Build a TraceWindow from (cpu_used, mem_used, cpu_pred, mem_pred) rows."""
    samples = tuple(TraceSample(i, *r) for i, r in enumerate(rows))
    return TraceWindow(host=host, samples=samples)


def flat_window(host, used, pred, length=480):
    """Constant-utilization window (same value for cpu and memory)."""
    return make_window(host, [(used, used, pred, pred)] * length)


@pytest.fixture
def window_factory():
    return make_window
