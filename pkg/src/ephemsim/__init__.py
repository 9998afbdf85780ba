"""Simulator and learning agent for reselling reclaimed cloud capacity.

Volatile (reclaimable) host capacity is mixed with stable on-demand units
to serve customer requests under an SLA penalty model; a DQN agent decides
the mix and is benchmarked against safety-margin baselines on utilization
traces.
"""

__version__ = "0.1.0"
