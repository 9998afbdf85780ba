"""Experiment orchestration: wire traces through volatility, environment,
agent or baselines, and the economics into CSV reports.

One episode is one trace window (one simulated day). Windows are split
80/20 train/test in chronological order; the volatility fed to an episode
is always estimated from the window that precedes it in the stream (the
pessimistic prior 1.0 applies to the very first window). Every run is
fully determined by the configuration and a seed, and every summary figure
can be recomputed from the per-step event logs.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import baselines as bl
from .agent import DQNAgent, ExplorationSchedule
from .config import ConfigError, ExperimentConfig
from .economics import DailyLedger, daily_profit
from .environment import (
    Action,
    EpisodeStats,
    run_episode,
    units_from_prediction,
    valid_actions,
    valid_actions_from_vec,
)
from .qnet import TrainingConfig
from .traces import TraceWindow, apply_forecaster, generate_synthetic, load_traces
from .volatility import estimate_volatility


@dataclass(frozen=True)
class EpisodeResult:
    """Per-episode ledger row reported by evaluations."""

    episode: int
    window_index: int
    total_reward: float
    ledger: DailyLedger
    profit: float
    lost_units: int
    stable_pct: float


def load_windows(config: ExperimentConfig) -> list[TraceWindow]:
    t = config.traces
    if t.source == "csv":
        windows = load_traces(t.path, config.host, t.window_len)
    else:
        windows = generate_synthetic(t.seed, t.days, t.profile, config.host)
    if not windows:
        raise ConfigError("trace source produced no complete windows")
    if t.forecast != "provided":
        windows = apply_forecaster(windows, t.forecast)
    return windows


def window_volatilities(windows: list[TraceWindow]) -> list[float]:
    """Volatility handed to episode i comes from window i-1 (prior 1.0)."""
    ps = [1.0]
    for w in windows[:-1]:
        ps.append(estimate_volatility(w).p_hat)
    return ps


def split_windows(n: int, split: float) -> tuple[range, range]:
    n_train = int(n * split)
    return range(n_train), range(n_train, n)


def _stats_to_result(
    episode: int, window_index: int, stats: EpisodeStats, config: ExperimentConfig
) -> EpisodeResult:
    hours = config.economics.step_hours
    ledger = DailyLedger(
        ephemeral_unit_hours=stats.ephemeral_unit_steps * hours,
        stable_unit_hours=stats.stable_unit_steps * hours,
        violation_minutes=stats.violation_steps * config.economics.step_minutes,
    )
    total_unit_steps = stats.ephemeral_unit_steps + stats.stable_unit_steps
    return EpisodeResult(
        episode=episode,
        window_index=window_index,
        total_reward=stats.total_reward,
        ledger=ledger,
        profit=daily_profit(ledger, config.economics, config.penalties),
        lost_units=stats.lost_units,
        stable_pct=stats.stable_unit_steps / total_unit_steps if total_unit_steps else 0.0,
    )


def _stable_capacity(config: ExperimentConfig, window: TraceWindow) -> int:
    peak = max(units_from_prediction(window, t, config.unit) for t in range(len(window)))
    return config.stable_capacity.capacity_for(peak)


def _build_agent(config: ExperimentConfig, seed: int) -> DQNAgent:
    a = config.agent
    return DQNAgent(
        state_dim=6,
        n_actions=5,
        hidden_dim=a.hidden_dim,
        cfg=TrainingConfig(learning_rate=a.learning_rate, batch_size=a.batch_size, gamma=a.gamma),
        exploration=ExplorationSchedule(epsilon=a.epsilon, decay=a.epsilon_decay, epsilon_min=a.epsilon_min),
        replay_capacity=a.replay_capacity,
        target_sync_period=a.target_sync_period,
        bootstrap_valid_fn=valid_actions_from_vec,
        seed=seed,
    )


def _masked_policy(agent: DQNAgent):
    """Policy adapter: the agent picks among actions that are not no-ops in
    the current state (Noop always stays available)."""

    def policy(state, vec):
        return Action(agent.select_action(vec, valid_actions(state)))

    return policy


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def run_training(config: ExperimentConfig, out_dir: str, seed: int | None = None) -> str:
    """Train one agent over the train split; writes ``checkpoint.npz`` and
    ``learning_curve.csv`` into ``out_dir`` and returns the checkpoint path."""
    seed = config.seeds[0] if seed is None else seed
    windows = load_windows(config)
    vols = window_volatilities(windows)
    train_idx, _ = split_windows(len(windows), config.training.split)
    if len(train_idx) == 0:
        raise ConfigError("training split is empty; provide more trace windows")

    agent = _build_agent(config, seed)
    request_rng = np.random.default_rng(seed)
    curve_rows: list[list] = []

    for episode in range(config.training.episodes):
        wi = train_idx[episode % len(train_idx)]
        window = windows[wi]
        losses: list[float] = []

        def observe_and_learn(state_vec, action, reward, next_vec, terminal):
            agent.observe(state_vec, action, reward, next_vec, terminal)
            loss = agent.learn()
            if loss is not None:
                losses.append(loss)

        stats = run_episode(
            window,
            _masked_policy(agent),
            config.economics,
            stable_capacity=_stable_capacity(config, window),
            p=vols[wi],
            request_policy=config.request,
            unit=config.unit,
            k_max=config.agent.k_max,
            rng=request_rng,
            on_experience=observe_and_learn,
        )
        result = _stats_to_result(episode, wi, stats, config)
        curve_rows.append(
            [
                episode,
                wi,
                repr(agent.epsilon),
                repr(result.total_reward),
                repr(result.ledger.violation_minutes),
                repr(result.profit),
                repr(float(np.mean(losses)) if losses else 0.0),
                stats.micro_actions,
            ]
        )
        agent.decay_epsilon()

    os.makedirs(out_dir, exist_ok=True)
    checkpoint = os.path.join(out_dir, "checkpoint.npz")
    agent.save(checkpoint)
    _write_csv(
        os.path.join(out_dir, "learning_curve.csv"),
        ["episode", "window_index", "epsilon", "total_reward", "violation_minutes", "profit", "loss_mean", "micro_actions"],
        curve_rows,
    )
    return checkpoint


def _greedy_agent(checkpoint: str, config: ExperimentConfig) -> DQNAgent:
    agent = DQNAgent.load(checkpoint)
    if agent.net.input_dim != 6 or agent.net.output_dim != 5:
        raise ConfigError("checkpoint layer sizes do not match this environment")
    agent.exploration = ExplorationSchedule(
        epsilon=config.agent.epsilon_min, decay=1.0, epsilon_min=config.agent.epsilon_min
    )
    return agent


def _evaluate_arm(
    arm: str,
    config: ExperimentConfig,
    windows: list[TraceWindow],
    vols: list[float],
    eval_idx: range,
    checkpoint: str | None,
    events_dir: str | None = None,
) -> list[EpisodeResult]:
    """Run one policy arm over the evaluation windows."""
    agent = _greedy_agent(checkpoint, config) if arm == "agent" else None
    request_rng = np.random.default_rng(config.seeds[0])
    results = []
    for n, wi in enumerate(eval_idx):
        window = windows[wi]
        event_rows: list[dict] | None = [] if events_dir is not None else None
        if arm == "agent":
            stats = run_episode(
                window,
                _masked_policy(agent),
                config.economics,
                stable_capacity=_stable_capacity(config, window),
                p=vols[wi],
                request_policy=config.request,
                unit=config.unit,
                k_max=config.agent.k_max,
                rng=request_rng,
                on_experience=None,
                event_rows=event_rows,
            )
        else:
            policy = bl.MarginPolicy(
                kind=arm,
                fixed_fraction=config.baseline.fixed_fraction,
                scavenger_k=config.baseline.scavenger_k,
                history_window=config.baseline.history_window,
            )
            history = windows[wi - 1].samples if wi > 0 else ()
            stats = bl.run_baseline_episode(
                policy,
                window,
                config.economics,
                request_policy=config.request,
                unit=config.unit,
                history=history,
                rng=request_rng,
                event_rows=event_rows,
            )
        results.append(_stats_to_result(n, wi, stats, config))
        if events_dir is not None:
            _write_csv(
                os.path.join(events_dir, f"{arm}_episode_{n:03d}.csv"),
                ["t", "actions", "rem", "alloc_e", "alloc_s", "lost_units", "reward", "violated"],
                [[r["t"], r["actions"], r["rem"], r["alloc_e"], r["alloc_s"], r["lost_units"], repr(r["reward"]), r["violated"]] for r in event_rows],
            )
    return results


def _result_rows(results: list[EpisodeResult]) -> list[list]:
    return [
        [
            r.episode,
            r.window_index,
            repr(r.total_reward),
            repr(r.ledger.ephemeral_unit_hours),
            repr(r.ledger.stable_unit_hours),
            repr(r.ledger.violation_minutes),
            repr(r.profit),
            r.lost_units,
            repr(r.stable_pct),
        ]
        for r in results
    ]


EPISODE_HEADER = [
    "episode", "window_index", "total_reward", "ephemeral_unit_hours",
    "stable_unit_hours", "violation_minutes", "profit", "lost_units", "stable_pct",
]


def summarize(results: list[EpisodeResult]) -> dict[str, tuple[float, float, float]]:
    """mean/min/max of the headline metrics over episodes."""
    metrics = {
        "profit": [r.profit for r in results],
        "violation_minutes": [r.ledger.violation_minutes for r in results],
        "ephemeral_unit_hours": [r.ledger.ephemeral_unit_hours for r in results],
        "stable_pct": [r.stable_pct for r in results],
    }
    return {
        name: (float(np.mean(vals)), float(min(vals)), float(max(vals)))
        for name, vals in metrics.items()
    }


def run_evaluation(config: ExperimentConfig, checkpoint: str | None, out_dir: str) -> list[EpisodeResult]:
    """Evaluate the configured policy arm on the test split; writes
    ``episodes.csv``, ``summary.csv``, ``summary.txt``, and per-episode
    event logs under ``events/``."""
    windows = load_windows(config)
    vols = window_volatilities(windows)
    _, eval_idx = split_windows(len(windows), config.training.split)
    if len(eval_idx) == 0:
        raise ConfigError("evaluation split is empty; provide more trace windows")
    if config.policy == "agent" and checkpoint is None:
        raise ConfigError("evaluating the agent arm requires a checkpoint")

    results = _evaluate_arm(
        config.policy, config, windows, vols, eval_idx, checkpoint, events_dir=os.path.join(out_dir, "events")
    )
    _write_csv(os.path.join(out_dir, "episodes.csv"), EPISODE_HEADER, _result_rows(results))

    summary = summarize(results)
    _write_csv(
        os.path.join(out_dir, "summary.csv"),
        ["metric", "mean", "min", "max"],
        [[name, repr(mean), repr(lo), repr(hi)] for name, (mean, lo, hi) in summary.items()],
    )
    lines = [f"policy: {config.policy}", f"episodes: {len(results)}"]
    for name, (mean, lo, hi) in summary.items():
        lines.append(f"{name}: mean={mean:.6f} min={lo:.6f} max={hi:.6f}")
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return results


COMPARISON_HEADER = ["policy", "profit", "violation_min", "ephem_unit_hours", "stable_pct"]


def run_comparison(config: ExperimentConfig, checkpoint: str, out_dir: str) -> dict[str, list[EpisodeResult]]:
    """Run agent, fixed, and scavenger arms over bit-identical evaluation
    windows; writes ``comparison.csv`` (totals per arm) and
    ``comparison_days.csv`` (per-day rows)."""
    windows = load_windows(config)
    vols = window_volatilities(windows)
    _, eval_idx = split_windows(len(windows), config.training.split)
    if len(eval_idx) == 0:
        raise ConfigError("evaluation split is empty; provide more trace windows")

    arms = ["agent", "fixed", "scavenger"]
    all_results: dict[str, list[EpisodeResult]] = {}
    comparison_rows = []
    day_rows = []
    for arm in arms:
        results = _evaluate_arm(arm, config, windows, vols, eval_idx, checkpoint)
        all_results[arm] = results
        total_unit_hours = sum(r.ledger.ephemeral_unit_hours + r.ledger.stable_unit_hours for r in results)
        stable_hours = sum(r.ledger.stable_unit_hours for r in results)
        comparison_rows.append(
            [
                arm,
                repr(sum(r.profit for r in results)),
                repr(sum(r.ledger.violation_minutes for r in results)),
                repr(sum(r.ledger.ephemeral_unit_hours for r in results)),
                repr(stable_hours / total_unit_hours if total_unit_hours else 0.0),
            ]
        )
        for r in results:
            day_rows.append(
                [
                    arm,
                    r.episode,
                    r.window_index,
                    repr(r.profit),
                    repr(r.ledger.violation_minutes),
                    repr(r.ledger.ephemeral_unit_hours),
                    repr(r.stable_pct),
                ]
            )
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(os.path.join(out_dir, "comparison.csv"), COMPARISON_HEADER, comparison_rows)
    _write_csv(
        os.path.join(out_dir, "comparison_days.csv"),
        ["policy", "episode", "window_index", "profit", "violation_minutes", "ephemeral_unit_hours", "stable_pct"],
        day_rows,
    )
    return all_results
