"""Command-line entry point.

Subcommands:
    gen-traces  write a synthetic trace CSV
    train       train the allocation agent per an experiment config
    eval        evaluate a policy arm from a checkpoint
    compare     run agent vs. fixed vs. scavenger on identical windows
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .traces import GeneratorProfile, HostSpec, generate_synthetic, save_traces


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ephemsim")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-traces", help="generate a synthetic utilization trace CSV")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--days", type=int, required=True)
    gen.add_argument("--p-true", type=float, required=True, help="per-step underestimation probability")
    gen.add_argument("--out", required=True)
    gen.add_argument("--cpu-cores", type=int, default=48)
    gen.add_argument("--mem-gb", type=int, default=192)
    gen.add_argument("--base-load", type=float, default=0.35)
    gen.add_argument("--diurnal-amplitude", type=float, default=0.20)
    gen.add_argument("--noise-scale", type=float, default=0.05)

    train = sub.add_parser("train", help="train the DQN allocation agent")
    train.add_argument("--config", required=True)
    train.add_argument("--out", required=True)

    ev = sub.add_parser("eval", help="evaluate the configured policy arm")
    ev.add_argument("--config", required=True)
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--out", required=True)

    cmp_ = sub.add_parser("compare", help="compare agent vs. safety-margin baselines")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--checkpoint", required=True)
    cmp_.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen-traces":
            profile = GeneratorProfile(
                base_load=args.base_load,
                diurnal_amplitude=args.diurnal_amplitude,
                noise_scale=args.noise_scale,
                p_true=args.p_true,
            )
            host = HostSpec(args.cpu_cores, args.mem_gb)
            windows = generate_synthetic(args.seed, args.days, profile, host)
            save_traces(args.out, windows)
            print(f"wrote {len(windows)} windows ({len(windows) * profile.window_len} rows) to {args.out}")
        elif args.command == "train":
            from .harness import run_training

            config = load_config(args.config)
            checkpoint = run_training(config, args.out)
            print(f"checkpoint: {checkpoint}")
        elif args.command == "eval":
            from .harness import run_evaluation, summarize

            config = load_config(args.config)
            results = run_evaluation(config, args.checkpoint, args.out)
            for name, (mean, lo, hi) in summarize(results).items():
                print(f"{name}: mean={mean:.6f} min={lo:.6f} max={hi:.6f}")
        elif args.command == "compare":
            from .harness import run_comparison

            config = load_config(args.config)
            results = run_comparison(config, args.checkpoint, args.out)
            for arm, episodes in results.items():
                profit = sum(r.profit for r in episodes)
                viol = sum(r.ledger.violation_minutes for r in episodes)
                print(f"{arm}: profit={profit:.6f} violation_min={viol:.1f}")
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
