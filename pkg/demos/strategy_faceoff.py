"""Compare selection strategies on the same graphs, seed by seed.

Runs the greedy gain-propagation selector against the random and
max-entropy baselines (and optionally its own ablations) across a
loop of seeds, then prints a per-seed table and the mean gap. With
--hard-baselines the baselines buy conventional full labels at
class_count - 1 units each from the same budget, which is the
accounting used for the headline comparisons.

    python demos/strategy_faceoff.py
    python demos/strategy_faceoff.py --seeds 0 1 2 3 4 --ablations
    python demos/strategy_faceoff.py --hard-baselines --out runs/faceoff
"""

import argparse

import numpy as np

from igp.graph import SyntheticSpec, generate_synthetic
from igp.harness import ExperimentConfig, apply_strategy, run_episode, summarize

BASELINES = ["random", "uncertainty"]
ABLATIONS = ["igp-no-it", "igp-no-is", "igp-no-im", "igp-no-nl"]


def main():
    parser = argparse.ArgumentParser(
        description="Strategy comparison on a shared desk-scale benchmark."
    )
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    parser.add_argument("--budget", type=float, default=30.0)
    parser.add_argument("--batch", type=int, default=5)
    parser.add_argument("--noise", type=float, default=1.0)
    parser.add_argument("--ablations", action="store_true",
                        help="also run the four ablated selectors")
    parser.add_argument("--hard-baselines", action="store_true",
                        help="baselines pay c-1 units per conventional label")
    parser.add_argument("--out", help="write curves.csv/report.json here")
    args = parser.parse_args()

    spec = SyntheticSpec(
        blocks=3, block_size=50, intra_prob=0.1, inter_prob=0.01,
        feature_dim=16, noise=args.noise, seed=0,
    )
    dataset = generate_synthetic(spec)
    base = ExperimentConfig(
        synthetic=spec, budget=args.budget, batch_size=args.batch,
        seeds=list(args.seeds), output_dir=args.out,
    )
    strategies = ["igp"] + BASELINES + (ABLATIONS if args.ablations else [])

    print(f"dataset {dataset.name}, budget {args.budget:.0f} units, "
          f"seeds {args.seeds}")
    episodes = []
    for strategy in strategies:
        cfg = apply_strategy(base, strategy)
        if args.hard_baselines and strategy in BASELINES:
            cfg = apply_strategy(
                ExperimentConfig(**{**vars(base), "hard_queries": True}),
                strategy,
            )
        for seed in args.seeds:
            record = run_episode(dataset, cfg, seed)
            episodes.append(record)
            print(f"  {strategy:<12} seed {seed}: "
                  f"acc {100 * record.final_accuracy:6.2f}%  "
                  f"spent {record.spent:5.0f}  queries {record.queries}")

    print("\nmeans over seeds:")
    summaries = summarize(episodes)
    igp_mean = summaries["igp"].final_accuracy_mean
    for name, summary in summaries.items():
        gap = 100 * (igp_mean - summary.final_accuracy_mean)
        tag = "" if name == "igp" else f"  (igp {gap:+.2f})"
        print(f"  {name:<12} {100 * summary.final_accuracy_mean:6.2f}% "
              f"+- {100 * summary.final_accuracy_std:.2f}{tag}")

    if args.out:
        from igp.harness import ExperimentReport, write_report

        report = ExperimentReport(
            dataset=dataset.name, budget=base.budget,
            budget_mode=base.budget_mode, seeds=list(args.seeds),
            strategies=summaries, episodes=episodes, failures=[],
        )
        write_report(report, args.out)
        print(f"\nreport written to {args.out}/")


if __name__ == "__main__":
    main()
