#!/usr/bin/env python3
"""Binary-outcome counterfactual elicitation with paired-seed criteria.

Nine grid targets per repetition; the oracle draws true Bernoulli outcomes
for the queried counterfactuals.  Reports mean correct-decision proportion
per criterion per step with bootstrap CIs.
"""

import argparse

from dmaware.experiments import ExperimentConfig, run_al, write_outputs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=30)
    ap.add_argument("--queries", type=int, default=5)
    ap.add_argument(
        "--criteria",
        default="dm_aware,dm_aware_explore,targeted_ig,eig,uncertainty",
        help="comma-separated criterion names",
    )
    ap.add_argument("--knn", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--comparative", action="store_true", help="comparative queries instead of point")
    ap.add_argument("--out", default="results/binary")
    args = ap.parse_args()

    cfg = ExperimentConfig(
        kind="al_comparative" if args.comparative else "al_binary",
        repetitions=args.reps,
        n_queries=args.queries,
        criteria=tuple(args.criteria.split(",")),
        knn_k=args.knn,
        seed=args.seed,
        jobs=args.jobs,
        out_dir=args.out,
    )
    result = run_al(cfg)
    write_outputs(cfg.out_dir, result, cfg)
    for crit in cfg.criteria:
        means = [
            result["summaries"][crit][str(s)]["correct"]["mean"]
            for s in range(cfg.n_queries + 1)
        ]
        print(f"{crit}: correct by step {[f'{m:.3f}' for m in means]}")
    if result["failures"]:
        print(f"excluded repetitions: {len(result['failures'])}")
    print(f"rows written to {cfg.out_dir}/results.csv")


if __name__ == "__main__":
    main()
