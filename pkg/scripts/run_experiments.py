#!/usr/bin/env python3
"""Run the benchmark suites and write their CSVs.

Presets:
  desk  30 simulations per scenario (matches the acceptance suite scale)
  full  100 simulations per scenario

Examples:
  python scripts/run_experiments.py --suite auc --scale desk --out results/
  python scripts/run_experiments.py --suite all --scale full --jobs 4 --out results/
"""

import argparse
import sys
from pathlib import Path

from sabs.experiment import ExperimentConfig, prior_ablation, run_experiment

SUITES = ("auc", "estimation", "ablation", "all")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--suite", choices=SUITES, default="all")
    parser.add_argument("--scale", choices=("desk", "full"), default="desk")
    parser.add_argument("--scenarios", default="1,2,1-discrete,2-discrete")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=2)
    parser.add_argument("--out", default="results")
    args = parser.parse_args(argv)

    n_sims = 30 if args.scale == "desk" else 100
    out = Path(args.out)
    for scenario in args.scenarios.split(","):
        scenario = scenario.strip()
        discrete = scenario.endswith("-discrete")
        cfg = ExperimentConfig(
            scenario=scenario,
            n_sims=n_sims,
            n_obs=5000,
            n_exp=(50, 100, 300),
            n_test=1000,
            scorer="discrete" if discrete else "mcmc",
            seed=args.seed,
            jobs=args.jobs,
            fit_estimators=args.suite in ("estimation", "all"),
        )
        subdir = out / f"scenario-{scenario}"
        if args.suite in ("auc", "estimation", "all"):
            print(f"[{scenario}] running {n_sims} simulations ...", flush=True)
            result = run_experiment(cfg, out_dir=subdir)
            for n_e in cfg.n_exp:
                print(f"[{scenario}] n_e={n_e}: AUC={result.auc(n_e):.3f}")
            if result.failures:
                print(f"[{scenario}] {len(result.failures)} failed sims (see manifest)")
        if args.suite in ("ablation", "all") and discrete:
            print(f"[{scenario}] prior ablation ...", flush=True)
            prior_ablation(cfg, out_dir=subdir)
    print(f"wrote results under {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
