"""Command-line front end.

Subcommands: ``simulate`` (draw benchmark datasets), ``score`` (posterior
that a named set is an sABS), ``find`` (greedy search plus optional
estimator), ``experiment`` (seeded simulation batches with CSV output).

Exit codes: 0 success, 2 usage, 3 data error, 4 MCMC convergence failure.
Every artifact embeds the resolved configuration and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .diagram import DiagramError
from .discrete import ScoreError
from .estimate import (
    DIRICHLET,
    LOGISTIC_MODEL,
    POOLED,
    EstimationError,
    fit_estimator,
)
from .experiment import ExperimentConfig, prior_ablation, run_experiment
from .mcmc import McmcConfig, dump_chain, sample_posterior
from .scm import (
    CONTINUOUS,
    EXPERIMENTAL,
    OBSERVATIONAL,
    SOURCE,
    TARGET,
    SimulationError,
    build_scenario,
    load_dataset,
    load_spec,
    sample,
    save_dataset,
    save_spec,
)
from .search import NAN, find_sabs, make_scorer

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4

SCENARIO_CHOICES = ("1", "2", "1-discrete", "2-discrete")

_DATA_ERRORS = (
    DiagramError,
    ScoreError,
    SimulationError,
    EstimationError,
    ValueError,
    KeyError,
    OSError,
    json.JSONDecodeError,
)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"cannot parse integer list {text!r}") from exc
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("expected comma-separated positive integers")
    return values


def _name_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _mcmc_config(args: argparse.Namespace) -> McmcConfig:
    return McmcConfig(
        n_samples=args.mcmc_samples,
        burn_in=args.mcmc_burn_in,
        thinning=args.mcmc_thin,
        n_prior_draws=args.mcmc_prior_draws,
        seed=args.seed,
    )


def _add_mcmc_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mcmc-samples", type=_positive_int, default=2000,
                   help="kept posterior draws per chain")
    p.add_argument("--mcmc-burn-in", type=int, default=2000)
    p.add_argument("--mcmc-thin", type=_positive_int, default=5)
    p.add_argument("--mcmc-prior-draws", type=_positive_int, default=20000,
                   help="prior draws for the alternative-hypothesis average")


def _resolved_config(args: argparse.Namespace) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, default=str)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    if args.spec:
        spec = load_spec(args.spec)
    else:
        spec = build_scenario(args.scenario, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d_obs = sample(spec, TARGET, OBSERVATIONAL, args.n_obs, args.seed * 3 + 1)
    d_exp = sample(spec, SOURCE, EXPERIMENTAL, args.n_exp, args.seed * 3 + 2)
    save_dataset(d_obs, out / "obs")
    save_dataset(d_exp, out / "exp")
    written = ["obs.csv", "exp.csv"]
    if args.n_test:
        d_test = sample(spec, TARGET, EXPERIMENTAL, args.n_test, args.seed * 3 + 3)
        save_dataset(d_test, out / "test")
        written.append("test.csv")
    save_spec(spec, out / "spec.json")
    with open(out / "manifest.json", "w") as fh:
        json.dump({"config": _resolved_config(args)}, fh, indent=2, default=str)
        fh.write("\n")
    print(f"wrote {', '.join(written)} (+ schemas, spec.json, manifest.json) to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------

def cmd_score(args: argparse.Namespace) -> int:
    de = load_dataset(args.exp)
    do = load_dataset(args.obs)
    scorer = _build_scorer(args)
    res = scorer.score(de, do, args.y, args.x, args.z)
    payload = res.to_json()
    payload["config"] = _resolved_config(args)
    if args.chain_dump and args.scorer == "mcmc" and do.n:
        # the observational chain is seeded identically inside the scorer
        post = sample_posterior(do, args.y, args.x, args.z, cfg=_mcmc_config(args))
        dump_chain(post, args.chain_dump, args.z)
        payload["chain_dump"] = args.chain_dump
    _emit_json(payload, args.out)
    if res.warnings:
        print("convergence diagnostics failed:", "; ".join(res.warnings), file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def _build_scorer(args: argparse.Namespace):
    if args.scorer == "discrete":
        return make_scorer("discrete", bins=args.bins, hz_prior=args.hz_prior)
    return make_scorer("mcmc", cfg=_mcmc_config(args), hz_prior=args.hz_prior)


# ---------------------------------------------------------------------------
# find
# ---------------------------------------------------------------------------

def cmd_find(args: argparse.Namespace) -> int:
    de = load_dataset(args.exp)
    do = load_dataset(args.obs)
    scorer = _build_scorer(args)
    outcome = find_sabs(de, do, args.y, args.x, args.candidates, scorer, t=args.threshold)
    for z, score in outcome.trace:
        print(f"  step: z={{{','.join(z)}}} log_ml_h={score:.4f}", file=sys.stderr)
    payload = outcome.to_json()
    payload["config"] = _resolved_config(args)
    if outcome.decision != NAN:
        model = LOGISTIC_MODEL if _any_continuous(do, outcome.z_star) or args.scorer == "mcmc" else DIRICHLET
        est = fit_estimator(
            de, do, args.y, args.x, outcome.z_star, POOLED, model,
            bins=args.bins, cfg=_mcmc_config(args),
        )
        payload["estimator"] = _estimator_summary(est)
        if args.predict:
            query = load_dataset(args.predict)
            probs = est.predict_proba(query)
            target = args.predictions or "predictions.csv"
            _write_predictions(Path(target), probs)
            payload["predictions"] = str(target)
    _emit_json(payload, args.out)
    return EXIT_OK


def _any_continuous(d, names) -> bool:
    return any(d.meta[n].kind == CONTINUOUS for n in names if n in d.meta)


def _estimator_summary(est) -> dict:
    summary = {
        "model": est.model,
        "source": est.source,
        "z": list(est.z),
        "n_fit": est.n_fit,
    }
    if est.model == DIRICHLET:
        summary["predictive_table"] = est.table.tolist()
    else:
        summary["theta_mean"] = est.thetas.mean(axis=0).tolist()
        summary["theta_sd"] = est.thetas.std(axis=0).tolist()
    return summary


def _write_predictions(path: Path, probs: np.ndarray) -> None:
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow([f"p_y{k}" for k in range(probs.shape[1])])
        for row in probs:
            writer.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig(
        scenario=args.scenario,
        n_sims=args.sims,
        n_obs=args.n_obs,
        n_exp=args.n_exp,
        n_test=args.n_test,
        scorer=args.scorer,
        threshold=args.threshold,
        hz_prior=args.hz_prior,
        bins=args.bins,
        seed=args.seed,
        jobs=args.jobs,
        mcmc=_mcmc_config(args),
    )
    out = Path(args.out)
    result = run_experiment(cfg, out_dir=out)
    if args.ablation:
        prior_ablation(cfg, out_dir=out)
    for n_e in cfg.n_exp:
        try:
            print(f"n_e={n_e}: AUC={result.auc(n_e):.3f}")
        except EstimationError:
            print(f"n_e={n_e}: AUC undefined (single-class batch)")
        for method, table in sorted(result.ce_by_method(n_e).items()):
            print(f"  {method}: median CE={np.median(list(table.values())):.4f} over {len(table)} sims")
    if result.failures:
        print(f"{len(result.failures)} simulation(s) failed; see manifest.json", file=sys.stderr)
    print(f"wrote CSV suite to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sabs",
        description="Test, search for, and exploit s-admissible backdoor sets "
        "from combined experimental and observational data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="draw benchmark datasets")
    p_sim.add_argument("--scenario", choices=SCENARIO_CHOICES, default="1")
    p_sim.add_argument("--spec", help="JSON mechanism spec instead of a scenario")
    p_sim.add_argument("--n-obs", type=_positive_int, default=5000)
    p_sim.add_argument("--n-exp", type=_positive_int, default=300)
    p_sim.add_argument("--n-test", type=int, default=0)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_score = sub.add_parser("score", help="posterior that a set is an sABS")
    _add_data_flags(p_score)
    p_score.add_argument("--z", type=_name_list, default=(),
                         help="comma-separated conditioning set (may be empty)")
    _add_scorer_flags(p_score)
    p_score.add_argument("--chain-dump",
                         help="write the observational posterior chain to CSV (mcmc scorer)")
    p_score.add_argument("--out")
    p_score.set_defaults(func=cmd_score)

    p_find = sub.add_parser("find", help="greedy search for a maximal sABS")
    _add_data_flags(p_find)
    p_find.add_argument("--candidates", type=_name_list, required=True)
    _add_scorer_flags(p_find)
    p_find.add_argument("--threshold", type=float, default=0.5)
    p_find.add_argument("--predict", help="dataset of query rows to predict")
    p_find.add_argument("--predictions", help="where to write predictions CSV")
    p_find.add_argument("--out")
    p_find.set_defaults(func=cmd_find)

    p_exp = sub.add_parser("experiment", help="seeded simulation batches")
    p_exp.add_argument("--scenario", choices=SCENARIO_CHOICES, default="1")
    p_exp.add_argument("--sims", type=_positive_int, required=True)
    p_exp.add_argument("--n-obs", type=_positive_int, default=5000)
    p_exp.add_argument("--n-exp", type=_int_list, default=(50, 100, 300))
    p_exp.add_argument("--n-test", type=_positive_int, default=1000)
    p_exp.add_argument("--scorer", choices=("discrete", "mcmc"), default="mcmc")
    p_exp.add_argument("--threshold", type=float, default=0.5)
    p_exp.add_argument("--hz-prior", type=float, default=0.5)
    p_exp.add_argument("--bins", type=_positive_int)
    p_exp.add_argument("--seed", type=int, default=0)
    p_exp.add_argument("--jobs", type=_positive_int, default=1)
    p_exp.add_argument("--ablation", action="store_true")
    p_exp.add_argument("--out", required=True)
    _add_mcmc_flags(p_exp)
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def _add_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--exp", required=True, help="experimental CSV (schema sidecar required)")
    p.add_argument("--obs", required=True, help="observational CSV (schema sidecar required)")
    p.add_argument("--y", required=True)
    p.add_argument("--x", required=True)


def _add_scorer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scorer", choices=("discrete", "mcmc"), default="discrete")
    p.add_argument("--bins", type=_positive_int,
                   help="bin count for continuous variables under the discrete scorer")
    p.add_argument("--hz-prior", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    _add_mcmc_flags(p)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
