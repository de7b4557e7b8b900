"""Seeded simulation batches: score subsets, run the greedy search, fit the
competing estimators, and evaluate everything on held-out experimental data
from the target domain.

Each simulation draws fresh generating parameters, one observational
dataset, one test dataset, and one experimental dataset per requested size;
all randomness descends from a single root seed, so reruns are
byte-identical. Simulations are independent jobs and can run in a process
pool.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from multiprocessing import get_context
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .diagram import is_sabs, subsets_in_canonical_order
from .discrete import posterior_from_logs
from .estimate import (
    DE,
    DIRICHLET,
    DO,
    LOGISTIC_MODEL,
    POOLED,
    auc_sabs,
    cross_entropy,
    fit_estimator,
)
from .mcmc import McmcConfig
from .scm import EXPERIMENTAL, OBSERVATIONAL, SOURCE, TARGET, build_scenario, sample
from .search import NAN, DiscreteScorer, McmcScorer, exhaustive_scores, find_sabs

METHOD_FINDSABS = "findsabs"
METHOD_DE = "de"
METHOD_DO = "do"
METHOD_DE_DO = "de_do"
BASELINE_METHODS = (METHOD_DE, METHOD_DO, METHOD_DE_DO)
_SOURCE_OF = {METHOD_DE: DE, METHOD_DO: DO, METHOD_DE_DO: POOLED}

AUC_FIELDS = ("scenario", "n_e", "sim", "subset", "posterior", "label")
CE_FIELDS = ("scenario", "n_e", "sim", "method", "cross_entropy", "z_star")
ABLATION_FIELDS = (
    "scenario", "n_e", "sim", "prior_low", "prior_high", "p_low", "p_high", "abs_diff"
)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "1"
    n_sims: int = 30
    n_obs: int = 5000
    n_exp: tuple[int, ...] = (50, 100, 300)
    n_test: int = 1000
    scorer: str = "mcmc"  # discrete | mcmc
    threshold: float = 0.5
    hz_prior: float = 0.5
    bins: int | None = None
    seed: int = 0
    jobs: int = 1
    fit_estimators: bool = True  # scoring-only batches skip the CE block
    mcmc: McmcConfig = field(default_factory=McmcConfig)

    def __post_init__(self):
        if self.n_sims < 1:
            raise ValueError("n_sims must be >= 1")
        if not self.n_exp:
            raise ValueError("n_exp must be nonempty")

    @property
    def estimator_model(self) -> str:
        return DIRICHLET if self.scenario.endswith("-discrete") else LOGISTIC_MODEL


@dataclass(frozen=True)
class EvalReport:
    """One simulation's evaluation at one experimental size."""

    scenario: str
    sim: int
    n_e: int
    n_o: int
    seed: int
    cross_entropy: dict[str, float]  # per method; NaN when the search declined
    posteriors: dict[str, float]  # per candidate subset ("A+B" keys)
    z_star: str


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    auc_rows: list[dict]
    ce_rows: list[dict]
    failures: list[dict]

    def auc(self, n_e: int) -> float:
        batch = [
            (row["posterior"], row["label"])
            for row in self.auc_rows
            if row["n_e"] == n_e
        ]
        return auc_sabs(batch)

    def ce_by_method(self, n_e: int) -> dict[str, dict[int, float]]:
        out: dict[str, dict[int, float]] = {}
        for row in self.ce_rows:
            if row["n_e"] != n_e or not np.isfinite(row["cross_entropy"]):
                continue
            out.setdefault(row["method"], {})[row["sim"]] = row["cross_entropy"]
        return out

    def paired_ce(self, n_e: int, method_a: str, method_b: str) -> tuple[np.ndarray, np.ndarray]:
        """Cross-entropies of two methods on the simulations where both
        produced an estimate, aligned by simulation."""
        table = self.ce_by_method(n_e)
        a, b = table.get(method_a, {}), table.get(method_b, {})
        sims = sorted(set(a) & set(b))
        return (
            np.asarray([a[s] for s in sims]),
            np.asarray([b[s] for s in sims]),
        )

    def reports(self) -> list[EvalReport]:
        """Per-(simulation, experimental size) views over the result rows."""
        posts: dict[tuple[int, int], dict[str, float]] = {}
        for row in self.auc_rows:
            posts.setdefault((row["sim"], row["n_e"]), {})[row["subset"]] = row["posterior"]
        ces: dict[tuple[int, int], dict[str, float]] = {}
        stars: dict[tuple[int, int], str] = {}
        for row in self.ce_rows:
            key = (row["sim"], row["n_e"])
            ces.setdefault(key, {})[row["method"]] = row["cross_entropy"]
            if row["method"] == METHOD_FINDSABS:
                stars[key] = row["z_star"]
        out = []
        for sim, n_e in sorted(posts):
            out.append(
                EvalReport(
                    scenario=self.config.scenario,
                    sim=sim,
                    n_e=n_e,
                    n_o=self.config.n_obs,
                    seed=self.config.seed,
                    cross_entropy=ces.get((sim, n_e), {}),
                    posteriors=posts[(sim, n_e)],
                    z_star=stars.get((sim, n_e), ""),
                )
            )
        return out


def _child_seed(root: int, *key: int) -> int:
    return int(np.random.SeedSequence([root, *key]).generate_state(1, dtype=np.uint64)[0])


class _MemoScorer:
    """Caches scores per candidate set so the exhaustive pass and the greedy
    search share evaluations (sound because scorers are deterministic)."""

    def __init__(self, inner):
        self.inner = inner
        self.cache: dict[tuple[str, ...], object] = {}

    def score(self, de, do, y, x, z):
        key = tuple(z)
        if key not in self.cache:
            self.cache[key] = self.inner.score(de, do, y, x, z)
        return self.cache[key]


def _make_scorer(cfg: ExperimentConfig, seed: int):
    if cfg.scorer == "discrete":
        return DiscreteScorer(bins=cfg.bins, hz_prior=cfg.hz_prior)
    if cfg.scorer == "mcmc":
        return McmcScorer(cfg=replace(cfg.mcmc, seed=seed), hz_prior=cfg.hz_prior)
    raise ValueError(f"unknown scorer {cfg.scorer!r}")


def _run_sim(task: tuple[ExperimentConfig, int]) -> dict:
    cfg, sim = task
    try:
        return _run_sim_inner(cfg, sim)
    except Exception as exc:  # recorded, not silently dropped
        return {
            "sim": sim,
            "error": f"{type(exc).__name__}: {exc}",
            "auc_rows": [],
            "ce_rows": [],
        }


def _run_sim_inner(cfg: ExperimentConfig, sim: int) -> dict:
    spec = build_scenario(cfg.scenario, _child_seed(cfg.seed, sim, 0))
    d = spec.diagram
    y, x = d.outcome, d.treatment
    candidates = spec.covariates
    labels = {
        z: is_sabs(d, x, y, z)
        for z in subsets_in_canonical_order(candidates, {n: i for i, n in enumerate(candidates)})
    }
    d_obs = sample(spec, TARGET, OBSERVATIONAL, cfg.n_obs, _child_seed(cfg.seed, sim, 1))
    d_test = sample(spec, TARGET, EXPERIMENTAL, cfg.n_test, _child_seed(cfg.seed, sim, 2))
    model = cfg.estimator_model

    auc_rows: list[dict] = []
    ce_rows: list[dict] = []
    for i_ne, n_e in enumerate(cfg.n_exp):
        d_exp = sample(spec, SOURCE, EXPERIMENTAL, n_e, _child_seed(cfg.seed, sim, 3, i_ne))
        scorer = _MemoScorer(_make_scorer(cfg, _child_seed(cfg.seed, sim, 4, i_ne)))
        scores = exhaustive_scores(d_exp, d_obs, y, x, candidates, scorer)
        for z, res in scores.items():
            auc_rows.append(
                {
                    "scenario": cfg.scenario,
                    "n_e": n_e,
                    "sim": sim,
                    "subset": "+".join(z),
                    "posterior": res.posterior,
                    "label": labels[z],
                }
            )
        outcome = find_sabs(d_exp, d_obs, y, x, candidates, scorer, t=cfg.threshold)
        if not cfg.fit_estimators:
            continue

        est_cfg = replace(cfg.mcmc, seed=_child_seed(cfg.seed, sim, 5, i_ne))
        fits: dict[tuple, object] = {}

        def get_ce(z: tuple[str, ...], source: str) -> float:
            key = (z, source)
            if key not in fits:
                fits[key] = fit_estimator(
                    d_exp, d_obs, y, x, z, source, model,
                    bins=cfg.bins, cfg=est_cfg,
                )
            return cross_entropy(fits[key], d_test)

        if outcome.decision == NAN:
            findsabs_ce = float("nan")
            z_star_txt = "NaN"
        else:
            findsabs_ce = get_ce(outcome.z_star, POOLED)
            z_star_txt = "+".join(outcome.z_star)
        ce_rows.append(
            {
                "scenario": cfg.scenario,
                "n_e": n_e,
                "sim": sim,
                "method": METHOD_FINDSABS,
                "cross_entropy": findsabs_ce,
                "z_star": z_star_txt,
            }
        )
        for method in BASELINE_METHODS:
            ce_rows.append(
                {
                    "scenario": cfg.scenario,
                    "n_e": n_e,
                    "sim": sim,
                    "method": method,
                    "cross_entropy": get_ce(candidates, _SOURCE_OF[method]),
                    "z_star": "+".join(candidates),
                }
            )
    return {"sim": sim, "error": None, "auc_rows": auc_rows, "ce_rows": ce_rows}


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> ExperimentResult:
    """Run every simulation, aggregate rows, and optionally write the CSV
    suite plus a manifest."""
    tasks = [(cfg, sim) for sim in range(cfg.n_sims)]
    if cfg.jobs > 1:
        with get_context("fork").Pool(cfg.jobs) as pool:
            outputs = pool.map(_run_sim, tasks)
    else:
        outputs = [_run_sim(t) for t in tasks]

    auc_rows, ce_rows, failures = [], [], []
    for out in outputs:
        if out["error"] is not None:
            failures.append({"sim": out["sim"], "error": out["error"]})
        auc_rows.extend(out["auc_rows"])
        ce_rows.extend(out["ce_rows"])
    result = ExperimentResult(cfg, auc_rows, ce_rows, failures)
    if out_dir is not None:
        write_result(result, out_dir)
    return result


def prior_ablation(
    cfg: ExperimentConfig,
    priors: tuple[float, float] = (0.1, 0.9),
    z: tuple[str, ...] | None = None,
    out_dir: str | Path | None = None,
) -> list[dict]:
    """Posterior sensitivity to the hypothesis prior: the same marginals are
    combined under both priors; their gap shrinks as experimental data grow."""
    lo, hi = priors
    rows = []
    for sim in range(cfg.n_sims):
        spec = build_scenario(cfg.scenario, _child_seed(cfg.seed, sim, 0))
        d = spec.diagram
        y, x = d.outcome, d.treatment
        z_eval = spec.covariates if z is None else z
        d_obs = sample(spec, TARGET, OBSERVATIONAL, cfg.n_obs, _child_seed(cfg.seed, sim, 1))
        for i_ne, n_e in enumerate(cfg.n_exp):
            d_exp = sample(spec, SOURCE, EXPERIMENTAL, n_e, _child_seed(cfg.seed, sim, 3, i_ne))
            scorer = _make_scorer(cfg, _child_seed(cfg.seed, sim, 4, i_ne))
            res = scorer.score(d_exp, d_obs, y, x, z_eval)
            p_lo = posterior_from_logs(res.log_ml_h, res.log_ml_not_h, lo)
            p_hi = posterior_from_logs(res.log_ml_h, res.log_ml_not_h, hi)
            rows.append(
                {
                    "scenario": cfg.scenario,
                    "n_e": n_e,
                    "sim": sim,
                    "prior_low": lo,
                    "prior_high": hi,
                    "p_low": p_lo,
                    "p_high": p_hi,
                    "abs_diff": abs(p_lo - p_hi),
                }
            )
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(out_dir / "ablation.csv", rows, ABLATION_FIELDS)
    return rows


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def _write_csv(path: Path, rows: Sequence[dict], fieldnames: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def manifest_dict(cfg: ExperimentConfig, failures: Sequence[dict] = ()) -> dict:
    import scipy

    return {
        "config": asdict(cfg),
        "versions": {
            "sabs": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "failures": list(failures),
    }


def write_result(result: ExperimentResult, out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "auc": out_dir / "auc.csv",
        "ce": out_dir / "ce.csv",
        "manifest": out_dir / "manifest.json",
    }
    _write_csv(paths["auc"], result.auc_rows, AUC_FIELDS)
    _write_csv(paths["ce"], result.ce_rows, CE_FIELDS)
    with open(paths["manifest"], "w") as fh:
        json.dump(manifest_dict(result.config, result.failures), fh, indent=2)
        fh.write("\n")
    return paths
