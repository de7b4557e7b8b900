"""Greedy add/remove search for a maximally informative sABS.

Starting from the empty set, each round scores every single-variable
addition and removal, moves to the best neighbor while that strictly
improves the hypothesis marginal log P(D_e | D_o*, h_Z), and stops
otherwise. The final set only yields an estimator when its posterior
clears the threshold; below it the decision is an explicit NaN.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .discrete import ScoreError, ScoreResult, posterior_sabs, tabulate_pair
from .mcmc import McmcConfig, PriorSpec, probs_abs
from .scm import Dataset

ESTIMATE = "estimate"
NAN = "NaN"


class DiscreteScorer:
    """Closed-form Dirichlet-multinomial score; continuous covariates need a
    bin count (bins are fitted on the observational data)."""

    kind = "discrete"

    def __init__(self, bins: int | None = None, hz_prior: float = 0.5, alpha0: float = 1.0):
        self.bins = bins
        self.hz_prior = hz_prior
        self.alpha0 = alpha0

    def score(self, de: Dataset, do: Dataset, y: str, x: str, z: Sequence[str]) -> ScoreResult:
        counts = tabulate_pair(do, de, y, x, tuple(z), bins=self.bins, alpha0=self.alpha0)
        return posterior_sabs(counts, prior=self.hz_prior)


class McmcScorer:
    """Sampling score for mixed data. Every evaluation reuses the same seed
    schedule, so all candidate sets within a search share common random
    numbers and rescoring a set reproduces its value exactly."""

    kind = "mcmc"

    def __init__(
        self,
        prior: PriorSpec = PriorSpec(),
        cfg: McmcConfig = McmcConfig(),
        hz_prior: float = 0.5,
    ):
        self.prior = prior
        self.cfg = cfg
        self.hz_prior = hz_prior

    def score(self, de: Dataset, do: Dataset, y: str, x: str, z: Sequence[str]) -> ScoreResult:
        return probs_abs(de, do, y, x, tuple(z), self.prior, self.cfg, self.hz_prior)


def make_scorer(kind: str, **kwargs) -> DiscreteScorer | McmcScorer:
    if kind == "discrete":
        return DiscreteScorer(**kwargs)
    if kind == "mcmc":
        return McmcScorer(**kwargs)
    raise ScoreError(f"unknown scorer {kind!r}; choose discrete or mcmc")


@dataclass
class SearchOutcome:
    z_star: tuple[str, ...]
    posterior: float
    log_ml_h: float
    decision: str  # estimate | NaN
    steps: int
    trace: list[tuple[tuple[str, ...], float]] = field(default_factory=list)
    scores: dict[tuple[str, ...], ScoreResult] = field(default_factory=dict)
    threshold: float = 0.5

    def to_json(self) -> dict:
        return {
            "z_star": list(self.z_star),
            "posterior": self.posterior,
            "log_ml_h": self.log_ml_h,
            "decision": self.decision,
            "steps": self.steps,
            "threshold": self.threshold,
            "trace": [{"z": list(z), "log_ml_h": s} for z, s in self.trace],
        }


def _canonical(z: Sequence[str], order: dict[str, int]) -> tuple[str, ...]:
    return tuple(sorted(z, key=order.__getitem__))


def find_sabs(
    de: Dataset,
    do: Dataset,
    y: str,
    x: str,
    candidates: Sequence[str],
    scorer: str | DiscreteScorer | McmcScorer = "discrete",
    t: float = 0.5,
    cfg: McmcConfig | None = None,
    max_steps: int | None = None,
) -> SearchOutcome:
    """Greedy search maximizing log P(D_e | D_o*, h_Z) over subsets of the
    candidate covariates.

    Only strict improvements move; ties prefer removals, then the
    lowest-indexed variable. Returns decision "estimate" when the final
    posterior exceeds ``t``, otherwise "NaN".
    """
    candidates = list(candidates)
    order = {name: i for i, name in enumerate(candidates)}
    if isinstance(scorer, str):
        scorer = make_scorer(scorer, **({"cfg": cfg} if cfg is not None and scorer == "mcmc" else {}))
    if max_steps is None:
        max_steps = 2 ** len(candidates) + 1

    cache: dict[tuple[str, ...], ScoreResult] = {}

    def score_of(z: Sequence[str]) -> ScoreResult:
        key = _canonical(z, order)
        if key not in cache:
            cache[key] = scorer.score(de, do, y, x, key)
        return cache[key]

    current: tuple[str, ...] = ()
    current_score = score_of(current).log_ml_h
    trace = [(current, current_score)]
    steps = 0
    while True:
        moves = []
        in_set = set(current)
        for name in current:
            moves.append((tuple(v for v in current if v != name), 0, order[name]))
        for name in candidates:
            if name not in in_set:
                moves.append((current + (name,), 1, order[name]))
        if not moves:
            break
        best = None
        for z, move_kind, var_idx in moves:
            s = score_of(z).log_ml_h
            key = (-s, move_kind, var_idx)
            if best is None or key < best[0]:
                best = (key, z, s)
        _, best_z, best_score = best
        if best_score > current_score:
            current = _canonical(best_z, order)
            current_score = best_score
            trace.append((current, current_score))
            steps += 1
            if steps > max_steps:
                raise ScoreError(f"search exceeded {max_steps} steps")
        else:
            break

    final = score_of(current)
    decision = ESTIMATE if final.posterior > t else NAN
    return SearchOutcome(
        z_star=current,
        posterior=final.posterior,
        log_ml_h=final.log_ml_h,
        decision=decision,
        steps=steps,
        trace=trace,
        scores=dict(cache),
        threshold=t,
    )


def exhaustive_scores(
    de: Dataset,
    do: Dataset,
    y: str,
    x: str,
    candidates: Sequence[str],
    scorer: str | DiscreteScorer | McmcScorer = "discrete",
    cfg: McmcConfig | None = None,
) -> dict[tuple[str, ...], ScoreResult]:
    """Score every subset of the candidates (at most 12)."""
    candidates = list(candidates)
    if len(candidates) > 12:
        raise ScoreError(f"exhaustive scoring limited to 12 candidates, got {len(candidates)}")
    if isinstance(scorer, str):
        scorer = make_scorer(scorer, **({"cfg": cfg} if cfg is not None and scorer == "mcmc" else {}))
    order = {name: i for i, name in enumerate(candidates)}
    out: dict[tuple[str, ...], ScoreResult] = {}
    from .diagram import subsets_in_canonical_order

    for z in subsets_in_canonical_order(candidates, order):
        out[z] = scorer.score(de, do, y, x, z)
    return out


def exhaustive_sabs(
    de: Dataset,
    do: Dataset,
    y: str,
    x: str,
    candidates: Sequence[str],
    scorer: str | DiscreteScorer | McmcScorer = "discrete",
    cfg: McmcConfig | None = None,
) -> list[tuple[tuple[str, ...], float]]:
    """All candidate subsets ranked by posterior, best first; ties keep the
    canonical subset order."""
    scores = exhaustive_scores(de, do, y, x, candidates, scorer, cfg)
    ranked = sorted(
        scores.items(), key=lambda item: (-item[1].posterior,)
    )
    return [(z, res.posterior) for z, res in ranked]
