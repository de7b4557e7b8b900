"""Conditional-effect estimators and evaluation metrics.

An estimator predicts P(Y | X, Z) from experimental rows, observational
rows, or their pool (pooling is exactly what the shared-conditional
hypothesis licenses). The discrete model is a Dirichlet-multinomial
posterior mean; the mixed model is a Bayesian-logistic posterior
predictive. Quality is measured by held-out cross-entropy; score quality
across simulations by rank-based AUC.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .discrete import quantile_edges, tabulate
from .mcmc import McmcConfig, PriorSpec, _design, sample_posterior
from .scm import CONTINUOUS, EXPERIMENTAL, Dataset, concat_rows

DE = "de"
DO = "do"
POOLED = "pooled"
_SOURCES = (DE, DO, POOLED)

DIRICHLET = "dirichlet"
LOGISTIC_MODEL = "logistic"

CE_CLAMP = 1e-12


class EstimationError(ValueError):
    """Raised for unfittable estimators or mismatched evaluation data."""


@dataclass
class EffectEstimator:
    """Fitted predictor of P(Y = y | X = x, Z = z)."""

    outcome: str
    treatment: str
    z: tuple[str, ...]
    source: str
    model: str
    table: np.ndarray | None = None  # (q, r) predictive rows, discrete model
    cards: tuple[int, ...] = ()
    edges: dict = field(default_factory=dict)
    thetas: np.ndarray | None = None  # (m, dim) posterior draws, logistic model
    n_fit: int = 0

    def predict_proba(self, data: Dataset) -> np.ndarray:
        """Per-row predictive distribution over outcome values, shape (n, r);
        rows sum to one."""
        if self.model == DIRICHLET:
            idx = np.zeros(data.n, dtype=np.int64)
            for name, card in zip((self.treatment, *self.z), self.cards):
                col = data.column(name)
                if name in self.edges:
                    codes = np.searchsorted(self.edges[name], col, side="right")
                else:
                    codes = np.asarray(col, dtype=np.int64)
                idx = idx * card + codes
            return self.table[idx]
        X = _design(data, self.treatment, self.z, scaler=None)
        p1 = expit(X @ self.thetas.T).mean(axis=1)
        return np.column_stack([1.0 - p1, p1])


def fit_estimator(
    de: Dataset | None,
    do: Dataset | None,
    y: str,
    x: str,
    z: Sequence[str] = (),
    source: str = POOLED,
    model: str = DIRICHLET,
    bins: int | None = None,
    prior: PriorSpec = PriorSpec(),
    cfg: McmcConfig = McmcConfig(),
    alpha0: float = 1.0,
) -> EffectEstimator:
    """Fit P(Y | X, Z) on the requested data source.

    ``pooled`` stacks experimental and observational rows, treating both as
    draws from one shared conditional. For the discrete model any continuous
    variable is cut at quantile edges fitted on the observational data.
    """
    z = tuple(z)
    if source not in _SOURCES:
        raise EstimationError(f"unknown source {source!r}")
    if source == DE:
        data = de
    elif source == DO:
        data = do
    else:
        if de is None or de.n == 0:
            data = do
        elif do is None or do.n == 0:
            data = de
        else:
            data = concat_rows(do, de)
    if data is None or data.n == 0:
        raise EstimationError(f"no rows available for source {source!r}")

    if model == DIRICHLET:
        variables = (y, x, *z)
        edges: dict[str, np.ndarray] = {}
        if any(data.meta[v].kind == CONTINUOUS for v in variables):
            if bins is None:
                raise EstimationError("continuous variables present: pass a bin count")
            basis = do if do is not None and do.n else data
            edges = quantile_edges(basis, variables, bins)
        counts = tabulate(data, y, x, z, edges or None, alpha0)
        pseudo = counts.alpha + counts.counts("pooled")
        table = pseudo / pseudo.sum(axis=1, keepdims=True)
        return EffectEstimator(
            y, x, z, source, model,
            table=table, cards=counts.cards, edges=edges, n_fit=data.n,
        )
    if model == LOGISTIC_MODEL:
        post = sample_posterior(data, y, x, z, prior, cfg)
        return EffectEstimator(
            y, x, z, source, model, thetas=post.thetas, n_fit=data.n
        )
    raise EstimationError(f"unknown model {model!r}")


def cross_entropy(est: EffectEstimator, test: Dataset) -> float:
    """Average negative log predictive probability of the held-out outcomes,
    in nats; predictions are clamped away from 0 and 1."""
    if test.regime != EXPERIMENTAL:
        raise EstimationError("evaluation data must be experimental")
    for name in (est.outcome, est.treatment, *est.z):
        if name not in test.columns:
            raise EstimationError(f"test data has no column {name!r}")
    probs = est.predict_proba(test)
    ycodes = np.asarray(test.column(est.outcome), dtype=np.int64)
    p = probs[np.arange(test.n), ycodes]
    p = np.clip(p, CE_CLAMP, 1.0 - CE_CLAMP)
    return float(-np.mean(np.log(p)))


def auc_sabs(batch: Sequence[tuple[float, bool]]) -> float:
    """Rank-based (Mann-Whitney) AUC of posterior scores against the
    graphical ground-truth labels."""
    if not batch:
        raise EstimationError("empty batch")
    scores = np.asarray([s for s, _ in batch], dtype=float)
    labels = np.asarray([bool(l) for _, l in batch])
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EstimationError("AUC undefined for a single-class batch")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def paired_sign_test(a: Sequence[float], b: Sequence[float], alternative: str = "two-sided"):
    """Sign test on paired values; ties are dropped.

    Returns (n_effective, wins_of_a, p_value) where a "win" means a < b;
    ``alternative="less"`` tests whether a is systematically smaller.
    """
    from scipy.stats import binomtest

    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise EstimationError("paired samples must have equal length")
    keep = a != b
    wins = int((a[keep] < b[keep]).sum())
    n = int(keep.sum())
    if n == 0:
        return 0, 0, 1.0
    side = {"two-sided": "two-sided", "less": "greater", "greater": "less"}[alternative]
    return n, wins, float(binomtest(wins, n, 0.5, alternative=side).pvalue)
