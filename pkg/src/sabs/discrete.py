"""Closed-form Bayesian scores for the shared-conditional hypothesis on
discrete data.

The hypothesis h_Z says the source-experimental and target-observational
conditionals of the outcome given (treatment, Z) coincide. Under a
Dirichlet-multinomial model both marginal likelihoods of the experimental
data have closed forms: under h_Z the observational counts act as prior
pseudocounts, under the alternative only the Dirichlet prior does. All
arithmetic is in log space via log-Gamma so counts in the thousands are
safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .scm import CONTINUOUS, DISCRETE, Dataset

OBS = "obs"
EXP = "exp"
POOLED = "pooled"


class ScoreError(ValueError):
    """Raised for malformed counts or invalid scoring requests."""


@dataclass
class ContingencyCounts:
    """Joint counts of the outcome by configuration of (treatment, Z).

    Configurations are indexed mixed-radix over (treatment, *z) with the
    treatment most significant, matching the order of ``variables``.
    ``n_obs`` and ``n_exp`` hold one (q, r) matrix per dataset; ``alpha`` is
    the elementwise-positive Dirichlet prior (all ones by default).
    """

    n_obs: np.ndarray
    n_exp: np.ndarray
    alpha: np.ndarray
    variables: tuple[str, ...] = ()
    outcome: str = ""
    cards: tuple[int, ...] = ()

    def __post_init__(self):
        self.n_obs = np.asarray(self.n_obs, dtype=np.int64)
        self.n_exp = np.asarray(self.n_exp, dtype=np.int64)
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.n_obs.shape != self.n_exp.shape or self.n_obs.shape != self.alpha.shape:
            raise ScoreError("count and prior matrices must share one (q, r) shape")
        if self.n_obs.ndim != 2:
            raise ScoreError("counts must be 2-D (configurations by outcome values)")
        if (self.n_obs < 0).any() or (self.n_exp < 0).any():
            raise ScoreError("counts must be nonnegative")
        if (self.alpha <= 0).any():
            raise ScoreError("alpha must be elementwise positive")

    @property
    def q(self) -> int:
        return self.n_obs.shape[0]

    @property
    def r(self) -> int:
        return self.n_obs.shape[1]

    def counts(self, source: str) -> np.ndarray:
        if source == OBS:
            return self.n_obs
        if source == EXP:
            return self.n_exp
        if source == POOLED:
            return self.n_obs + self.n_exp
        raise ScoreError(f"unknown counts source {source!r}")


@dataclass
class ScoreResult:
    """Both marginal likelihoods of the experimental data plus the resulting
    hypothesis posterior."""

    log_ml_h: float
    log_ml_not_h: float
    posterior: float
    prior: float
    z: tuple[str, ...] = ()
    details: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "z": list(self.z),
            "log_ml_h": self.log_ml_h,
            "log_ml_not_h": self.log_ml_not_h,
            "posterior": self.posterior,
            "prior": self.prior,
            "details": self.details,
            "warnings": list(self.warnings),
        }


def posterior_from_logs(log_ml_h: float, log_ml_not_h: float, prior: float) -> float:
    """Bayes combination of the two marginals, stable under large magnitude
    differences."""
    if not 0.0 < prior < 1.0:
        raise ScoreError("prior must lie strictly inside (0, 1)")
    num = log_ml_h + np.log(prior)
    den = logsumexp([num, log_ml_not_h + np.log1p(-prior)])
    return float(np.exp(num - den))


# ---------------------------------------------------------------------------
# Tabulation
# ---------------------------------------------------------------------------

def quantile_edges(d: Dataset, names: Sequence[str], bins: int) -> dict[str, np.ndarray]:
    """Interior quantile cut points per continuous variable, computed on one
    dataset (by convention the target-observational one, so bin boundaries
    never leak experimental information)."""
    if bins < 2:
        raise ScoreError("bins must be >= 2")
    out = {}
    qs = np.linspace(0, 1, bins + 1)[1:-1]
    for name in names:
        if d.meta[name].kind == CONTINUOUS:
            out[name] = np.quantile(d.column(name), qs)
    return out


def _codes(d: Dataset, name: str, edges: dict[str, np.ndarray] | None) -> tuple[np.ndarray, int]:
    meta = d.meta[name]
    if meta.kind == DISCRETE:
        return np.asarray(d.column(name), dtype=np.int64), meta.card
    if edges is None or name not in edges:
        raise ScoreError(
            f"continuous variable {name!r} needs bin edges before tabulation"
        )
    e = np.asarray(edges[name], dtype=float)
    return np.searchsorted(e, d.column(name), side="right").astype(np.int64), len(e) + 1


def _config_index(d: Dataset, variables: Sequence[str], edges) -> tuple[np.ndarray, tuple[int, ...]]:
    idx = np.zeros(d.n, dtype=np.int64)
    cards = []
    for name in variables:
        codes, card = _codes(d, name, edges)
        idx = idx * card + codes
        cards.append(card)
    return idx, tuple(cards)


def tabulate(
    d: Dataset,
    y: str,
    x: str,
    z: Sequence[str] = (),
    edges: dict[str, np.ndarray] | None = None,
    alpha0: float = 1.0,
) -> ContingencyCounts:
    """Count outcomes per (treatment, Z) configuration for one dataset.

    The matrix is stored in the slot matching the dataset's regime; the
    other slot stays zero. Use :func:`tabulate_pair` to fill both at once.
    """
    variables = (x, *z)
    for name in (y, *variables):
        if name not in d.columns:
            raise ScoreError(f"dataset has no column {name!r}")
    idx, cards = _config_index(d, variables, edges)
    ycodes, r = _codes(d, y, edges)
    q = int(np.prod(cards)) if cards else 1
    counts = np.zeros((q, r), dtype=np.int64)
    np.add.at(counts, (idx, ycodes), 1)
    zeros = np.zeros_like(counts)
    obs = counts if d.regime != "experimental" else zeros
    exp_ = counts if d.regime == "experimental" else zeros
    return ContingencyCounts(
        obs, exp_, np.full((q, r), float(alpha0)), variables, y, cards
    )


def tabulate_pair(
    d_obs: Dataset,
    d_exp: Dataset,
    y: str,
    x: str,
    z: Sequence[str] = (),
    bins: int | None = None,
    alpha0: float = 1.0,
) -> ContingencyCounts:
    """Joint counts for the observational/experimental pair; quantile bin
    edges for continuous variables are fitted on the observational data
    only and applied to both."""
    variables = (y, x, *z)
    edges = None
    needs_bins = any(
        d_obs.meta[v].kind == CONTINUOUS for v in variables if v in d_obs.meta
    )
    if needs_bins:
        if bins is None:
            raise ScoreError("continuous variables present: pass a bin count")
        edges = quantile_edges(d_obs, variables, bins)
    a = tabulate(d_obs, y, x, z, edges, alpha0)
    b = tabulate(d_exp, y, x, z, edges, alpha0)
    if a.n_obs.shape != b.n_exp.shape:
        raise ScoreError("datasets disagree on configuration space")
    return ContingencyCounts(
        a.n_obs + b.n_obs, a.n_exp + b.n_exp, a.alpha, a.variables, y, a.cards
    )


# ---------------------------------------------------------------------------
# Scores
# ---------------------------------------------------------------------------

def _dirichlet_update_log_ml(prior: np.ndarray, extra: np.ndarray) -> float:
    """log of prod_j Gamma(a_j)/Gamma(a_j + e_j) * prod_k Gamma(a_jk + e_jk)/Gamma(a_jk)
    with a = prior pseudocounts and e = new counts."""
    a_row = prior.sum(axis=1)
    e_row = extra.sum(axis=1)
    outer = gammaln(a_row) - gammaln(a_row + e_row)
    inner = gammaln(prior + extra) - gammaln(prior)
    return float(outer.sum() + inner.sum())


def log_ml_h(c: ContingencyCounts) -> float:
    """log P(experimental data | observational data, h_Z): the observational
    counts join the prior before predicting the experimental counts."""
    return _dirichlet_update_log_ml(c.alpha + c.n_obs, c.n_exp)


def log_ml_not_h(c: ContingencyCounts) -> float:
    """log P(experimental data | not h_Z): prior-only prediction, the
    observational counts carry no information."""
    return _dirichlet_update_log_ml(c.alpha, c.n_exp)


def posterior_sabs(c: ContingencyCounts, prior: float = 0.5) -> ScoreResult:
    lh = log_ml_h(c)
    lnh = log_ml_not_h(c)
    return ScoreResult(
        log_ml_h=lh,
        log_ml_not_h=lnh,
        posterior=posterior_from_logs(lh, lnh, prior),
        prior=prior,
        z=c.variables[1:],
        details={"q": c.q, "r": c.r, "n_obs": int(c.n_obs.sum()), "n_exp": int(c.n_exp.sum())},
    )


def conditional_entropy(c: ContingencyCounts, source: str = POOLED) -> float:
    """Empirical H(Y | treatment, Z) in nats for the chosen counts, with the
    0 log 0 = 0 convention."""
    counts = c.counts(source).astype(float)
    total = counts.sum()
    if total == 0:
        raise ScoreError(f"{source} counts are empty; entropy undefined")
    row = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.where(counts > 0, np.log(counts) - np.log(row), 0.0)
    return float(-(counts * logp).sum() / total)
