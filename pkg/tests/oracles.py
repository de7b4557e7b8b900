"""Independent oracles used by the test suite.

Each oracle recomputes a quantity by a route deliberately different from
the library implementation: blocked-path enumeration instead of
reachability, sequential predictive products instead of Gamma-function
ratios, Monte-Carlo and quadrature integrals instead of closed forms, and
exhaustive joint enumeration instead of ancestral sampling.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.special import log_expit, logsumexp

from sabs.diagram import GraphLike, descendants
from sabs.scm import CPT, NOISY_OR, THRESHOLD_BERNOULLI, ScmSpec


# ---------------------------------------------------------------------------
# d-separation by path enumeration
# ---------------------------------------------------------------------------

def _all_trails(g: GraphLike, start: str, goal: str):
    """Yield every simple trail between start and goal as a list of
    (node, entered_via_incoming_edge) pairs, skeleton-wise."""

    def neighbors(v):
        for p in g.parents_of(v):
            yield p, False  # step v <- p: we enter p via one of p's outgoing edges
        for c in g.children_of(v):
            yield c, True  # step v -> c: we enter c via an incoming edge

    stack = [(start, [(start, None)], {start})]
    while stack:
        node, trail, seen = stack.pop()
        for nxt, entered_incoming in neighbors(node):
            if nxt in seen:
                continue
            new_trail = trail + [(nxt, entered_incoming)]
            if nxt == goal:
                yield new_trail
            else:
                stack.append((nxt, new_trail, seen | {nxt}))


def _trail_active(g: GraphLike, trail, z: set[str], desc_cache: dict) -> bool:
    for i in range(1, len(trail) - 1):
        node, entered_incoming = trail[i]
        _, next_incoming = trail[i + 1]
        is_collider = entered_incoming and not next_incoming
        if is_collider:
            if node not in desc_cache:
                desc_cache[node] = descendants(g, node) | {node}
            if not (desc_cache[node] & z):
                return False
        else:
            if node in z:
                return False
    return True


def brute_force_d_separated(g: GraphLike, a, b, z) -> bool:
    """True iff no active trail connects any pair across a and b given z."""
    a, b, z = set(a), set(b), set(z)
    desc_cache: dict = {}
    for s in a:
        for t in b:
            for trail in _all_trails(g, s, t):
                if _trail_active(g, trail, z, desc_cache):
                    return False
    return True


def random_dag(rng: np.random.Generator, n_nodes: int, p_edge: float = 0.4):
    """Random DAG over nodes v0..v{n-1} with forward edges in index order."""
    from sabs.diagram import DagView

    names = tuple(f"v{i}" for i in range(n_nodes))
    edges = []
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < p_edge:
                edges.append((names[i], names[j]))
    return DagView(names, tuple(edges))


# ---------------------------------------------------------------------------
# Dirichlet-multinomial predictive oracles
# ---------------------------------------------------------------------------

def prequential_log_ml(prior: np.ndarray, extra: np.ndarray) -> float:
    """Sequential one-step-ahead predictive product: records of ``extra``
    arrive one at a time against pseudocounts starting at ``prior``."""
    prior = np.asarray(prior, dtype=float)
    extra = np.asarray(extra, dtype=np.int64)
    total = 0.0
    for j in range(prior.shape[0]):
        counts = prior[j].copy()
        for k in range(prior.shape[1]):
            for _ in range(int(extra[j, k])):
                total += np.log(counts[k] / counts.sum())
                counts[k] += 1.0
    return total


def dirichlet_mc_log_ml(
    prior: np.ndarray, extra: np.ndarray, n_samples: int, rng: np.random.Generator
) -> float:
    """Monte-Carlo estimate of log E_{p ~ Dir(prior_j)}[prod_k p_k^{extra_jk}],
    summed over configurations."""
    total = 0.0
    for j in range(prior.shape[0]):
        if extra[j].sum() == 0:
            continue
        draws = rng.dirichlet(prior[j], size=n_samples)
        log_terms = (np.log(draws) * extra[j]).sum(axis=1)
        total += logsumexp(log_terms) - np.log(n_samples)
    return float(total)


# ---------------------------------------------------------------------------
# 1-D quadrature for the intercept-only logistic posterior
# ---------------------------------------------------------------------------

def cauchy_logistic_posterior_1d(
    n_ones: int, n_zeros: int, scale: float = 10.0, half_width: float = 60.0, points: int = 400001
):
    """Posterior mean and sd of theta for y ~ Bernoulli(sigmoid(theta)) with
    a Cauchy(0, scale) prior, by dense grid integration."""
    theta = np.linspace(-half_width, half_width, points)
    log_post = (
        -np.log1p((theta / scale) ** 2)
        + n_ones * log_expit(theta)
        + n_zeros * log_expit(-theta)
    )
    log_post -= log_post.max()
    w = np.exp(log_post)
    w /= np.trapezoid(w, theta)
    mean = np.trapezoid(w * theta, theta)
    var = np.trapezoid(w * (theta - mean) ** 2, theta)
    return float(mean), float(np.sqrt(var))


# ---------------------------------------------------------------------------
# Exact joints for all-discrete specs
# ---------------------------------------------------------------------------

def _discrete_pmf(mech, parent_vals: tuple[int, ...]) -> np.ndarray:
    if mech.kind == CPT:
        cards = mech.params["parent_cards"]
        idx = 0
        for card, v in zip(cards, parent_vals):
            idx = idx * int(card) + int(v)
        row = np.asarray(mech.params["table"], dtype=float)[idx]
        return row
    if mech.kind in (THRESHOLD_BERNOULLI, NOISY_OR):
        idx = 0
        for thr, v in zip(mech.params["thresholds"], parent_vals):
            idx = idx * 2 + int(v > thr)
        p = float(np.asarray(mech.params["probs"], dtype=float)[idx])
        return np.asarray([1.0 - p, p])
    raise ValueError(f"no discrete pmf for mechanism kind {mech.kind!r}")


def exact_joint(spec: ScmSpec, domain: str, regime: str = "observational") -> dict:
    """Full joint over all (non-selection) variables by brute-force
    enumeration of configurations; experimental regime replaces the
    treatment pmf by the uniform distribution."""
    d = spec.diagram
    order = [n for n in d.topological_order() if d.kind(n) != "selection"]
    cards = {}
    for name in order:
        meta = spec.meta_for(name)
        if meta.kind != "discrete":
            raise ValueError("exact_joint needs an all-discrete spec")
        cards[name] = meta.card
    joint: dict[tuple[int, ...], float] = {}
    for values in itertools.product(*(range(cards[n]) for n in order)):
        assign = dict(zip(order, values))
        p = 1.0
        for name in order:
            mech = spec.mechanisms[name][domain]
            if regime == "experimental" and name == d.treatment:
                p *= 1.0 / cards[name]
                continue
            pmf = _discrete_pmf(mech, tuple(assign[par] for par in mech.parents))
            p *= float(pmf[assign[name]])
        if p > 0:
            joint[values] = joint.get(values, 0.0) + p
    return {"order": order, "cards": cards, "probs": joint}


def marginal_of(joint: dict, names: list[str]) -> dict[tuple[int, ...], float]:
    idx = [joint["order"].index(n) for n in names]
    out: dict[tuple[int, ...], float] = {}
    for values, p in joint["probs"].items():
        key = tuple(values[i] for i in idx)
        out[key] = out.get(key, 0.0) + p
    return out


def conditional_of(joint: dict, target: str, given: list[str]):
    """P(target | given) as a dict keyed by the given-values tuple."""
    num = marginal_of(joint, [target, *given])
    den = marginal_of(joint, given)
    card = joint["cards"][target]
    out = {}
    for key, dp in den.items():
        if dp <= 0:
            continue
        out[key] = np.asarray(
            [num.get((v, *key), 0.0) / dp for v in range(card)]
        )
    return out
