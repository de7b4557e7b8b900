"""Structural causal model simulation for two-domain diagrams.

Every variable gets one mechanism per domain; sampling walks the diagram in
topological order, drawing exactly one variate per row per variable from a
dedicated PCG64 stream. Streams are keyed by node position, so two domains
sampled with the same seed consume identical randomness per variable: any
variable whose mechanism and parent values agree across domains produces a
bit-identical column.

The experimental regime replaces the treatment mechanism by uniform
randomization over its support.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

from .diagram import (
    LATENT,
    OBSERVED,
    SELECTION,
    SOURCE,
    TARGET,
    SelectionDiagram,
    format_diagram,
    latent_collider_diagram,
    latent_confounder_diagram,
    parse_diagram,
    structural_shift_diagram,
)

DISCRETE = "discrete"
CONTINUOUS = "continuous"

OBSERVATIONAL = "observational"
EXPERIMENTAL = "experimental"

_DOMAIN_TAGS = (SOURCE, TARGET, "pooled")
_REGIME_TAGS = (OBSERVATIONAL, EXPERIMENTAL, "mixed")


class SimulationError(ValueError):
    """Raised for invalid specs or impossible sampling requests."""


@dataclass(frozen=True)
class VariableMeta:
    kind: str  # discrete | continuous
    card: int | None = None

    def __post_init__(self):
        if self.kind not in (DISCRETE, CONTINUOUS):
            raise SimulationError(f"unknown variable kind {self.kind!r}")
        if self.kind == DISCRETE and (self.card is None or self.card < 2):
            raise SimulationError("discrete variables need card >= 2")


@dataclass
class Dataset:
    """Immutable column table with per-variable metadata and tags."""

    columns: dict[str, np.ndarray]
    meta: dict[str, VariableMeta]
    domain: str
    regime: str
    seed: int | None = None
    treatment: str | None = None

    def __post_init__(self):
        if self.domain not in _DOMAIN_TAGS:
            raise SimulationError(f"unknown domain tag {self.domain!r}")
        if self.regime not in _REGIME_TAGS:
            raise SimulationError(f"unknown regime tag {self.regime!r}")
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise SimulationError("columns have unequal lengths")
        for name, col in self.columns.items():
            if name not in self.meta:
                raise SimulationError(f"column {name!r} has no metadata")
            m = self.meta[name]
            if m.kind == DISCRETE and len(col):
                vals = np.asarray(col)
                if vals.min() < 0 or vals.max() >= m.card:
                    raise SimulationError(f"column {name!r} outside [0, {m.card})")

    @property
    def n(self) -> int:
        if not self.columns:
            return 0
        return len(next(iter(self.columns.values())))

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise SimulationError(f"dataset has no column {name!r}")
        return self.columns[name]

    def take(self, idx: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            {k: v[idx] for k, v in self.columns.items()},
            dict(self.meta),
            self.domain,
            self.regime,
            self.seed,
            self.treatment,
        )


def concat_rows(a: Dataset, b: Dataset) -> Dataset:
    """Stack two datasets sharing a schema; tags become pooled/mixed where
    they disagree."""
    if set(a.columns) != set(b.columns):
        raise SimulationError("datasets have different columns")
    for name in a.columns:
        if a.meta[name] != b.meta[name]:
            raise SimulationError(f"metadata mismatch for column {name!r}")
    if b.n == 0:
        return a
    if a.n == 0:
        return b
    cols = {k: np.concatenate([a.columns[k], b.columns[k]]) for k in a.columns}
    domain = a.domain if a.domain == b.domain else "pooled"
    regime = a.regime if a.regime == b.regime else "mixed"
    return Dataset(cols, dict(a.meta), domain, regime, None, a.treatment)


# ---------------------------------------------------------------------------
# Mechanisms
# ---------------------------------------------------------------------------

GAUSSIAN = "gaussian"
LOGISTIC = "logistic"
CPT = "multinomial-cpt"
NOISY_OR = "noisy-or"
THRESHOLD_BERNOULLI = "threshold-bernoulli"
GATED_LOGISTIC = "gated-logistic"

_BINARY_KINDS = (LOGISTIC, NOISY_OR, THRESHOLD_BERNOULLI, GATED_LOGISTIC)


@dataclass
class Mechanism:
    """How one variable is generated from its parents in one domain.

    Parameter layout by kind:

    - ``gaussian``: mean, sd, optional coef (one weight per parent).
    - ``logistic``: intercept, coef; emits Bernoulli(sigmoid(eta)).
    - ``multinomial-cpt``: table of shape (prod parent cards, card); the row
      index is mixed-radix with the first parent most significant.
    - ``threshold-bernoulli`` / ``noisy-or``: thresholds (one per parent) and
      probs over the 2**k indicator configurations, first parent most
      significant; noisy-or is the same machinery with an OR-shaped table.
    - ``gated-logistic``: when every parent listed in ``gate`` exceeds its
      threshold the outcome is Bernoulli(gate_prob), otherwise it follows a
      logistic in the remaining parents.
    """

    kind: str
    parents: tuple[str, ...]
    params: dict

    def __post_init__(self):
        self.parents = tuple(self.parents)
        p = self.params
        if self.kind == GAUSSIAN:
            sd = float(p["sd"])
            if sd < 0:
                raise SimulationError("gaussian sd must be nonnegative")
            coef = p.get("coef")
            if coef is not None and len(coef) != len(self.parents):
                raise SimulationError("gaussian coef length must match parents")
        elif self.kind == LOGISTIC:
            if len(p["coef"]) != len(self.parents):
                raise SimulationError("logistic coef length must match parents")
        elif self.kind == CPT:
            table = np.asarray(p["table"], dtype=float)
            if table.ndim != 2 or table.shape[1] < 2:
                raise SimulationError("cpt table must be 2-D with card >= 2")
            if (table < -1e-12).any() or (table > 1 + 1e-12).any():
                raise SimulationError("cpt entries must be probabilities")
            if not np.allclose(table.sum(axis=1), 1.0, atol=1e-12):
                raise SimulationError("cpt rows must sum to 1")
        elif self.kind in (THRESHOLD_BERNOULLI, NOISY_OR):
            k = len(self.parents)
            if len(p["thresholds"]) != k:
                raise SimulationError("one threshold per parent required")
            probs = np.asarray(p["probs"], dtype=float)
            if probs.shape != (2**k,):
                raise SimulationError(f"probs must have 2**{k} entries")
            if (probs < 0).any() or (probs > 1).any():
                raise SimulationError("probs must lie in [0, 1]")
        elif self.kind == GATED_LOGISTIC:
            for name, _thr in p["gate"]:
                if name not in self.parents:
                    raise SimulationError(f"gate parent {name!r} not in parents")
            if len(p["coef"]) != len(self.parents):
                raise SimulationError("coef length must match parents")
            if not 0 <= p["gate_prob"] <= 1:
                raise SimulationError("gate_prob must lie in [0, 1]")
        else:
            raise SimulationError(f"unknown mechanism kind {self.kind!r}")

    @property
    def output_meta(self) -> VariableMeta:
        if self.kind == GAUSSIAN:
            return VariableMeta(CONTINUOUS)
        if self.kind == CPT:
            return VariableMeta(DISCRETE, len(self.params["table"][0]))
        return VariableMeta(DISCRETE, 2)

    def success_prob(self, parent_values: Sequence[np.ndarray]) -> np.ndarray:
        """P(value = 1 | parents) for the binary kinds, vectorized."""
        p = self.params
        if self.kind == LOGISTIC:
            eta = float(p["intercept"])
            for c, v in zip(p["coef"], parent_values):
                eta = eta + c * v
            return expit(eta)
        if self.kind in (THRESHOLD_BERNOULLI, NOISY_OR):
            idx = 0
            for thr, v in zip(p["thresholds"], parent_values):
                idx = idx * 2 + (v > thr).astype(np.int64)
            return np.asarray(p["probs"], dtype=float)[idx]
        if self.kind == GATED_LOGISTIC:
            name_to_vals = dict(zip(self.parents, parent_values))
            gate = None
            for name, thr in p["gate"]:
                cond = name_to_vals[name] > thr
                gate = cond if gate is None else (gate & cond)
            eta = float(p["intercept"])
            for c, v in zip(p["coef"], parent_values):
                eta = eta + c * v
            return np.where(gate, float(p["gate_prob"]), expit(eta))
        raise SimulationError(f"{self.kind} has no success probability")

    def sample(self, parent_values: Sequence[np.ndarray], rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == GAUSSIAN:
            p = self.params
            loc = float(p["mean"])
            for c, v in zip(p.get("coef") or (), parent_values):
                loc = loc + c * v
            return loc + float(p["sd"]) * rng.standard_normal(n)
        if self.kind == CPT:
            table = np.asarray(self.params["table"], dtype=float)
            idx = _cpt_row_index(self, parent_values, n)
            rows = table[idx]
            u = rng.random(n)
            return (u[:, None] > np.cumsum(rows, axis=1)).sum(axis=1).astype(np.int64)
        prob = self.success_prob(parent_values)
        return (rng.random(n) < prob).astype(np.int64)


def _cpt_row_index(mech: Mechanism, parent_values: Sequence[np.ndarray], n: int) -> np.ndarray:
    cards = mech.params.get("parent_cards")
    if cards is None:
        raise SimulationError("cpt mechanisms need parent_cards")
    if len(cards) != len(mech.parents):
        raise SimulationError("parent_cards length must match parents")
    idx = np.zeros(n, dtype=np.int64)
    for card, v in zip(cards, parent_values):
        idx = idx * int(card) + np.asarray(v, dtype=np.int64)
    return idx


@dataclass
class ScmSpec:
    """A diagram plus one mechanism per (variable, domain)."""

    diagram: SelectionDiagram
    mechanisms: dict[str, dict[str, Mechanism]]

    def __post_init__(self):
        d = self.diagram
        for name in d.node_names:
            if d.kind(name) == SELECTION:
                continue
            per_domain = self.mechanisms.get(name)
            if per_domain is None or set(per_domain) != {SOURCE, TARGET}:
                raise SimulationError(f"{name!r} needs a source and a target mechanism")
            for dom in (SOURCE, TARGET):
                mech = per_domain[dom]
                expected = tuple(
                    p
                    for p in d.parents_of(name)
                    if d.kind(p) != SELECTION
                    and any(
                        e.parent == p and e.child == name and e.present_in(dom)
                        for e in d.edges
                    )
                )
                if set(mech.parents) != set(expected):
                    raise SimulationError(
                        f"{name!r} {dom} mechanism parents {mech.parents} "
                        f"do not match diagram parents {expected}"
                    )
        for name in d.node_names:
            if d.kind(name) == SELECTION:
                continue
            has_selection_parent = any(
                d.kind(p) == SELECTION for p in d.parents_of(name)
            )
            has_domain_edge = any(
                e.child == name and e.domains != "both" for e in d.edges
            )
            if not has_selection_parent and not has_domain_edge:
                if self.mechanisms[name][SOURCE] != self.mechanisms[name][TARGET]:
                    raise SimulationError(
                        f"{name!r} has no selection parent but domain-specific mechanisms"
                    )

    def meta_for(self, name: str) -> VariableMeta:
        return self.mechanisms[name][TARGET].output_meta

    @property
    def observed(self) -> tuple[str, ...]:
        return self.diagram.observed_nodes

    @property
    def covariates(self) -> tuple[str, ...]:
        """Observed pre-treatment covariates: neither treatment nor outcome."""
        skip = {self.diagram.treatment, self.diagram.outcome}
        return tuple(n for n in self.observed if n not in skip)


def sample(
    spec: ScmSpec,
    domain: str,
    regime: str,
    n: int,
    seed: int,
    keep_latent: bool = False,
) -> Dataset:
    """Draw n i.i.d. rows; experimental regime randomizes the treatment
    uniformly over its support instead of using its mechanism."""
    if n < 1:
        raise SimulationError("n must be >= 1")
    if domain not in (SOURCE, TARGET):
        raise SimulationError(f"domain must be source or target, got {domain!r}")
    if regime not in (OBSERVATIONAL, EXPERIMENTAL):
        raise SimulationError(f"unknown regime {regime!r}")
    d = spec.diagram
    streams = np.random.SeedSequence(seed).spawn(len(d.node_names))
    stream_of = {name: streams[i] for i, name in enumerate(d.node_names)}
    values: dict[str, np.ndarray] = {}
    for name in d.topological_order():
        if d.kind(name) == SELECTION:
            continue
        rng = np.random.Generator(np.random.PCG64(stream_of[name]))
        mech = spec.mechanisms[name][domain]
        if regime == EXPERIMENTAL and name == d.treatment:
            meta = mech.output_meta
            if meta.kind != DISCRETE:
                raise SimulationError("experimental randomization needs a discrete treatment")
            values[name] = (rng.random(n) * meta.card).astype(np.int64)
            continue
        parent_vals = [values[p] for p in mech.parents]
        values[name] = mech.sample(parent_vals, rng, n)

    keep = [
        name
        for name in d.node_names
        if d.kind(name) == OBSERVED or (keep_latent and d.kind(name) == LATENT)
    ]
    meta = {name: spec.meta_for(name) for name in keep}
    return Dataset(
        {name: values[name] for name in keep},
        meta,
        domain,
        regime,
        seed,
        treatment=d.treatment if regime == EXPERIMENTAL else None,
    )


# ---------------------------------------------------------------------------
# CSV + JSON round trips
# ---------------------------------------------------------------------------

def save_dataset(ds: Dataset, stem: str | Path) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.schema.json``."""
    stem = Path(stem)
    csv_path = stem.with_suffix(".csv")
    schema_path = stem.with_suffix(".schema.json")
    names = list(ds.columns)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        cols = [ds.columns[n] for n in names]
        for i in range(ds.n):
            writer.writerow(
                [
                    int(c[i]) if ds.meta[n].kind == DISCRETE else repr(float(c[i]))
                    for n, c in zip(names, cols)
                ]
            )
    schema = {
        "variables": {
            n: (
                {"type": "discrete", "card": ds.meta[n].card}
                if ds.meta[n].kind == DISCRETE
                else {"type": "continuous"}
            )
            for n in names
        },
        "domain": ds.domain,
        "regime": ds.regime,
        "seed": ds.seed,
        "treatment": ds.treatment,
    }
    with open(schema_path, "w") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")
    return csv_path, schema_path


def load_dataset(csv_path: str | Path, schema_path: str | Path | None = None) -> Dataset:
    csv_path = Path(csv_path)
    if schema_path is None:
        schema_path = csv_path.with_suffix(".schema.json")
    with open(schema_path) as fh:
        schema = json.load(fh)
    meta = {}
    for name, info in schema["variables"].items():
        if info["type"] == "discrete":
            meta[name] = VariableMeta(DISCRETE, int(info["card"]))
        else:
            meta[name] = VariableMeta(CONTINUOUS)
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    columns = {}
    for i, name in enumerate(header):
        if name not in meta:
            raise SimulationError(f"column {name!r} missing from schema")
        raw = [row[i] for row in rows]
        if meta[name].kind == DISCRETE:
            columns[name] = np.asarray([int(v) for v in raw], dtype=np.int64)
        else:
            columns[name] = np.asarray([float(v) for v in raw], dtype=float)
    return Dataset(
        columns,
        meta,
        schema["domain"],
        schema["regime"],
        schema.get("seed"),
        schema.get("treatment"),
    )


def spec_to_json(spec: ScmSpec) -> dict:
    return {
        "diagram": format_diagram(spec.diagram),
        "mechanisms": {
            name: {
                dom: {
                    "kind": m.kind,
                    "parents": list(m.parents),
                    "params": _params_to_json(m.params),
                }
                for dom, m in per_domain.items()
            }
            for name, per_domain in spec.mechanisms.items()
        },
    }


def _params_to_json(params: dict) -> dict:
    out = {}
    for key, value in params.items():
        if isinstance(value, np.ndarray):
            out[key] = value.tolist()
        elif isinstance(value, (list, tuple)):
            out[key] = [list(v) if isinstance(v, (list, tuple)) else v for v in value]
        else:
            out[key] = value
    return out


def spec_from_json(payload: dict) -> ScmSpec:
    diagram = parse_diagram(payload["diagram"])
    mechanisms = {}
    for name, per_domain in payload["mechanisms"].items():
        mechanisms[name] = {
            dom: Mechanism(
                kind=entry["kind"],
                parents=tuple(entry["parents"]),
                params=_params_from_json(entry["kind"], entry["params"]),
            )
            for dom, entry in per_domain.items()
        }
    return ScmSpec(diagram, mechanisms)


def _params_from_json(kind: str, params: dict) -> dict:
    out = dict(params)
    if kind == GATED_LOGISTIC and "gate" in out:
        out["gate"] = [(str(n), float(t)) for n, t in out["gate"]]
    return out


def save_spec(spec: ScmSpec, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(spec_to_json(spec), fh, indent=2)
        fh.write("\n")
    return path


def load_spec(path: str | Path) -> ScmSpec:
    with open(path) as fh:
        return spec_from_json(json.load(fh))


# ---------------------------------------------------------------------------
# Benchmark scenarios
# ---------------------------------------------------------------------------

def _signed_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(rng.choice((-1.0, 1.0)) * rng.uniform(lo, hi))


# Ranges for randomly drawn logistic coefficients: one for binary inputs and
# intercepts, one for continuous inputs.
BINARY_COEF_RANGE = (0.5, 2.5)
CONTINUOUS_COEF_RANGE = (0.2, 1.0)
# Location layout for shifted covariates: the target mean is drawn near
# zero and the source mean sits a bounded-away-from-zero distance from it,
# so every announced distribution discrepancy is a real one.
TARGET_LOCATION_RANGE = (-5.0, 5.0)
LOCATION_GAP_RANGE = (5.0, 15.0)


def build_scenario1(seed: int, scale_is_sd: bool = True) -> ScmSpec:
    """Two shifted continuous confounders with a source-only confounding edge.

    Z and W are wide normals whose locations differ between the domains; X
    and Y are logistic in their parents with coefficients redrawn on every
    call. {Z, W} is the only sABS among subsets of {Z, W}.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    d = structural_shift_diagram()
    sd = 10.0 if scale_is_sd else float(np.sqrt(10.0))

    def shifted_gaussian() -> dict[str, Mechanism]:
        mean_target = rng.uniform(*TARGET_LOCATION_RANGE)
        mean_source = mean_target + _signed_uniform(rng, *LOCATION_GAP_RANGE)
        return {
            SOURCE: Mechanism(GAUSSIAN, (), {"mean": mean_source, "sd": sd}),
            TARGET: Mechanism(GAUSSIAN, (), {"mean": mean_target, "sd": sd}),
        }

    mech_z = shifted_gaussian()
    mech_w = shifted_gaussian()
    x_source = Mechanism(
        LOGISTIC,
        ("Z", "W"),
        {
            "intercept": _signed_uniform(rng, *BINARY_COEF_RANGE),
            "coef": [
                _signed_uniform(rng, *CONTINUOUS_COEF_RANGE),
                _signed_uniform(rng, *CONTINUOUS_COEF_RANGE),
            ],
        },
    )
    x_target = Mechanism(
        LOGISTIC,
        ("Z",),
        {
            "intercept": _signed_uniform(rng, *BINARY_COEF_RANGE),
            "coef": [_signed_uniform(rng, *CONTINUOUS_COEF_RANGE)],
        },
    )
    y_shared = Mechanism(
        LOGISTIC,
        ("X", "Z", "W"),
        {
            "intercept": _signed_uniform(rng, *BINARY_COEF_RANGE),
            "coef": [
                _signed_uniform(rng, *BINARY_COEF_RANGE),
                _signed_uniform(rng, *CONTINUOUS_COEF_RANGE),
                _signed_uniform(rng, *CONTINUOUS_COEF_RANGE),
            ],
        },
    )
    return ScmSpec(
        d,
        {
            "Z": mech_z,
            "W": mech_w,
            "X": {SOURCE: x_source, TARGET: x_target},
            "Y": {SOURCE: y_shared, TARGET: y_shared},
        },
    )


def build_scenario2(seed: int, alpha: float = 0.99) -> ScmSpec:
    """Latent-collider benchmark with a domain-flipped OR-style covariate.

    H1, H2 and W are standard normals; X tracks H2 through a noisy
    threshold; Y is near-deterministic when X = 1 and H1 is high, otherwise
    logistic in W; Z fires when either latent is high, except that the
    both-high cell flips probability between the domains. {W} and the empty
    set are the sABS among subsets of {Z, W}.
    """
    del seed  # mechanisms are fully pinned; kept for a uniform builder API
    d = latent_collider_diagram()
    std_normal = Mechanism(GAUSSIAN, (), {"mean": 0.0, "sd": 1.0})
    x_mech = Mechanism(
        THRESHOLD_BERNOULLI,
        ("H2",),
        {"thresholds": [0.5], "probs": [1.0 - alpha, alpha]},
    )
    y_mech = Mechanism(
        GATED_LOGISTIC,
        ("X", "H1", "W"),
        {
            "gate": [("X", 0.5), ("H1", 0.5)],
            "gate_prob": alpha,
            "intercept": -1.0,
            "coef": [0.0, 0.0, 3.0],
        },
    )
    # probs indexed by (1{H1>.5}, 1{H2>.5}) with H1 most significant. Only
    # the both-high cells are pinned (source 1-alpha, target alpha); the
    # remaining cells complete the rule as flipped noisy threshold gates:
    # the target gate fires when both latents are high, the source gate when
    # both are low, and the two tables coincide at alpha = 0.5.
    z_source = Mechanism(
        NOISY_OR,
        ("H1", "H2"),
        {"thresholds": [0.5, 0.5], "probs": [alpha, 1 - alpha, 1 - alpha, 1 - alpha]},
    )
    z_target = Mechanism(
        NOISY_OR,
        ("H1", "H2"),
        {"thresholds": [0.5, 0.5], "probs": [1 - alpha, 1 - alpha, 1 - alpha, alpha]},
    )
    shared = lambda m: {SOURCE: m, TARGET: m}
    return ScmSpec(
        d,
        {
            "H1": shared(std_normal),
            "H2": shared(std_normal),
            "W": shared(std_normal),
            "X": shared(x_mech),
            "Y": shared(y_mech),
            "Z": {SOURCE: z_source, TARGET: z_target},
        },
    )


def _random_cpt(rng: np.random.Generator, n_rows: int, card: int = 2,
                lo: float = 0.1, hi: float = 0.9) -> list[list[float]]:
    if card == 2:
        p1 = rng.uniform(lo, hi, size=n_rows)
        return [[1.0 - p, p] for p in p1]
    table = rng.dirichlet(np.full(card, 5.0), size=n_rows)
    table = np.clip(table, 0.02, None)
    table = table / table.sum(axis=1, keepdims=True)
    return table.tolist()


# Binary-benchmark effect floors: shifted roots move success probability by
# at least this much between domains, and every CPT parent carries at least
# one logit unit of effect, so announced discrepancies and edges are real.
BINARY_SHIFT_RANGE = (0.3, 0.6)
LOGIT_COEF_RANGE = (1.0, 2.2)
LOGIT_INTERCEPT_RANGE = (0.25, 1.0)


def _shifted_binary_root(rng: np.random.Generator) -> dict[str, Mechanism]:
    p_target = rng.uniform(0.2, 0.8)
    up = p_target < 0.5
    room = (0.95 - p_target) if up else (p_target - 0.05)
    gap = rng.uniform(BINARY_SHIFT_RANGE[0], min(BINARY_SHIFT_RANGE[1], room))
    p_source = p_target + gap if up else p_target - gap
    return {
        SOURCE: Mechanism(CPT, (), {"table": [[1.0 - p_source, p_source]], "parent_cards": []}),
        TARGET: Mechanism(CPT, (), {"table": [[1.0 - p_target, p_target]], "parent_cards": []}),
    }


def _logit_cpt(rng: np.random.Generator, n_parents: int) -> list[list[float]]:
    """Binary CPT whose rows follow a random-coefficient logistic in the
    parent bits; coefficient magnitudes are bounded below."""
    from scipy.special import expit as _expit

    c0 = _signed_uniform(rng, *LOGIT_INTERCEPT_RANGE)
    coefs = [_signed_uniform(rng, *LOGIT_COEF_RANGE) for _ in range(n_parents)]
    rows = []
    for idx in range(2**n_parents):
        bits = [(idx >> (n_parents - 1 - i)) & 1 for i in range(n_parents)]
        p = float(_expit(c0 + sum(c * b for c, b in zip(coefs, bits))))
        rows.append([1.0 - p, p])
    return rows


def build_scenario1_discrete(seed: int, noise_card: int = 0) -> ScmSpec:
    """All-binary analogue of the shifted-confounders benchmark.

    Z and W get per-domain success probabilities separated by a bounded
    gap; X and Y follow random-coefficient logistic CPTs with effect floors.
    With ``noise_card`` >= 2 an isolated covariate R of that cardinality is
    added; R is independent of everything, so any sABS stays an sABS after
    adding it while the extra configurations dilute the score.
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(2,)))
    base = structural_shift_diagram()
    nodes = [(n, base.kind(n)) for n in base.node_names]
    edges = [(e.parent, e.child, e.domains) for e in base.edges]
    if noise_card >= 2:
        nodes.append(("R", OBSERVED))
    d = SelectionDiagram(nodes, edges, base.treatment, base.outcome)

    mech = {
        "Z": _shifted_binary_root(rng),
        "W": _shifted_binary_root(rng),
        "X": {
            SOURCE: Mechanism(
                CPT, ("Z", "W"),
                {"table": _logit_cpt(rng, 2), "parent_cards": [2, 2]},
            ),
            TARGET: Mechanism(
                CPT, ("Z",),
                {"table": _logit_cpt(rng, 1), "parent_cards": [2]},
            ),
        },
    }
    y_shared = Mechanism(
        CPT, ("X", "Z", "W"),
        {"table": _logit_cpt(rng, 3), "parent_cards": [2, 2, 2]},
    )
    mech["Y"] = {SOURCE: y_shared, TARGET: y_shared}
    if noise_card >= 2:
        table = _random_cpt(rng, 1, card=noise_card)
        r_shared = Mechanism(CPT, (), {"table": table, "parent_cards": []})
        mech["R"] = {SOURCE: r_shared, TARGET: r_shared}
    return ScmSpec(d, mech)


def build_scenario2_discrete(seed: int) -> ScmSpec:
    """All-binary latent-collider benchmark; Z follows the same flipped
    threshold gates as the mixed variant with randomly drawn noise levels."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(3,)))
    d = latent_collider_diagram()

    def shared_root() -> dict[str, Mechanism]:
        p = rng.uniform(0.2, 0.8)
        m = Mechanism(CPT, (), {"table": [[1.0 - p, p]], "parent_cards": []})
        return {SOURCE: m, TARGET: m}

    def strong_logit_cpt(parents: tuple[str, ...], strong: str) -> list[list[float]]:
        c0 = _signed_uniform(rng, *LOGIT_INTERCEPT_RANGE)
        coefs = [
            _signed_uniform(rng, 2.2, 3.2) if p == strong
            else _signed_uniform(rng, *LOGIT_COEF_RANGE)
            for p in parents
        ]
        from scipy.special import expit as _expit

        rows = []
        k = len(parents)
        for idx in range(2**k):
            bits = [(idx >> (k - 1 - i)) & 1 for i in range(k)]
            p = float(_expit(c0 + sum(c * b for c, b in zip(coefs, bits))))
            rows.append([1.0 - p, p])
        return rows

    x_mech = Mechanism(
        CPT, ("H2",), {"table": strong_logit_cpt(("H2",), "H2"), "parent_cards": [2]}
    )
    y_mech = Mechanism(
        CPT, ("X", "H1", "W"),
        {"table": strong_logit_cpt(("X", "H1", "W"), "H1"), "parent_cards": [2, 2, 2]},
    )
    hi = rng.uniform(0.9, 0.98)
    lo = rng.uniform(0.02, 0.1)
    mech = {
        "H1": shared_root(),
        "H2": shared_root(),
        "W": shared_root(),
        "X": {SOURCE: x_mech, TARGET: x_mech},
        "Y": {SOURCE: y_mech, TARGET: y_mech},
        "Z": {
            SOURCE: Mechanism(
                NOISY_OR, ("H1", "H2"),
                {"thresholds": [0.5, 0.5], "probs": [hi, lo, lo, lo]},
            ),
            TARGET: Mechanism(
                NOISY_OR, ("H1", "H2"),
                {"thresholds": [0.5, 0.5], "probs": [lo, lo, lo, hi]},
            ),
        },
    }
    return ScmSpec(d, mech)


def build_no_sabs_spec(seed: int) -> ScmSpec:
    """Mixed-data benchmark on the latent-confounder structure: every subset
    of {Z, W} fails the backdoor criterion, so no sABS exists."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(4,)))
    d = latent_confounder_diagram()

    def shifted_gaussian() -> dict[str, Mechanism]:
        return {
            dom: Mechanism(GAUSSIAN, (), {"mean": rng.uniform(-2.0, 2.0), "sd": 1.0})
            for dom in (SOURCE, TARGET)
        }

    h = Mechanism(GAUSSIAN, (), {"mean": 0.0, "sd": 1.0})
    x_mech = Mechanism(
        LOGISTIC, ("Z", "H"),
        {
            "intercept": _signed_uniform(rng, 0.5, 1.5),
            "coef": [_signed_uniform(rng, 0.5, 1.5), _signed_uniform(rng, 1.5, 2.5)],
        },
    )
    y_mech = Mechanism(
        LOGISTIC, ("Z", "W", "X", "H"),
        {
            "intercept": _signed_uniform(rng, 0.5, 1.5),
            "coef": [
                _signed_uniform(rng, 0.5, 1.5),
                _signed_uniform(rng, 0.5, 1.5),
                _signed_uniform(rng, 0.5, 2.5),
                _signed_uniform(rng, 1.5, 2.5),
            ],
        },
    )
    return ScmSpec(
        d,
        {
            "Z": shifted_gaussian(),
            "W": shifted_gaussian(),
            "H": {SOURCE: h, TARGET: h},
            "X": {SOURCE: x_mech, TARGET: x_mech},
            "Y": {SOURCE: y_mech, TARGET: y_mech},
        },
    )


def build_no_sabs_spec_discrete(seed: int) -> ScmSpec:
    """All-binary variant of the no-sABS benchmark; the latent confounder
    carries the dominant effect on both treatment and outcome so its
    unblockability is visible at moderate sample sizes."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(5,)))
    d = latent_confounder_diagram()

    def root(dom_specific: bool) -> dict[str, Mechanism]:
        shared_val = rng.uniform(0.2, 0.8)
        out = {}
        for dom in (SOURCE, TARGET):
            p = rng.uniform(0.1, 0.9) if dom_specific else shared_val
            out[dom] = Mechanism(CPT, (), {"table": [[1.0 - p, p]], "parent_cards": []})
        return out

    def confounded_cpt(parents: tuple[str, ...]) -> list[list[float]]:
        from scipy.special import expit as _expit

        coefs = [
            _signed_uniform(rng, 2.8, 3.6) if p == "H"
            else _signed_uniform(rng, *LOGIT_COEF_RANGE)
            for p in parents
        ]
        # center the intercept so cells stay in the sensitive mid-range
        c0 = -0.5 * sum(coefs) + rng.uniform(-0.5, 0.5)
        k = len(parents)
        rows = []
        for idx in range(2**k):
            bits = [(idx >> (k - 1 - i)) & 1 for i in range(k)]
            p = float(_expit(c0 + sum(c * b for c, b in zip(coefs, bits))))
            rows.append([1.0 - p, p])
        return rows

    x_mech = Mechanism(
        CPT, ("Z", "H"), {"table": confounded_cpt(("Z", "H")), "parent_cards": [2, 2]}
    )
    y_mech = Mechanism(
        CPT, ("Z", "W", "X", "H"),
        {"table": confounded_cpt(("Z", "W", "X", "H")), "parent_cards": [2, 2, 2, 2]},
    )
    return ScmSpec(
        d,
        {
            "Z": root(True),
            "W": root(True),
            "H": root(False),
            "X": {SOURCE: x_mech, TARGET: x_mech},
            "Y": {SOURCE: y_mech, TARGET: y_mech},
        },
    )


SCENARIO_BUILDERS = {
    "1": build_scenario1,
    "2": build_scenario2,
    "1-discrete": build_scenario1_discrete,
    "2-discrete": build_scenario2_discrete,
}


def build_scenario(name: str, seed: int) -> ScmSpec:
    if name not in SCENARIO_BUILDERS:
        raise SimulationError(
            f"unknown scenario {name!r}; choose from {sorted(SCENARIO_BUILDERS)}"
        )
    return SCENARIO_BUILDERS[name](seed)


def discretize_scenarios(seed: int) -> dict[str, ScmSpec]:
    """All-discrete analogues of both benchmarks, keyed by scenario name."""
    return {
        "1": build_scenario1_discrete(seed),
        "2": build_scenario2_discrete(seed),
    }
