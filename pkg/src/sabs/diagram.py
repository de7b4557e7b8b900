"""Selection diagrams and exact graphical criteria.

A selection diagram is a DAG over observed, latent and selection nodes
describing two domains at once: selection nodes point at variables whose
mechanism may differ between the source and the target domain, and each
directed edge carries a tag saying in which domain(s) it is present.

The module provides the graphical ground truth used everywhere else:
d-separation, the backdoor criterion on the target-domain graph, the
s-admissibility criterion on the manipulated full diagram, and their
conjunction (an s-admissible backdoor set, "sABS").
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

OBSERVED = "observed"
LATENT = "latent"
SELECTION = "selection"
_KINDS = (OBSERVED, LATENT, SELECTION)

SOURCE = "source"
TARGET = "target"
BOTH = "both"
_DOMAINS = (SOURCE, TARGET, BOTH)

REMOVE_INTO = "remove-into"
REMOVE_OUT_OF = "remove-out-of"


class DiagramError(ValueError):
    """Raised for malformed diagrams or invalid query arguments."""


@dataclass(frozen=True)
class NodeId:
    """Stable handle for a node: position in the diagram plus its label."""

    index: int
    name: str


@dataclass(frozen=True)
class Edge:
    parent: str
    child: str
    domains: str = BOTH  # source | target | both

    def present_in(self, domain: str) -> bool:
        return self.domains == BOTH or self.domains == domain


class SelectionDiagram:
    """Immutable two-domain causal diagram with treatment and outcome.

    Edges tagged ``source`` or ``target`` exist in only one of the two
    domain graphs; the diagram itself always carries the union.
    """

    def __init__(
        self,
        nodes: Sequence[tuple[str, str]],
        edges: Sequence[tuple[str, str] | tuple[str, str, str]],
        treatment: str,
        outcome: str,
    ):
        names = [n for n, _ in nodes]
        if len(set(names)) != len(names):
            raise DiagramError("duplicate node names")
        kinds = dict(nodes)
        for name, kind in kinds.items():
            if kind not in _KINDS:
                raise DiagramError(f"unknown node kind {kind!r} for {name!r}")
        edge_objs = []
        for e in edges:
            if len(e) == 2:
                edge_objs.append(Edge(e[0], e[1]))
            else:
                p, c, dom = e
                if dom not in _DOMAINS:
                    raise DiagramError(f"unknown edge domain tag {dom!r}")
                edge_objs.append(Edge(p, c, dom))
        for e in edge_objs:
            if e.parent not in kinds or e.child not in kinds:
                raise DiagramError(f"edge {e.parent}->{e.child} uses unknown node")
            if kinds[e.child] == SELECTION:
                raise DiagramError(f"edge into selection node {e.child!r}")
        if len({(e.parent, e.child) for e in edge_objs}) != len(edge_objs):
            raise DiagramError("duplicate edges")
        for t, role in ((treatment, "treatment"), (outcome, "outcome")):
            if t not in kinds:
                raise DiagramError(f"{role} {t!r} is not a node")
            if kinds[t] != OBSERVED:
                raise DiagramError(f"{role} {t!r} must be observed")
        if treatment == outcome:
            raise DiagramError("treatment and outcome must differ")

        self._names: tuple[str, ...] = tuple(names)
        self._kinds: dict[str, str] = kinds
        self._edges: tuple[Edge, ...] = tuple(edge_objs)
        self.treatment = treatment
        self.outcome = outcome
        self._parents: dict[str, tuple[str, ...]] = {n: () for n in names}
        self._children: dict[str, tuple[str, ...]] = {n: () for n in names}
        for e in edge_objs:
            self._parents[e.child] += (e.parent,)
            self._children[e.parent] += (e.child,)
        self._check_acyclic()

    def _check_acyclic(self) -> None:
        indeg = {n: len(self._parents[n]) for n in self._names}
        ready = deque(n for n, d in indeg.items() if d == 0)
        seen = 0
        while ready:
            n = ready.popleft()
            seen += 1
            for c in self._children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if seen != len(self._names):
            raise DiagramError("edge set contains a cycle")

    # -- basic accessors -------------------------------------------------

    @property
    def node_names(self) -> tuple[str, ...]:
        return self._names

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    def kind(self, name: str) -> str:
        self._require(name)
        return self._kinds[name]

    def node_id(self, name: str) -> NodeId:
        self._require(name)
        return NodeId(self._names.index(name), name)

    def nodes_of_kind(self, kind: str) -> tuple[str, ...]:
        return tuple(n for n in self._names if self._kinds[n] == kind)

    @property
    def selection_nodes(self) -> tuple[str, ...]:
        return self.nodes_of_kind(SELECTION)

    @property
    def observed_nodes(self) -> tuple[str, ...]:
        return self.nodes_of_kind(OBSERVED)

    def parents_of(self, name: str) -> tuple[str, ...]:
        self._require(name)
        return self._parents[name]

    def children_of(self, name: str) -> tuple[str, ...]:
        self._require(name)
        return self._children[name]

    def _require(self, name: str) -> None:
        if name not in self._kinds:
            raise DiagramError(f"unknown node {name!r}")

    # -- derived graphs ---------------------------------------------------

    def domain_graph(self, domain: str, drop_selection: bool = True) -> "DagView":
        """One domain's causal graph: domain-tagged edges only, selection
        nodes removed by default."""
        if domain not in (SOURCE, TARGET):
            raise DiagramError(f"domain must be source or target, got {domain!r}")
        keep = [
            n
            for n in self._names
            if not (drop_selection and self._kinds[n] == SELECTION)
        ]
        keep_set = set(keep)
        edges = [
            (e.parent, e.child)
            for e in self._edges
            if e.present_in(domain) and e.parent in keep_set and e.child in keep_set
        ]
        return DagView(tuple(keep), tuple(edges))

    def full_view(self) -> "DagView":
        """All nodes and the union edge set (the diagram itself as a DAG)."""
        return DagView(self._names, tuple((e.parent, e.child) for e in self._edges))

    def topological_order(self) -> tuple[str, ...]:
        indeg = {n: len(self._parents[n]) for n in self._names}
        ready = deque(n for n in self._names if indeg[n] == 0)
        order = []
        while ready:
            n = ready.popleft()
            order.append(n)
            for c in self._children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        return tuple(order)


@dataclass(frozen=True)
class DagView:
    """Plain DAG with the same query surface as SelectionDiagram."""

    names: tuple[str, ...]
    edge_pairs: tuple[tuple[str, str], ...]
    _parents: dict = field(init=False, repr=False, compare=False)
    _children: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        parents = {n: () for n in self.names}
        children = {n: () for n in self.names}
        for p, c in self.edge_pairs:
            parents[c] += (p,)
            children[p] += (c,)
        object.__setattr__(self, "_parents", parents)
        object.__setattr__(self, "_children", children)

    @property
    def node_names(self) -> tuple[str, ...]:
        return self.names

    def parents_of(self, name: str) -> tuple[str, ...]:
        if name not in self._parents:
            raise DiagramError(f"unknown node {name!r}")
        return self._parents[name]

    def children_of(self, name: str) -> tuple[str, ...]:
        if name not in self._children:
            raise DiagramError(f"unknown node {name!r}")
        return self._children[name]


@dataclass(frozen=True)
class ManipulatedView:
    """A graph with the treatment's incoming or outgoing edges removed."""

    base: SelectionDiagram | DagView
    mode: str  # remove-into | remove-out-of
    node: str

    def __post_init__(self):
        if self.mode not in (REMOVE_INTO, REMOVE_OUT_OF):
            raise DiagramError(f"unknown manipulation mode {self.mode!r}")
        if self.node not in self.base.node_names:
            raise DiagramError(f"unknown node {self.node!r}")

    @property
    def node_names(self) -> tuple[str, ...]:
        return self.base.node_names

    def parents_of(self, name: str) -> tuple[str, ...]:
        if self.mode == REMOVE_INTO and name == self.node:
            return ()
        return self.base.parents_of(name)

    def children_of(self, name: str) -> tuple[str, ...]:
        if self.mode == REMOVE_OUT_OF and name == self.node:
            return ()
        ch = self.base.children_of(name)
        if self.mode == REMOVE_INTO:
            return tuple(c for c in ch if c != self.node)
        return ch


GraphLike = SelectionDiagram | DagView | ManipulatedView


def ancestors(g: GraphLike, names: Iterable[str]) -> set[str]:
    """All strict ancestors of ``names`` plus the nodes themselves."""
    out = set()
    stack = list(names)
    while stack:
        n = stack.pop()
        if n in out:
            continue
        out.add(n)
        stack.extend(g.parents_of(n))
    return out


def descendants(g: GraphLike, name: str) -> set[str]:
    """Strict descendants of ``name``."""
    out: set[str] = set()
    stack = list(g.children_of(name))
    while stack:
        n = stack.pop()
        if n in out:
            continue
        out.add(n)
        stack.extend(g.children_of(n))
    return out


def d_separated(
    g: GraphLike, a: Iterable[str], b: Iterable[str], z: Iterable[str] = ()
) -> bool:
    """True iff every path between node sets ``a`` and ``b`` is blocked by ``z``.

    Linear-time reachability over (node, arrival-direction) states; a trail
    through a collider stays active only while the collider is in ``z`` or
    has a descendant there.
    """
    a, b, z = set(a), set(b), set(z)
    all_names = set(g.node_names)
    for s in (a, b, z):
        missing = s - all_names
        if missing:
            raise DiagramError(f"unknown node(s) {sorted(missing)}")
    if a & b or a & z or b & z:
        raise DiagramError("query sets a, b, z must be pairwise disjoint")
    if not a or not b:
        return True

    anc_z = ancestors(g, z) if z else set()
    # state: (node, came_from_child). Starting nodes behave as if entered
    # from a child so both directions open up.
    frontier = deque((n, True) for n in a)
    visited: set[tuple[str, bool]] = set()
    while frontier:
        node, from_child = frontier.popleft()
        if (node, from_child) in visited:
            continue
        visited.add((node, from_child))
        if node in b and node not in z:
            return False
        if from_child:
            if node not in z:
                for p in g.parents_of(node):
                    frontier.append((p, True))
                for c in g.children_of(node):
                    frontier.append((c, False))
        else:
            if node not in z:
                for c in g.children_of(node):
                    frontier.append((c, False))
            if node in anc_z:
                for p in g.parents_of(node):
                    frontier.append((p, True))
    return True


def _as_set(z: Iterable[str] | str) -> set[str]:
    if isinstance(z, str):
        raise DiagramError("z must be an iterable of names, not a single string")
    return set(z)


def is_backdoor_set(
    diagram: SelectionDiagram, x: str, y: str, z: Iterable[str] = ()
) -> bool:
    """Backdoor criterion in the target-domain graph: z d-separates x from y
    once x's outgoing edges are removed. Requires z to be pre-treatment."""
    z = _as_set(z)
    if x == y:
        raise DiagramError("treatment and outcome must differ")
    desc = descendants(diagram.full_view(), x)
    bad = z & desc
    if bad:
        raise DiagramError(f"z contains descendant(s) of {x!r}: {sorted(bad)}")
    g = diagram.domain_graph(TARGET, drop_selection=True)
    view = ManipulatedView(g, REMOVE_OUT_OF, x)
    return d_separated(view, {x}, {y}, z)


def is_s_admissible(
    diagram: SelectionDiagram, x: str, y: str, z: Iterable[str] = ()
) -> bool:
    """True iff z d-separates the outcome from every selection node in the
    diagram with x's incoming edges removed."""
    z = _as_set(z)
    if x == y:
        raise DiagramError("treatment and outcome must differ")
    desc = descendants(diagram.full_view(), x)
    bad = z & desc
    if bad:
        raise DiagramError(f"z contains descendant(s) of {x!r}: {sorted(bad)}")
    sel = set(diagram.selection_nodes)
    if not sel:
        return True
    view = ManipulatedView(diagram.full_view(), REMOVE_INTO, x)
    return d_separated(view, {y}, sel, z)


def is_sabs(diagram: SelectionDiagram, x: str, y: str, z: Iterable[str] = ()) -> bool:
    """s-admissible backdoor set: both criteria hold at once."""
    return is_backdoor_set(diagram, x, y, z) and is_s_admissible(diagram, x, y, z)


def subsets_in_canonical_order(
    candidates: Iterable[str], index_of: dict[str, int] | None = None
) -> Iterator[tuple[str, ...]]:
    """Subsets ordered by cardinality, then lexicographically on sorted
    node indices; used for all reproducible enumeration output."""
    cand = list(candidates)
    if index_of is None:
        index_of = {n: i for i, n in enumerate(sorted(cand))}
    cand.sort(key=lambda n: index_of[n])
    for k in range(len(cand) + 1):
        for combo in itertools.combinations(cand, k):
            yield combo


def enumerate_sabs(
    diagram: SelectionDiagram, x: str, y: str, candidates: Iterable[str]
) -> list[tuple[str, ...]]:
    """Every subset of ``candidates`` that is an sABS, in canonical order."""
    cand = list(candidates)
    if len(cand) > 20:
        raise DiagramError(f"exhaustive enumeration limited to 20 candidates, got {len(cand)}")
    index_of = {n: diagram.node_names.index(n) for n in cand}
    out = []
    for z in subsets_in_canonical_order(cand, index_of):
        if is_sabs(diagram, x, y, z):
            out.append(z)
    return out


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def parse_diagram(text: str) -> SelectionDiagram:
    """Parse the plain-text diagram format.

    Grammar (one statement per line, ``#`` starts a comment)::

        treatment=NAME
        outcome=NAME
        NAME KIND                        # KIND: observed | latent | selection
        PARENT -> CHILD [domains=TAG]    # TAG: source | target | both
    """
    nodes: list[tuple[str, str]] = []
    edges: list[tuple[str, str, str]] = []
    treatment = outcome = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("treatment="):
            treatment = line.split("=", 1)[1].strip()
        elif line.startswith("outcome="):
            outcome = line.split("=", 1)[1].strip()
        elif "->" in line:
            lhs, rhs = line.split("->", 1)
            parts = rhs.split()
            domains = BOTH
            if len(parts) == 2 and parts[1].startswith("domains="):
                domains = parts[1].split("=", 1)[1]
            elif len(parts) != 1:
                raise DiagramError(f"line {lineno}: cannot parse edge {raw!r}")
            edges.append((lhs.strip(), parts[0], domains))
        else:
            parts = line.split()
            if len(parts) != 2:
                raise DiagramError(f"line {lineno}: cannot parse {raw!r}")
            nodes.append((parts[0], parts[1]))
    if treatment is None or outcome is None:
        raise DiagramError("diagram text must set treatment= and outcome=")
    return SelectionDiagram(nodes, edges, treatment, outcome)


def format_diagram(d: SelectionDiagram) -> str:
    """Serialize to the text format; ``parse_diagram`` round-trips it."""
    lines = [f"treatment={d.treatment}", f"outcome={d.outcome}"]
    lines += [f"{n} {d.kind(n)}" for n in d.node_names]
    for e in d.edges:
        suffix = "" if e.domains == BOTH else f" domains={e.domains}"
        lines.append(f"{e.parent} -> {e.child}{suffix}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Benchmark diagrams
# ---------------------------------------------------------------------------

def structural_shift_diagram() -> SelectionDiagram:
    """Two shifted observed confounders; one confounding edge exists only in
    the source domain. {Z, W} is the unique sABS among subsets of {Z, W}."""
    return SelectionDiagram(
        nodes=[
            ("X", OBSERVED), ("Y", OBSERVED), ("Z", OBSERVED), ("W", OBSERVED),
            ("S_Z", SELECTION), ("S_W", SELECTION), ("S_X", SELECTION),
        ],
        edges=[
            ("Z", "X"), ("Z", "Y"), ("W", "Y"), ("X", "Y"),
            ("W", "X", SOURCE),
            ("S_Z", "Z"), ("S_W", "W"), ("S_X", "X"),
        ],
        treatment="X",
        outcome="Y",
    )


def shifted_confounders_diagram() -> SelectionDiagram:
    """Two shifted observed confounders of X and Y; {Z, W} is an sABS."""
    return SelectionDiagram(
        nodes=[
            ("X", OBSERVED), ("Y", OBSERVED), ("Z", OBSERVED), ("W", OBSERVED),
            ("S_Z", SELECTION), ("S_W", SELECTION),
        ],
        edges=[
            ("Z", "X"), ("Z", "Y"), ("W", "X"), ("W", "Y"), ("X", "Y"),
            ("S_Z", "Z"), ("S_W", "W"),
        ],
        treatment="X",
        outcome="Y",
    )


def latent_confounder_diagram() -> SelectionDiagram:
    """A latent confounder of X and Y that no observed set can block:
    {Z, W} is s-admissible but nothing is a backdoor set, so no sABS exists."""
    return SelectionDiagram(
        nodes=[
            ("X", OBSERVED), ("Y", OBSERVED), ("Z", OBSERVED), ("W", OBSERVED),
            ("H", LATENT), ("S_Z", SELECTION), ("S_W", SELECTION),
        ],
        edges=[
            ("Z", "X"), ("Z", "Y"), ("W", "Y"), ("X", "Y"),
            ("H", "X"), ("H", "Y"),
            ("S_Z", "Z"), ("S_W", "W"),
        ],
        treatment="X",
        outcome="Y",
    )


def shifted_proxy_diagram() -> SelectionDiagram:
    """W is a shifted proxy of a latent cause of Y: conditioning on W opens a
    selection path, so {Z, W} is a backdoor set but not s-admissible, while
    {Z} alone is an sABS."""
    return SelectionDiagram(
        nodes=[
            ("X", OBSERVED), ("Y", OBSERVED), ("Z", OBSERVED), ("W", OBSERVED),
            ("H", LATENT), ("S_W", SELECTION),
        ],
        edges=[
            ("Z", "X"), ("Z", "Y"), ("X", "Y"),
            ("H", "W"), ("H", "Y"),
            ("S_W", "W"),
        ],
        treatment="X",
        outcome="Y",
    )


def latent_collider_diagram() -> SelectionDiagram:
    """Z is a shifted collider of two latents that separately drive X and Y:
    conditioning on Z breaks both criteria, so {W} and the empty set are the
    only sABS among subsets of {Z, W}."""
    return SelectionDiagram(
        nodes=[
            ("X", OBSERVED), ("Y", OBSERVED), ("Z", OBSERVED), ("W", OBSERVED),
            ("H1", LATENT), ("H2", LATENT), ("S_Z", SELECTION),
        ],
        edges=[
            ("H1", "Y"), ("H1", "Z"), ("H2", "X"), ("H2", "Z"),
            ("W", "Y"), ("X", "Y"),
            ("S_Z", "Z"),
        ],
        treatment="X",
        outcome="Y",
    )


EXAMPLE_DIAGRAMS = {
    "structural-shift": structural_shift_diagram,
    "shifted-confounders": shifted_confounders_diagram,
    "latent-confounder": latent_confounder_diagram,
    "shifted-proxy": shifted_proxy_diagram,
    "latent-collider": latent_collider_diagram,
}
