"""Undirected weighted graphs: edge-list ingestion, validation and degree queries.

Edge-list format (SNAP style)::

    # comment line
    u v          # unit weight
    u v w        # explicit positive weight

Node ids may be arbitrary tokens. They are remapped to ``0..N-1`` by sorting
(numerically when every id is an integer, lexicographically otherwise) so that
``load_edge_list(emit_edge_list(g)) == g`` holds exactly.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, TextIO

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import Disconnected, DuplicateEdge, NegativeWeight, ParseError, SelfLoop

Edge = tuple[int, int]


@dataclass(frozen=True, eq=False)
class Graph:
    """Symmetric nonnegative weighted graph on ``n`` nodes.

    ``edges`` maps each unordered pair ``(i, j)`` with ``i < j`` to its positive
    weight. Instances are validated on construction (no self loops, positive
    weights, connected) and are immutable.
    """

    n: int
    edges: Mapping[Edge, float]
    node_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        clean = {}
        for (i, j), w in self.edges.items():
            i, j = int(i), int(j)
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) outside 0..{self.n - 1}")
            if i == j:
                raise SelfLoop(f"self loop at node {i}")
            w = float(w)
            if not np.isfinite(w) or w < 0:
                raise NegativeWeight(f"edge ({i}, {j}) has weight {w}")
            if w == 0:
                continue
            key = (min(i, j), max(i, j))
            if key in clean:
                raise DuplicateEdge(f"edge {key} given twice")
            clean[key] = w
        if not clean:
            raise Disconnected("graph has no positive-weight edge")
        object.__setattr__(self, "edges", MappingProxyType(dict(sorted(clean.items()))))
        if self.node_labels is not None:
            labels = tuple(str(s) for s in self.node_labels)
            if len(labels) != self.n:
                raise ValueError("node_labels length must equal n")
            object.__setattr__(self, "node_labels", labels)
        ncomp, _ = connected_components(self._sparse(), directed=False)
        if ncomp != 1:
            raise Disconnected(f"graph has {ncomp} connected components")

    def _sparse(self) -> csr_matrix:
        if self.edges:
            ij = np.array(list(self.edges.keys()), dtype=int)
            w = np.array(list(self.edges.values()), dtype=float)
        else:
            ij = np.zeros((0, 2), dtype=int)
            w = np.zeros(0)
        rows = np.concatenate([ij[:, 0], ij[:, 1]])
        cols = np.concatenate([ij[:, 1], ij[:, 0]])
        return csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Dense read-only adjacency matrix."""
        a = self._sparse().toarray()
        a.setflags(write=False)
        return a

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def is_regular(self) -> bool:
        d = self.degrees
        return bool(np.all(d == d[0]))

    def weight(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return self.edges.get((min(i, j), max(i, j)), 0.0)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and dict(self.edges) == dict(other.edges)
            and self.node_labels == other.node_labels
        )

    def __hash__(self):
        return hash((self.n, tuple(self.edges.items()), self.node_labels))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.edge_count})"

    @classmethod
    def from_adjacency(cls, a, node_labels=None) -> "Graph":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise SelfLoop("adjacency has a nonzero diagonal")
        iu, ju = np.nonzero(np.triu(a, 1))
        edges = {(int(i), int(j)): float(a[i, j]) for i, j in zip(iu, ju)}
        if np.any(a < 0):
            raise NegativeWeight("adjacency has negative entries")
        return cls(a.shape[0], edges, node_labels)


@dataclass(frozen=True)
class DegreeStats:
    d_min: float
    d_max: float


def _label_key(labels: Iterable[str]):
    labels = list(labels)
    try:
        ints = [int(s) for s in labels]
    except ValueError:
        return sorted(labels)
    order = sorted(range(len(labels)), key=lambda k: ints[k])
    return [labels[k] for k in order]


def load_edge_list(text: str | TextIO) -> Graph:
    """Parse a whitespace-separated edge list into a validated :class:`Graph`.

    A pair listed in both directions must carry the same weight; listing the
    same ordered pair twice is a :class:`DuplicateEdge`.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    directed: dict[tuple[str, str], float] = {}
    seen: dict[str, None] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"line {lineno}: expected 'u v' or 'u v w', got {line!r}")
        u, v = parts[0], parts[1]
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise ParseError(f"line {lineno}: bad weight {parts[2]!r}") from None
            if not np.isfinite(w):
                raise ParseError(f"line {lineno}: non-finite weight")
            if w < 0:
                raise NegativeWeight(f"line {lineno}: negative weight {w}")
            if w == 0:
                raise ParseError(f"line {lineno}: zero weight")
        else:
            w = 1.0
        if u == v:
            raise SelfLoop(f"line {lineno}: self loop at {u}")
        if (u, v) in directed:
            raise DuplicateEdge(f"line {lineno}: edge {u} {v} listed twice")
        if (v, u) in directed and directed[(v, u)] != w:
            raise DuplicateEdge(
                f"line {lineno}: {u} {v} has weight {w} but {v} {u} has {directed[(v, u)]}"
            )
        directed[(u, v)] = w
        seen.setdefault(u)
        seen.setdefault(v)
    if not directed:
        raise ParseError("edge list contains no edges")
    labels = _label_key(seen)
    index = {lab: k for k, lab in enumerate(labels)}
    edges: dict[Edge, float] = {}
    for (u, v), w in directed.items():
        i, j = index[u], index[v]
        edges[(min(i, j), max(i, j))] = w
    return Graph(len(labels), edges, tuple(labels))


def load_edge_list_file(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh)


def emit_edge_list(g: Graph) -> str:
    """Serialize ``g`` in the format read by :func:`load_edge_list`."""
    labels = g.node_labels or tuple(str(k) for k in range(g.n))
    unit = all(w == 1.0 for w in g.edges.values())
    lines = [f"# nodes: {g.n} edges: {g.edge_count}"]
    for (i, j), w in g.edges.items():
        if unit:
            lines.append(f"{labels[i]} {labels[j]}")
        else:
            lines.append(f"{labels[i]} {labels[j]} {w!r}")
    return "\n".join(lines) + "\n"


def degree_stats(g: Graph) -> DegreeStats:
    d = g.degrees
    return DegreeStats(float(d.min()), float(d.max()))


class Sufficiency(enum.Enum):
    VIRUS2_DIES = "Virus2Dies"
    VIRUS1_DIES = "Virus1Dies"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SufficiencyVerdict:
    """Degree-based die-out test from the earlier literature.

    ``t1_dmin_a``/``t2_dmax_b`` decide whether Virus 2 surely dies and
    ``t1_dmax_a``/``t2_dmin_b`` whether Virus 1 surely dies.
    """

    verdict: Sufficiency
    t1_dmin_a: float
    t2_dmax_b: float
    t1_dmax_a: float
    t2_dmin_b: float


def santos_bounds(p1, p2, a: Graph, b: Graph) -> SufficiencyVerdict:
    da, db = degree_stats(a), degree_stats(b)
    t1_dmin_a, t1_dmax_a = p1.tau * da.d_min, p1.tau * da.d_max
    t2_dmin_b, t2_dmax_b = p2.tau * db.d_min, p2.tau * db.d_max
    if t1_dmin_a > t2_dmax_b:
        verdict = Sufficiency.VIRUS2_DIES
    elif t1_dmax_a < t2_dmin_b:
        verdict = Sufficiency.VIRUS1_DIES
    else:
        verdict = Sufficiency.INCONCLUSIVE
    return SufficiencyVerdict(verdict, t1_dmin_a, t2_dmax_b, t1_dmax_a, t2_dmin_b)


# Tiny built-in families used by tests and examples.

def complete_graph(n: int) -> Graph:
    return Graph(n, {(i, j): 1.0 for i in range(n) for j in range(i + 1, n)})


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return Graph(n, {(min(i, (i + 1) % n), max(i, (i + 1) % n)): 1.0 for i in range(n)})


def star_graph(n: int) -> Graph:
    """Star on ``n`` nodes: center 0 joined to leaves ``1..n-1``."""
    if n < 2:
        raise ValueError("star needs n >= 2")
    return Graph(n, {(0, j): 1.0 for j in range(1, n)})


def path_graph(n: int) -> Graph:
    if n < 2:
        raise ValueError("path needs n >= 2")
    return Graph(n, {(i, i + 1): 1.0 for i in range(n - 1)})
