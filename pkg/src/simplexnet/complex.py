"""Clique complexes of undirected graphs and their oriented boundary operators."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .sparse import SparseMatrix

Simplex = tuple[int, ...]


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph.

    Edges are normalized to ``(u, v)`` with ``u < v`` and deduplicated on
    construction. Self-loops are rejected.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.num_nodes < 0:
            raise ValueError("num_nodes must be non-negative")
        seen = set()
        for e in self.edges:
            u, v = (int(x) for x in e)
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise ValueError(f"edge ({u}, {v}) out of range for {self.num_nodes} nodes")
            seen.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    def neighbors(self) -> list[set[int]]:
        adj = [set() for _ in range(self.num_nodes)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_nodes, self.num_nodes))
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1.0
        return a


@dataclass(frozen=True)
class SimplicialComplex:
    """Simplices of dimension ``0..max_dim`` with boundary operators.

    ``simplices[k]`` holds ascending ``k+1``-tuples in lexicographic order and
    ``boundary[k]`` (``k >= 1``) is the ``n_{k-1} x n_k`` signed incidence
    matrix. ``boundary[0]`` is an empty ``0 x n_0`` placeholder.
    """

    max_dim: int
    simplices: tuple[tuple[Simplex, ...], ...]
    boundary: tuple[SparseMatrix, ...]
    _index: tuple[dict, ...] = field(repr=False, compare=False, default=())

    @classmethod
    def from_simplices(cls, simplices: Sequence[Sequence[Simplex]]) -> "SimplicialComplex":
        """Build from per-dimension simplex lists; every face must be present."""
        levels = tuple(tuple(sorted(tuple(sorted(s)) for s in level)) for level in simplices)
        if not levels:
            levels = ((),)
        index = tuple({s: i for i, s in enumerate(level)} for level in levels)
        for k, level in enumerate(levels):
            if len(index[k]) != len(level):
                raise ValueError(f"duplicate {k}-simplices")
            for s in level:
                if len(s) != k + 1 or len(set(s)) != k + 1:
                    raise ValueError(f"{s} is not a {k}-simplex")
        bounds = [SparseMatrix.zeros((0, len(levels[0])))]
        for k in range(1, len(levels)):
            bounds.append(_boundary(levels[k - 1], levels[k], index[k - 1]))
        return cls(len(levels) - 1, levels, tuple(bounds), index)

    def num(self, k: int) -> int:
        """Number of ``k``-simplices; zero outside ``0..max_dim``."""
        if 0 <= k <= self.max_dim:
            return len(self.simplices[k])
        return 0

    @property
    def counts(self) -> list[int]:
        return [len(level) for level in self.simplices]

    def index_of(self, simplex: Simplex) -> int:
        s = tuple(sorted(simplex))
        return self._index[len(s) - 1][s]

    def graph(self) -> Graph:
        edges = self.simplices[1] if self.max_dim >= 1 else ()
        return Graph(self.num(0), tuple(edges))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return (
            self.max_dim == other.max_dim
            and self.simplices == other.simplices
            and all(a == b for a, b in zip(self.boundary, other.boundary))
        )

    __hash__ = None


def _boundary(faces, simplices, face_index) -> SparseMatrix:
    rows, cols, vals = [], [], []
    for j, s in enumerate(simplices):
        for m in range(len(s)):
            face = s[:m] + s[m + 1:]
            try:
                rows.append(face_index[face])
            except KeyError:
                raise ValueError(f"face {face} of {s} is missing") from None
            cols.append(j)
            vals.append(-1.0 if m % 2 else 1.0)
    return SparseMatrix(rows, cols, vals, (len(faces), len(simplices)))


def _cliques(g: Graph, K: int) -> list[list[Simplex]]:
    adj = g.neighbors()
    levels = [[(v,) for v in range(g.num_nodes)]]
    for _ in range(K):
        nxt = []
        for s in levels[-1]:
            common = set.intersection(*(adj[v] for v in s))
            nxt.extend(s + (w,) for w in sorted(common) if w > s[-1])
        levels.append(nxt)
    return levels


def build_complex(g: Graph, K: int) -> SimplicialComplex:
    """Clique complex of ``g`` truncated at dimension ``K``.

    A ``k``-simplex exists iff its ``k+1`` nodes are pairwise adjacent. When
    ``K`` exceeds ``num_nodes - 1`` it is clamped to the highest dimension that
    holds at least one simplex.
    """
    if K < 0:
        raise ValueError("K must be non-negative")
    if K > max(g.num_nodes - 1, 0):
        levels = _cliques(g, max(g.num_nodes - 1, 0))
        while len(levels) > 1 and not levels[-1]:
            levels.pop()
    else:
        levels = _cliques(g, K)
    return SimplicialComplex.from_simplices(levels)


def boundary_operator(c: SimplicialComplex, k: int) -> SparseMatrix:
    """Signed incidence between ``(k-1)``- and ``k``-simplices.

    Entry ``(i, j)`` is ``(-1)**m`` when face ``i`` is simplex ``j`` with its
    ``m``-th vertex removed.
    """
    if not 1 <= k <= c.max_dim:
        raise ValueError(f"boundary dimension {k} outside 1..{c.max_dim}")
    return c.boundary[k]


def hop_neighborhood(c: SimplicialComplex, k: int, seed: int, radius: int) -> set[int]:
    """``k``-simplices within ``radius`` steps of ``seed``.

    Adjacency is the off-diagonal nonzero pattern of the ``k``-th Hodge
    Laplacian, so pairs whose up and down contributions cancel are not
    neighbors.
    """
    from .spectral import hodge_laplacian

    if not 0 <= seed < c.num(k):
        raise ValueError(f"seed {seed} out of range for {c.num(k)} {k}-simplices")
    lap = hodge_laplacian(c, k).matrix
    seen = {seed}
    frontier = deque([(seed, 0)])
    while frontier:
        i, d = frontier.popleft()
        if d == radius:
            continue
        cols, _ = lap.row(i)
        for j in cols:
            j = int(j)
            if j not in seen:
                seen.add(j)
                frontier.append((j, d + 1))
    return seen


def load_graph(path) -> tuple[Graph, dict[str, np.ndarray]]:
    """Read the graph JSON format.

    Returns the graph and any signal blocks present (``node_signals``,
    ``edge_signals``) as 2-d float arrays.
    """
    with open(path) as fh:
        doc = json.load(fh)
    return graph_from_dict(doc)


def graph_from_dict(doc) -> tuple[Graph, dict[str, np.ndarray]]:
    if not isinstance(doc, dict) or "num_nodes" not in doc:
        raise ValueError("graph document needs a 'num_nodes' field")
    g = Graph(int(doc["num_nodes"]), tuple(tuple(e) for e in doc.get("edges", [])))
    signals = {}
    for key, rows in (("node_signals", g.num_nodes), ("edge_signals", len(g.edges))):
        if key in doc and doc[key] is not None:
            arr = np.asarray(doc[key], dtype=np.float64)
            if arr.ndim == 1:
                arr = arr[:, None]
            if arr.shape[0] != rows:
                raise ValueError(f"{key} has {arr.shape[0]} rows, expected {rows}")
            signals[key] = arr
    return g, signals
