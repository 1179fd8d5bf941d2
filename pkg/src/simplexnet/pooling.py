"""Simplicial attention pooling: attention weights, node clustering and
simplex downsampling with assignment matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .complex import SimplicialComplex
from .projection import ProjectionOperator
from .sparse import SparseMatrix, abs_entries, spgemm, transpose


@dataclass(frozen=True)
class AttentionParams:
    """Query/key weights (``d x d_k``) and self/cross mixing ``alpha`` per dimension."""

    query: dict[int, np.ndarray]
    key: dict[int, np.ndarray]
    alpha: dict[int, float]

    def __post_init__(self):
        for k, a in self.alpha.items():
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"alpha[{k}] = {a} outside [0, 1]")
        widths = {w.shape[1] for w in list(self.query.values()) + list(self.key.values())}
        if len(widths) > 1:
            raise ValueError(f"query/key widths disagree: {sorted(widths)}")
        if widths and widths.pop() < 1:
            raise ValueError("query/key width must be at least 1")

    @property
    def d_k(self) -> int:
        return next(iter(self.query.values())).shape[1]


@dataclass(frozen=True)
class NodeClustering:
    cluster_of: np.ndarray
    num_clusters: int

    def members(self) -> list[list[int]]:
        groups = [[] for _ in range(self.num_clusters)]
        for v, cl in enumerate(self.cluster_of):
            groups[int(cl)].append(v)
        return groups

    @classmethod
    def identity(cls, n: int) -> "NodeClustering":
        return cls(np.arange(n), n)


@dataclass(frozen=True)
class CoarseningResult:
    """Outcome of one downsampling step.

    ``assignment[k]`` is the binary ``n'_k x n_k`` matrix sending original
    ``k``-simplices to coarse ones. ``pooled_signals`` is filled by
    :func:`pool_signals` when signals are pooled alongside.
    """

    assignment: tuple[SparseMatrix, ...]
    coarse_complex: SimplicialComplex
    clustering: NodeClustering
    pooled_signals: tuple[np.ndarray, ...] = ()


def _check_signal(x, p: AttentionParams, k: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    for name, table in (("query", p.query), ("key", p.key)):
        if k not in table:
            raise ValueError(f"no {name} weights for dimension {k}")
        if table[k].shape[0] != x.shape[1]:
            raise ValueError(
                f"{name} weights for dimension {k} expect width {table[k].shape[0]}, "
                f"signal has {x.shape[1]}"
            )
    return x


def attention_logits(x_low, x_high, ops, p: AttentionParams, dims=(0, 1)):
    """Pre-softmax self/cross attention matrices for ``k1 < k2``.

    Returns ``n_{k1} x n_{k1}`` and ``n_{k2} x n_{k2}`` arrays.
    """
    k1, k2 = dims
    if k1 >= k2:
        raise ValueError("expected k1 < k2")
    down, up = ops
    x_low = _check_signal(x_low, p, k1)
    x_high = _check_signal(x_high, p, k2)
    scale = np.sqrt(p.d_k)
    q1, kk1 = x_low @ p.query[k1], x_low @ p.key[k1]
    q2, kk2 = x_high @ p.query[k2], x_high @ p.key[k2]
    a1, a2 = p.alpha[k1], p.alpha[k2]
    z1 = a1 * (q1 @ kk1.T) / scale + (1.0 - a1) * (down(q2) @ kk1.T) / scale
    z2 = a2 * (q2 @ kk2.T) / scale + (1.0 - a2) * (up(q1) @ kk2.T) / scale
    return z1, z2


def softmax_diagonal(z: np.ndarray) -> np.ndarray:
    """Diagonal of the row-wise softmax of a square matrix."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[0] == 0:
        return np.zeros(0)
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return np.diag(e) / e.sum(axis=1)


def attention_weights(x_low, x_high, ops, p: AttentionParams, dims=(0, 1)):
    """Per-simplex pooling weights on two dimensions, each entry in (0, 1]."""
    z1, z2 = attention_logits(x_low, x_high, ops, p, dims)
    return softmax_diagonal(z1), softmax_diagonal(z2)


def cluster_nodes(c: SimplicialComplex, levels: int = 1) -> NodeClustering:
    """Greedy normalized-cut matching of nodes (one Graclus level per pass).

    Nodes are visited in index order; an unmatched node is paired with the
    unmatched neighbor maximizing ``w_uv (1/d_u + 1/d_v)``, lowest index on
    ties. Nodes without an unmatched neighbor stay singletons. Further levels
    repeat the matching on the contracted, edge-weighted graph.
    """
    n = c.num(0)
    weights: dict[tuple[int, int], float] = {}
    for u, v in (c.simplices[1] if c.max_dim >= 1 else ()):
        weights[(u, v)] = 1.0
    cluster_of = np.arange(n)
    num = n
    for _ in range(levels):
        match, num_new = _match(num, weights)
        cluster_of = match[cluster_of]
        coarse: dict[tuple[int, int], float] = {}
        for (u, v), w in weights.items():
            a, b = match[u], match[v]
            if a != b:
                key = (min(a, b), max(a, b))
                coarse[key] = coarse.get(key, 0.0) + w
        weights, num = coarse, num_new
    return NodeClustering(cluster_of.astype(np.int64), int(num))


def _match(n: int, weights: dict[tuple[int, int], float]) -> tuple[np.ndarray, int]:
    adj: list[dict[int, float]] = [{} for _ in range(n)]
    for (u, v), w in weights.items():
        adj[u][v] = w
        adj[v][u] = w
    degree = [sum(nb.values()) for nb in adj]
    match = np.full(n, -1, dtype=np.int64)
    nxt = 0
    for u in range(n):
        if match[u] >= 0:
            continue
        best, best_score = -1, -np.inf
        for v in sorted(adj[u]):
            if match[v] >= 0:
                continue
            score = adj[u][v] * (1.0 / degree[u] + 1.0 / degree[v])
            if score > best_score:
                best, best_score = v, score
        match[u] = nxt
        if best >= 0:
            match[best] = nxt
        nxt += 1
    return match, nxt


def _node_assignment(nc: NodeClustering) -> SparseMatrix:
    n = len(nc.cluster_of)
    return SparseMatrix(nc.cluster_of, np.arange(n), np.ones(n), (nc.num_clusters, n))


def downsample(c: SimplicialComplex, nc: NodeClustering) -> CoarseningResult:
    """Coarsen ``c`` by the node clustering ``nc``.

    For each ``k >= 1`` the image ``S_{k-1} B_k`` is formed; columns that are
    not a clean set of ``k+1`` unit entries belong to simplices that collapsed
    and are deleted, and columns with identical support are merged onto the
    first original simplex. ``S_k[i, j] = 1`` exactly when coarse column ``i``
    and image column ``j`` share ``k+1`` faces. Coarse simplices are labelled
    by their coarse node tuples, sorted, and re-oriented ascending so that the
    coarse boundary operators form a chain complex.
    """
    n0 = c.num(0)
    if len(nc.cluster_of) != n0:
        raise ValueError(f"clustering covers {len(nc.cluster_of)} nodes, complex has {n0}")
    s_prev = _node_assignment(nc)
    coarse_levels: list[list[tuple[int, ...]]] = [[(i,) for i in range(nc.num_clusters)]]
    assignment = [s_prev]
    for k in range(1, c.max_dim + 1):
        image = spgemm(s_prev, c.boundary[k])
        supports = image.column_supports()
        dense_cols = _column_values(image)
        groups: dict[tuple[int, ...], int] = {}
        for j, support in enumerate(supports):
            if len(support) != k + 1 or np.any(np.abs(dense_cols[j]) != 1.0):
                continue
            groups.setdefault(support, j)
        prev_level = coarse_levels[k - 1]
        labelled = []
        for support, rep in groups.items():
            verts = tuple(sorted(set().union(*(prev_level[q] for q in support))))
            labelled.append((verts, rep))
        labelled.sort()
        coarse_levels.append([verts for verts, _ in labelled])
        kept = image.select_columns([rep for _, rep in labelled])
        # S_k = [ |B'_k|^T |S_{k-1} B_k| == k+1 ]
        overlap = spgemm(transpose(abs_entries(kept)), abs_entries(image))
        r, col, v = overlap.coo()
        hit = v == k + 1
        s_prev = SparseMatrix(r[hit], col[hit], np.ones(int(hit.sum())), overlap.shape)
        assignment.append(s_prev)
    coarse = SimplicialComplex.from_simplices(coarse_levels)
    return CoarseningResult(tuple(assignment), coarse, nc)


def _column_values(m: SparseMatrix) -> list[np.ndarray]:
    csc = m.csr.tocsc()
    csc.sort_indices()
    return [csc.data[csc.indptr[j]:csc.indptr[j + 1]] for j in range(m.shape[1])]


def pool_signals(xs: Sequence, weights: Sequence, assignment: Sequence[SparseMatrix]) -> list[np.ndarray]:
    """Attention-weighted mean of each coarse simplex's preimage.

    ``xs[k]`` is ``n_k x d``, ``weights[k]`` has length ``n_k`` and
    ``assignment[k]`` is ``n'_k x n_k``. Simplices with no coarse image are
    dropped.
    """
    out = []
    for k, (x, a, s) in enumerate(zip(xs, weights, assignment)):
        x = np.asarray(x, dtype=np.float64)
        a = np.asarray(a, dtype=np.float64)
        if x.shape[0] != s.shape[1] or a.shape[0] != s.shape[1]:
            raise ValueError(
                f"dimension {k}: signal rows {x.shape[0]}, weights {a.shape[0]}, "
                f"assignment columns {s.shape[1]}"
            )
        if s.shape[0] == 0:
            out.append(np.zeros((0,) + x.shape[1:]))
            continue
        num = s.csr @ (a[:, None] * x)
        den = s.csr @ a
        if np.any(den <= 0):
            raise ValueError(f"dimension {k}: coarse simplex with empty preimage or non-positive weight")
        out.append(num / den[:, None])
    return out


def coarsen(c: SimplicialComplex, xs, ops: tuple[ProjectionOperator, ProjectionOperator],
            p: AttentionParams, dims=(0, 1), nc: NodeClustering | None = None) -> CoarseningResult:
    """Attention weights, clustering, downsampling and pooling in one step."""
    a_low, a_high = attention_weights(xs[0], xs[1], ops, p, dims)
    if nc is None:
        nc = cluster_nodes(c)
    res = downsample(c, nc)
    pooled = pool_signals(xs, (a_low, a_high), [res.assignment[k] for k in dims])
    return CoarseningResult(res.assignment, res.coarse_complex, nc, tuple(pooled))
