"""Projection of signals between simplex dimensions and the interaction layer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complex import SimplicialComplex
from .sparse import SparseMatrix, abs_entries, spgemm, spmm, transpose


@dataclass(frozen=True)
class ProjectionOperator:
    """Maps ``from_dim`` signals to ``to_dim`` signals (``n_to x n_from``)."""

    from_dim: int
    to_dim: int
    matrix: SparseMatrix

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.matrix.shape[1] == 0:
            return np.zeros((self.matrix.shape[0],) + x.shape[1:])
        return spmm(self.matrix, x)

    @property
    def T(self) -> "ProjectionOperator":
        return ProjectionOperator(self.to_dim, self.from_dim, transpose(self.matrix))


@dataclass(frozen=True)
class MSIWeights:
    """Interaction weights keyed by dimension.

    ``hidden[k]`` is ``2d x d`` and acts on ``(own || projected)``; ``out[k]``
    is ``d x d``.
    """

    hidden: dict[int, np.ndarray]
    out: dict[int, np.ndarray]

    @classmethod
    def passthrough(cls, d: int, dims=(0, 1)) -> "MSIWeights":
        """Weights that mask the projected half and reduce the layer to ReLU."""
        mask = np.vstack([np.eye(d), np.zeros((d, d))])
        return cls({k: mask.copy() for k in dims}, {k: np.eye(d) for k in dims})


def _check_range(c: SimplicialComplex, *dims: int) -> None:
    for k in dims:
        if not 0 <= k <= c.max_dim:
            raise ValueError(f"dimension {k} outside 0..{c.max_dim}")


def project_down(c: SimplicialComplex, k: int) -> ProjectionOperator:
    """``|B_k|``: ``k``-simplex signals onto their faces."""
    if not 1 <= k <= c.max_dim:
        raise ValueError(f"projection dimension {k} outside 1..{c.max_dim}")
    return ProjectionOperator(k, k - 1, abs_entries(c.boundary[k]))


def project_up(c: SimplicialComplex, k: int) -> ProjectionOperator:
    """``|B_k|^T``: ``(k-1)``-simplex signals onto their cofaces."""
    return project_down(c, k).T


def project_chain(c: SimplicialComplex, from_dim: int, to_dim: int) -> ProjectionOperator:
    """Product of single-step projections from ``from_dim`` to ``to_dim``.

    Entries count incidence paths and are not renormalized.
    """
    _check_range(c, from_dim, to_dim)
    if from_dim == to_dim:
        raise ValueError("from_dim and to_dim must differ")
    if from_dim > to_dim:
        mat = abs_entries(c.boundary[from_dim])
        for k in range(from_dim - 1, to_dim, -1):
            mat = spgemm(abs_entries(c.boundary[k]), mat)
        return ProjectionOperator(from_dim, to_dim, mat)
    mat = transpose(abs_entries(c.boundary[from_dim + 1]))
    for k in range(from_dim + 2, to_dim + 1):
        mat = spgemm(transpose(abs_entries(c.boundary[k])), mat)
    return ProjectionOperator(from_dim, to_dim, mat)


def relu(x):
    return np.maximum(x, 0.0)


def msi_forward(x_low, x_high, ops, w: MSIWeights, dims=(0, 1)):
    """Fuse signals on two dimensions ``k1 < k2``.

    Parameters
    ----------
    x_low, x_high : ndarray
        ``n_{k1} x d`` and ``n_{k2} x d`` signals.
    ops : tuple of ProjectionOperator
        ``(down, up)`` with ``down`` mapping ``k2 -> k1`` and ``up`` mapping
        ``k1 -> k2``.
    w : MSIWeights
    dims : tuple of int
        ``(k1, k2)`` used to look up the weights.

    Returns
    -------
    tuple of ndarray
        ``ReLU((x || T x_other) W'_k) W_k`` for each dimension.
    """
    k1, k2 = dims
    if k1 >= k2:
        raise ValueError("expected k1 < k2")
    down, up = ops
    x_low = np.asarray(x_low, dtype=np.float64)
    x_high = np.asarray(x_high, dtype=np.float64)
    d = x_low.shape[1]
    if x_high.shape[1] != d:
        raise ValueError(f"feature widths differ: {d} vs {x_high.shape[1]}")
    if (down.from_dim, down.to_dim) != (k2, k1) or (up.from_dim, up.to_dim) != (k1, k2):
        raise ValueError("projection operators do not match the requested dimensions")
    for k in dims:
        if w.hidden[k].shape != (2 * d, d) or w.out[k].shape != (d, d):
            raise ValueError(
                f"MSI weights for dimension {k} have shapes {w.hidden[k].shape}, "
                f"{w.out[k].shape}; expected {(2 * d, d)}, {(d, d)}"
            )
    low = relu(np.hstack([x_low, down(x_high)]) @ w.hidden[k1]) @ w.out[k1]
    high = relu(np.hstack([x_high, up(x_low)]) @ w.hidden[k2]) @ w.out[k2]
    return low, high
