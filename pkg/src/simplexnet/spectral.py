"""Hodge Laplacians, their eigensystems and Laguerre-polynomial filters."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .complex import SimplicialComplex
from .sparse import SparseMatrix, spgemm, spmm, transpose

#: Largest operator size accepted by :func:`eigensystem`.
DENSE_EIG_CAP = 2000


@dataclass(frozen=True)
class HLOperator:
    """The ``k``-th Hodge Laplacian, an ``n_k x n_k`` symmetric matrix."""

    k: int
    matrix: SparseMatrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class EigenSystem:
    """Ascending eigenvalues and orthonormal eigenvector columns.

    ``n`` is the size of the operator, so ``len(eigenvalues) < n`` marks a
    partial system.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n: int

    @property
    def complete(self) -> bool:
        return len(self.eigenvalues) == self.n


@dataclass(frozen=True)
class FilterBank:
    """Laguerre expansion coefficients indexed ``theta[p, in, out]``."""

    k: int
    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 3 or theta.shape[0] < 1:
            raise ValueError(f"theta must have shape (P, d_in, d_out) with P >= 1, got {theta.shape}")
        object.__setattr__(self, "theta", theta)

    @property
    def P(self) -> int:
        return self.theta.shape[0]

    @property
    def d_in(self) -> int:
        return self.theta.shape[1]

    @property
    def d_out(self) -> int:
        return self.theta.shape[2]

    @classmethod
    def scalar(cls, k: int, coeffs, channels: int = 1) -> "FilterBank":
        """Same polynomial on every channel, no channel mixing."""
        coeffs = np.asarray(coeffs, dtype=np.float64)
        theta = coeffs[:, None, None] * np.eye(channels)[None]
        return cls(k, theta)

    def to_dict(self) -> dict:
        return {"k": self.k, "P": self.P, "theta": self.theta.tolist()}

    @classmethod
    def from_dict(cls, doc) -> "FilterBank":
        for key in ("k", "P", "theta"):
            if key not in doc:
                raise ValueError(f"filter bank is missing field '{key}'")
        fb = cls(int(doc["k"]), np.asarray(doc["theta"], dtype=np.float64))
        if fb.P != int(doc["P"]):
            raise ValueError(f"filter bank declares P={doc['P']} but theta has {fb.P} terms")
        return fb


def load_filterbank(path) -> FilterBank:
    with open(path) as fh:
        return FilterBank.from_dict(json.load(fh))


def hodge_laplacian(c: SimplicialComplex, k: int, normalize: bool = False) -> HLOperator:
    """Up plus down Laplacian ``B_{k+1} B_{k+1}^T + B_k^T B_k``.

    Terms whose boundary operator does not exist are omitted. With
    ``normalize=True`` the result is divided by its largest absolute row sum,
    which bounds the spectrum by 1; symmetry is kept.
    """
    if not 0 <= k <= c.max_dim:
        raise ValueError(f"Laplacian dimension {k} outside 0..{c.max_dim}")
    n = c.num(k)
    lap = SparseMatrix.zeros((n, n))
    if k + 1 <= c.max_dim:
        b_up = c.boundary[k + 1]
        lap = lap + spgemm(b_up, transpose(b_up))
    if k >= 1:
        b_down = c.boundary[k]
        lap = lap + spgemm(transpose(b_down), b_down)
    if normalize and lap.nnz:
        bound = np.abs(lap.to_dense()).sum(axis=1).max()
        lap = lap.scale(1.0 / bound)
    return HLOperator(k, lap)


def eigensystem(l: HLOperator, count: int | None = None, cap: int = DENSE_EIG_CAP) -> EigenSystem:
    """Lowest ``count`` eigenpairs (all when ``None``), ascending.

    Each eigenvector's first entry with magnitude above 1e-10 is made
    positive.
    """
    n = l.n
    if n > cap:
        raise ValueError(f"operator of size {n} exceeds the dense eigensolver cap {cap}")
    if count is None:
        count = n
    if count > n:
        warnings.warn(f"requested {count} eigenpairs of a {n}x{n} operator; clamping", stacklevel=2)
        count = n
    if n == 0:
        return EigenSystem(np.zeros(0), np.zeros((0, 0)), 0)
    vals, vecs = np.linalg.eigh(l.matrix.to_dense())
    vals, vecs = vals[:count], vecs[:, :count].copy()
    for j in range(count):
        nz = np.flatnonzero(np.abs(vecs[:, j]) > 1e-10)
        if len(nz) and vecs[nz[0], j] < 0:
            vecs[:, j] *= -1.0
    return EigenSystem(vals, vecs, n)


def laguerre_eval(P: int, lambdas) -> np.ndarray:
    """Laguerre polynomials ``T_0..T_{P-1}`` at ``lambdas``; shape ``(P, len)``."""
    if P < 1:
        raise ValueError("P must be at least 1")
    lam = np.asarray(lambdas, dtype=np.float64)
    out = np.empty((P,) + lam.shape)
    out[0] = 1.0
    if P > 1:
        out[1] = 1.0 - lam
    for p in range(1, P - 1):
        out[p + 1] = ((2 * p + 1 - lam) * out[p] - p * out[p - 1]) / (p + 1)
    return out


def laguerre_response(theta: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Spectral response ``sum_p theta[p] T_p(lambda)`` of a 1-d coefficient list."""
    theta = np.asarray(theta, dtype=np.float64)

    def h(lam):
        return np.tensordot(theta, laguerre_eval(len(theta), lam), axes=1)

    return h


def filter_exact(es: EigenSystem, spectrum_fn: Callable, x) -> np.ndarray:
    """Filter ``x`` in the eigenbasis: ``Psi diag(h(lambda)) Psi^T x``."""
    if not es.complete:
        raise ValueError(
            f"exact filtering needs all {es.n} eigenpairs, got {len(es.eigenvalues)}"
        )
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != es.n:
        raise ValueError(f"signal has {x.shape[0]} rows, operator has size {es.n}")
    h = np.broadcast_to(np.asarray(spectrum_fn(es.eigenvalues), dtype=np.float64), es.eigenvalues.shape)
    psi = es.eigenvectors
    coeffs = psi.T @ x
    if x.ndim == 1:
        return psi @ (h * coeffs)
    return psi @ (h[:, None] * coeffs)


def laguerre_terms(l: HLOperator, P: int, x: np.ndarray) -> np.ndarray:
    """Stack of ``T_p(L) x`` for ``p < P`` by the three-term recurrence."""
    x = np.asarray(x, dtype=np.float64)
    terms = np.empty((P,) + x.shape)
    terms[0] = x
    if P > 1:
        terms[1] = x - spmm(l.matrix, x)
    for p in range(1, P - 1):
        lt = spmm(l.matrix, terms[p])
        terms[p + 1] = ((2 * p + 1) * terms[p] - lt - p * terms[p - 1]) / (p + 1)
    return terms


def filter_poly(l: HLOperator, fb: FilterBank, x) -> np.ndarray:
    """Apply the polynomial filter bank to an ``n_k x d_in`` signal.

    Output channel ``o`` is ``sum_i sum_p theta[p, i, o] T_p(L) x_i``; the
    operator polynomials are never formed as matrices.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if fb.k != l.k:
        raise ValueError(f"filter bank is for dimension {fb.k}, operator is {l.k}")
    if x.shape[0] != l.n:
        raise ValueError(f"signal has {x.shape[0]} rows, operator has size {l.n}")
    if x.shape[1] != fb.d_in:
        raise ValueError(f"signal has {x.shape[1]} channels, filter bank expects {fb.d_in}")
    if l.n == 0:
        return np.zeros((0, fb.d_out))
    terms = laguerre_terms(l, fb.P, x)
    out = terms[0] @ fb.theta[0]
    for p in range(1, fb.P):
        out = out + terms[p] @ fb.theta[p]
    return out
