"""Signed sparse matrices with a canonical, immutable layout.

Every matrix is stored in CSR form with row-major sorted entries, duplicates
summed and exact zeros dropped, so two matrices holding the same values compare
equal structurally. Boundary and assignment matrices only carry values in
{-1, 0, +1}, which keeps their products exact in float64.
"""

from __future__ import annotations

from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp


class SparseMatrix:
    """Immutable real sparse matrix in canonical CSR layout.

    Parameters
    ----------
    rows, cols : array_like of int
        Coordinates of the stored entries. Duplicated coordinates are summed.
    values : array_like of float
        Entry values.
    shape : tuple of int
        ``(n_rows, n_cols)``.
    """

    __slots__ = ("_csr",)

    def __init__(self, rows, cols, values, shape):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.float64).ravel()
        n_rows, n_cols = int(shape[0]), int(shape[1])
        if n_rows < 0 or n_cols < 0:
            raise ValueError(f"invalid shape {shape}")
        if not (len(rows) == len(cols) == len(values)):
            raise ValueError("rows, cols and values must have equal length")
        if len(rows) and (
            rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols
        ):
            raise ValueError(f"entry index out of range for shape {(n_rows, n_cols)}")
        coo = sp.coo_array((values, (rows, cols)), shape=(n_rows, n_cols))
        self._csr = _canonical(coo.tocsr())

    @classmethod
    def _wrap(cls, mat) -> "SparseMatrix":
        obj = cls.__new__(cls)
        obj._csr = _canonical(sp.csr_array(mat))
        return obj

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        r, c = np.nonzero(a)
        return cls(r, c, a[r, c], a.shape)

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[int, int, float]], shape) -> "SparseMatrix":
        entries = list(entries)
        if not entries:
            return cls.zeros(shape)
        r, c, v = zip(*entries)
        return cls(r, c, v, shape)

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        idx = np.arange(n)
        return cls(idx, idx, np.ones(n), (n, n))

    @classmethod
    def zeros(cls, shape) -> "SparseMatrix":
        return cls([], [], [], shape)

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self._csr.shape[0]), int(self._csr.shape[1]))

    @property
    def nnz(self) -> int:
        return int(self._csr.nnz)

    @property
    def csr(self) -> sp.csr_array:
        """Read-only view of the underlying scipy CSR array."""
        return self._csr

    def coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(rows, cols, values)`` in row-major order."""
        indptr = self._csr.indptr
        rows = np.repeat(np.arange(self.shape[0]), np.diff(indptr))
        return rows, self._csr.indices.astype(np.int64), self._csr.data.copy()

    def entries(self) -> list[tuple[int, int, float]]:
        r, c, v = self.coo()
        return [(int(i), int(j), float(x)) for i, j, x in zip(r, c, v)]

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values stored in row ``i``."""
        lo, hi = self._csr.indptr[i], self._csr.indptr[i + 1]
        return self._csr.indices[lo:hi], self._csr.data[lo:hi]

    def column_supports(self) -> list[tuple[int, ...]]:
        """Sorted row indices of the nonzeros in each column."""
        csc = self._csr.tocsc()
        csc.sort_indices()
        return [
            tuple(int(i) for i in csc.indices[csc.indptr[j]:csc.indptr[j + 1]])
            for j in range(self.shape[1])
        ]

    @property
    def T(self) -> "SparseMatrix":
        return transpose(self)

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            return spgemm(self, other)
        return spmm(self, other)

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} + {other.shape}")
        return SparseMatrix._wrap(self._csr + other._csr)

    def __neg__(self) -> "SparseMatrix":
        return self.scale(-1.0)

    def __sub__(self, other: "SparseMatrix") -> "SparseMatrix":
        return self + (-other)

    def scale(self, factor: float) -> "SparseMatrix":
        return SparseMatrix._wrap(self._csr * float(factor))

    def select_columns(self, cols) -> "SparseMatrix":
        cols = np.asarray(cols, dtype=np.int64)
        return SparseMatrix._wrap(self._csr[:, cols])

    def select_rows(self, rows) -> "SparseMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        return SparseMatrix._wrap(self._csr[rows, :])

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        a, b = self._csr, other._csr
        return (
            self.shape == other.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"


def _canonical(csr: sp.csr_array) -> sp.csr_array:
    csr = sp.csr_array(csr, dtype=np.float64, copy=True)
    csr.sum_duplicates()
    csr.eliminate_zeros()
    csr.sort_indices()
    csr.indptr = csr.indptr.astype(np.int64)
    csr.indices = csr.indices.astype(np.int64)
    for arr in (csr.data, csr.indices, csr.indptr):
        arr.flags.writeable = False
    return csr


def spmm(a: SparseMatrix, b) -> np.ndarray:
    """Sparse times dense. ``b`` may be 1-d or 2-d."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    out = a.csr @ b
    return np.asarray(out, dtype=np.float64)


def spgemm(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    """Sparse times sparse; cancelled entries are dropped."""
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return SparseMatrix._wrap(a.csr @ b.csr)


def transpose(a: SparseMatrix) -> SparseMatrix:
    return SparseMatrix._wrap(a.csr.T)


def abs_entries(a: SparseMatrix) -> SparseMatrix:
    """Entrywise absolute value; the sparsity pattern is unchanged."""
    return SparseMatrix._wrap(abs(a.csr))


def write_coo(a: SparseMatrix, fh: TextIO) -> None:
    """Write ``rows cols nnz`` then one ``row col value`` line per entry."""
    n_rows, n_cols = a.shape
    fh.write(f"{n_rows} {n_cols} {a.nnz}\n")
    for i, j, v in a.entries():
        fh.write(f"{i} {j} {v:.17g}\n")


def read_coo(fh: TextIO) -> SparseMatrix:
    header = fh.readline().split()
    if len(header) != 3:
        raise ValueError("COO header must be 'rows cols nnz'")
    n_rows, n_cols, nnz = (int(x) for x in header)
    rows, cols, vals = [], [], []
    for lineno, line in enumerate(fh, start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'row col value'")
        rows.append(int(parts[0]))
        cols.append(int(parts[1]))
        vals.append(float(parts[2]))
    if len(rows) != nnz:
        raise ValueError(f"header declares {nnz} entries, found {len(rows)}")
    return SparseMatrix(rows, cols, vals, (n_rows, n_cols))
