"""Minimal sparse/dense linear algebra: CSR matrices, vector ops, and a
seeded randomized truncated SVD.

The sparse format is compressed sparse row built from (row, col, value)
triplets, the same representation used by the document-term matrix files.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SparseMatrix",
    "dot",
    "norm",
    "axpy",
    "spmv",
    "spmtv",
    "truncated_svd",
]


class SparseMatrix:
    """Read-only CSR matrix with float64 values.

    Construct from row-major (row, col, value) triplets. Duplicate
    coordinates are rejected; values must be finite.
    """

    def __init__(self, n_rows, n_cols, rows, cols, values):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("triplet arrays must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= n_rows:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= n_cols:
                raise ValueError("col index out of range")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        order = np.lexsort((cols, rows))
        rows, cols, values = rows[order], cols[order], values[order]
        if rows.size > 1:
            dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
            if dup.any():
                raise ValueError("duplicate (row, col) coordinate")
        self.shape = (int(n_rows), int(n_cols))
        self.indptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.add.at(self.indptr, rows + 1, 1)
        np.cumsum(self.indptr, out=self.indptr)
        self.indices = cols
        self.data = values

    @property
    def nnz(self):
        return int(self.data.size)

    def row_arrays(self, i):
        """(column indices, values) of row i; indices ascending."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def to_triplets(self):
        """Row-major sorted (rows, cols, values) arrays."""
        rows = np.repeat(
            np.arange(self.shape[0], dtype=np.int64), np.diff(self.indptr)
        )
        return rows, self.indices.copy(), self.data.copy()

    def to_dense(self):
        out = np.zeros(self.shape)
        rows, cols, vals = self.to_triplets()
        out[rows, cols] = vals
        return out

    def matvec(self, x):
        """M @ x for a dense vector x."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.shape[1],):
            raise ValueError(
                f"dimension mismatch: {self.shape} @ {x.shape}"
            )
        prod = self.data * x[self.indices]
        # segment sum per row via reduceat; empty rows contribute 0
        out = np.zeros(self.shape[0])
        if prod.size:
            nonempty = np.flatnonzero(np.diff(self.indptr) > 0)
            out[nonempty] = np.add.reduceat(prod, self.indptr[nonempty])
        return out

    def rmatvec(self, x):
        """M.T @ x for a dense vector x."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.shape[0],):
            raise ValueError(
                f"dimension mismatch: {self.shape}.T @ {x.shape}"
            )
        rows = np.repeat(
            np.arange(self.shape[0], dtype=np.int64), np.diff(self.indptr)
        )
        out = np.zeros(self.shape[1])
        np.add.at(out, self.indices, self.data * x[rows])
        return out

    def matmat(self, B):
        """M @ B for a dense matrix B."""
        B = np.asarray(B, dtype=np.float64)
        if B.ndim != 2 or B.shape[0] != self.shape[1]:
            raise ValueError(
                f"dimension mismatch: {self.shape} @ {B.shape}"
            )
        rows = np.repeat(
            np.arange(self.shape[0], dtype=np.int64), np.diff(self.indptr)
        )
        out = np.zeros((self.shape[0], B.shape[1]))
        np.add.at(out, rows, self.data[:, None] * B[self.indices])
        return out

    def rmatmat(self, B):
        """M.T @ B for a dense matrix B."""
        B = np.asarray(B, dtype=np.float64)
        if B.ndim != 2 or B.shape[0] != self.shape[0]:
            raise ValueError(
                f"dimension mismatch: {self.shape}.T @ {B.shape}"
            )
        rows = np.repeat(
            np.arange(self.shape[0], dtype=np.int64), np.diff(self.indptr)
        )
        out = np.zeros((self.shape[1], B.shape[1]))
        np.add.at(out, self.indices, self.data[:, None] * B[rows])
        return out

    def frobenius(self):
        return float(np.sqrt(np.sum(self.data**2)))


def dot(x, y):
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch in dot")
    return float(np.dot(x, y))


def norm(x):
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64)))


def axpy(a, x, y):
    """a * x + y."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch in axpy")
    return a * x + y


def spmv(M, x):
    """M @ x; accepts SparseMatrix or ndarray."""
    if isinstance(M, SparseMatrix):
        return M.matvec(x)
    M = np.asarray(M, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if M.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {M.shape} @ {x.shape}")
    return M @ x


def spmtv(M, x):
    """M.T @ x; accepts SparseMatrix or ndarray."""
    if isinstance(M, SparseMatrix):
        return M.rmatvec(x)
    M = np.asarray(M, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if M.shape[0] != x.shape[0]:
        raise ValueError(f"dimension mismatch: {M.shape}.T @ {x.shape}")
    return M.T @ x


def _matmat(M, B):
    if isinstance(M, SparseMatrix):
        return M.matmat(B)
    return np.asarray(M, dtype=np.float64) @ B


def _rmatmat(M, B):
    if isinstance(M, SparseMatrix):
        return M.rmatmat(B)
    return np.asarray(M, dtype=np.float64).T @ B


def truncated_svd(M, d, seed, n_oversample=10, n_power_iters=4):
    """Rank-d truncated SVD by a seeded randomized range finder.

    A Gaussian test matrix sketches the range of M, the sketch is
    refined by power iterations with QR re-orthonormalization, and the
    small projected matrix is decomposed exactly.

    Parameters
    ----------
    M : SparseMatrix or ndarray, shape (n, m)
    d : target rank, 1 <= d <= min(n, m)
    seed : int, drives the Gaussian test matrix
    n_oversample : extra sketch columns beyond d
    n_power_iters : power-iteration count

    Returns
    -------
    (U, S, Vt) with U (n, d), S (d,) nonincreasing >= 0, Vt (d, m).
    Columns of U and rows of Vt are orthonormal. The sign of each right
    singular vector is fixed so its largest-magnitude entry is positive,
    which makes the output deterministic for a fixed seed.
    """
    shape = M.shape
    n, m = shape
    if not 1 <= d <= min(n, m):
        raise ValueError(f"rank d={d} out of range for shape {shape}")
    rng = np.random.default_rng(seed)
    k = min(d + n_oversample, min(n, m))
    omega = rng.standard_normal((m, k))
    Q, _ = np.linalg.qr(_matmat(M, omega))
    for _ in range(n_power_iters):
        Z, _ = np.linalg.qr(_rmatmat(M, Q))
        Q, _ = np.linalg.qr(_matmat(M, Z))
    B = _rmatmat(M, Q).T  # k x m
    Ub, S, Vt = np.linalg.svd(B, full_matrices=False)
    U = Q @ Ub
    U, S, Vt = U[:, :d], S[:d], Vt[:d]
    # sign convention: largest-|.| entry of each right singular vector > 0
    flip = Vt[np.arange(d), np.argmax(np.abs(Vt), axis=1)] < 0
    Vt[flip] *= -1.0
    U[:, flip] *= -1.0
    return U, S, Vt
