"""Observation-matrix storage, implicit covariance operators, and Matrix Market IO.

The p x n data matrix ``X`` is the only large object in the package.  The
sample covariance ``(1/n) X X^T`` is never materialized; everything the
selection criterion needs is obtained from matrix-vector products with
``X``/``X^T`` and from two Frobenius quantities:

    frob_sq(X)       = ||X||_F^2
    gram_frob_sq(X)  = ||X^T X||_F^2  (= sum of fourth powers of singular values)

``gram_frob_sq`` is computed exactly: via the Gram matrix on the smaller
side when that side has at most ``DENSE_GRAM_MAX`` vectors, and otherwise
streamed in row blocks so memory stays bounded.  No stochastic estimation.
"""

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, ParseError, UnsupportedFormat

# largest Gram side formed in one piece; above this the sum is streamed
DENSE_GRAM_MAX = 4096
_STREAM_BLOCK = 256


class ObservationMatrix:
    """Immutable p x n data matrix, dense (column-major) or CSR sparse.

    Parameters
    ----------
    data : ndarray or scipy sparse matrix
        Two-dimensional real array.  Sparse input is converted to CSR;
        dense input is stored Fortran-ordered and marked read-only.
    """

    def __init__(self, data):
        if sp.issparse(data):
            m = sp.csr_array(data)
            m.data = np.asarray(m.data, dtype=np.float64)
            self._data = m
            self._sparse = True
        else:
            arr = np.asarray(data, dtype=np.float64)
            if arr.ndim != 2:
                raise DimensionError(f"expected a 2-d array, got ndim={arr.ndim}")
            arr = np.asfortranarray(arr)
            arr.flags.writeable = False
            self._data = arr
            self._sparse = False
        p, n = self._data.shape
        if p < 1 or n < 1:
            raise DimensionError(f"matrix must be at least 1 x 1, got {p} x {n}")
        self.p = p
        self.n = n

    @property
    def shape(self):
        return (self.p, self.n)

    @property
    def is_sparse(self):
        return self._sparse

    @property
    def nnz(self):
        if self._sparse:
            return int(self._data.nnz)
        return int(np.count_nonzero(self._data))

    @property
    def raw(self):
        """Underlying storage (read-only ndarray or CSR array)."""
        return self._data

    def toarray(self):
        if self._sparse:
            return self._data.toarray()
        return np.array(self._data)

    def matvec(self, w):
        """X @ w for a length-n vector."""
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.n,):
            raise DimensionError(f"matvec expects length {self.n}, got {w.shape}")
        return self._data @ w

    def rmatvec(self, v):
        """X^T @ v for a length-p vector."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.p,):
            raise DimensionError(f"rmatvec expects length {self.p}, got {v.shape}")
        return self._data.T @ v

    def matmat(self, W):
        """X @ W for an n x c block."""
        return self._data @ W

    def rmatmat(self, V):
        """X^T @ V for a p x c block."""
        return self._data.T @ V

    def frob_sq(self):
        """||X||_F^2 = trace(X^T X)."""
        if self._sparse:
            return float(np.dot(self._data.data, self._data.data))
        return float(np.einsum("ij,ij->", self._data, self._data))

    def gram_frob_sq(self):
        """||X^T X||_F^2, the sum of fourth powers of the singular values.

        Equal to ||X X^T||_F^2, so the Gram matrix is taken on whichever
        side is smaller.  Sides larger than ``DENSE_GRAM_MAX`` are handled
        by streaming row blocks of the Gram product; the result is still
        exact, only the memory use changes.
        """
        # work with the matrix whose row count is the smaller side
        mat = self._data if self.p <= self.n else self._data.T
        rows = mat.shape[0]
        if rows <= DENSE_GRAM_MAX:
            g = mat @ mat.T
            if sp.issparse(g):
                return float(np.dot(g.data, g.data))
            return float(np.einsum("ij,ij->", g, g))
        total = 0.0
        mt = mat.T
        for lo in range(0, rows, _STREAM_BLOCK):
            block = mat[lo : lo + _STREAM_BLOCK] @ mt
            if sp.issparse(block):
                total += float(np.dot(block.data, block.data))
            else:
                total += float(np.einsum("ij,ij->", block, block))
        return total

    def trace(self):
        """Sum of diagonal entries (square matrices)."""
        if self.p != self.n:
            raise DimensionError("trace requires a square matrix")
        if self._sparse:
            return float(self._data.diagonal().sum())
        return float(np.trace(self._data))

    def self_product_trace(self):
        """trace(X @ X) = sum_ij X_ij X_ji (square matrices)."""
        if self.p != self.n:
            raise DimensionError("trace(X @ X) requires a square matrix")
        if self._sparse:
            return float(self._data.multiply(self._data.T).sum())
        return float(np.einsum("ij,ji->", self._data, self._data))

    def center_columns(self):
        """Return a dense copy with each row's mean over the n columns removed."""
        dense = self.toarray()
        dense -= dense.mean(axis=1, keepdims=True)
        return ObservationMatrix(dense)

    def column_block(self, lo, hi):
        """Columns [lo, hi) as a dense p x (hi-lo) array."""
        block = self._data[:, lo:hi]
        if sp.issparse(block):
            return block.toarray()
        return np.array(block)

    def __repr__(self):
        kind = "sparse" if self._sparse else "dense"
        return f"ObservationMatrix({self.p} x {self.n}, {kind}, nnz={self.nnz})"


class CovarianceOperator:
    """Implicit sample covariance ``v -> (1/n) X (X^T v)``.

    Symmetric positive semidefinite by construction; applied in two passes
    over ``X`` with no p x p intermediate.
    """

    def __init__(self, data):
        self.data = data
        self.scale = 1.0 / data.n

    @property
    def dim(self):
        return self.data.p

    @property
    def samples(self):
        """The n entering the criterion's n/(2 sigma^2) factor and C_n."""
        return self.data.n

    def matvec(self, v):
        return self.scale * self.data.matvec(self.data.rmatvec(v))

    def matmat(self, V):
        return self.scale * self.data.matmat(self.data.rmatmat(V))

    def start_vector(self, v):
        """Lift a length-n direction into the operator's range: X @ v."""
        return self.data.matvec(v)

    @property
    def start_dim(self):
        """Length of the random vector handed to :meth:`start_vector`."""
        return self.data.n

    def phi(self, sigma):
        """||S_n - sigma I||_F^2 via the Frobenius shortcut (exact Gram term)."""
        x = self.data
        return (
            x.gram_frob_sq() / x.n**2
            - (2.0 * sigma / x.n) * x.frob_sq()
            + x.p * sigma**2
        )


class SymmetricDataOperator:
    """Square data matrix used directly as the covariance-like operator.

    Numerical-rank estimation of a general square matrix ``X`` compares the
    spectrum of its symmetric part ``A = (X + X^T)/2`` against the noise
    level; ``v -> A v`` needs one pass over ``X`` and one over ``X^T`` and
    never forms ``A``.  The criterion's sample count is taken as ``n = p``.
    """

    def __init__(self, data):
        if data.p != data.n:
            raise DimensionError(
                f"symmetric operator needs a square matrix, got {data.p} x {data.n}"
            )
        self.data = data

    @property
    def dim(self):
        return self.data.p

    @property
    def samples(self):
        return self.data.p

    def matvec(self, v):
        return 0.5 * (self.data.matvec(v) + self.data.rmatvec(v))

    def matmat(self, V):
        return 0.5 * (self.data.matmat(V) + self.data.rmatmat(V))

    def start_vector(self, v):
        return self.matvec(v)

    @property
    def start_dim(self):
        return self.data.p

    def phi(self, sigma):
        """||A - sigma I||_F^2 with A the symmetric part of X (exact identity)."""
        x = self.data
        a_frob_sq = 0.5 * (x.frob_sq() + x.self_product_trace())
        return a_frob_sq - 2.0 * sigma * x.trace() + x.p * sigma**2


def make_operator(data, kind="covariance"):
    """Build the operator the estimation pipeline iterates with.

    ``covariance`` is the default ``(1/n) X X^T``; ``symmetric`` treats a
    square data matrix as the operator itself (numerical-rank use).
    """
    if kind == "covariance":
        return CovarianceOperator(data)
    if kind == "symmetric":
        return SymmetricDataOperator(data)
    raise ValueError(f"unknown operator kind {kind!r}")


# ---------------------------------------------------------------------------
# spec operations as free functions

def cov_matvec(op, v):
    """Apply a covariance-like operator to v (two passes over X, no p x p temp)."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (op.dim,):
        raise DimensionError(f"expected length {op.dim}, got {v.shape}")
    return op.matvec(v)


def frob_sq(x):
    """||X||_F^2 of an ObservationMatrix."""
    return x.frob_sq()


def gram_frob_sq(x):
    """||X^T X||_F^2 of an ObservationMatrix (exact, see class docstring)."""
    return x.gram_frob_sq()


def center_columns(x):
    """Row-mean-centered dense copy of an ObservationMatrix."""
    return x.center_columns()


# ---------------------------------------------------------------------------
# Matrix Market IO

_FIELDS = {"real", "integer", "pattern", "complex"}
_SYMMETRIES = {"general", "symmetric", "skew-symmetric", "hermitian"}


def _header_error(lineno, msg):
    return ParseError(f"line {lineno}: {msg}")


def load_matrix_market(path):
    """Read a Matrix Market file into an ObservationMatrix.

    Coordinate and array formats, real/integer/pattern fields, and
    general/symmetric structure are accepted.  Pattern entries read as
    1.0; symmetric storage is expanded to full.  Malformed content raises
    :class:`ParseError` with the offending line number; complex or
    skew/hermitian files raise :class:`UnsupportedFormat`.
    """
    with open(path, "rt", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise _header_error(1, "empty file")

    head = lines[0].split()
    if len(head) != 5 or head[0] != "%%MatrixMarket" or head[1].lower() != "matrix":
        raise _header_error(1, f"bad MatrixMarket banner: {lines[0]!r}")
    layout, field, symmetry = head[2].lower(), head[3].lower(), head[4].lower()
    if layout not in ("coordinate", "array"):
        raise _header_error(1, f"unknown layout {layout!r}")
    if field not in _FIELDS:
        raise _header_error(1, f"unknown field {field!r}")
    if field == "complex":
        raise UnsupportedFormat("complex-valued matrices are not supported")
    if symmetry not in _SYMMETRIES:
        raise _header_error(1, f"unknown symmetry {symmetry!r}")
    if symmetry in ("skew-symmetric", "hermitian"):
        raise UnsupportedFormat(f"{symmetry} storage is not supported")
    if layout == "array" and field == "pattern":
        raise _header_error(1, "array layout cannot use the pattern field")

    # first non-comment, non-blank line after the banner is the size line
    idx = 1
    while idx < len(lines) and (lines[idx].startswith("%") or not lines[idx].strip()):
        idx += 1
    if idx >= len(lines):
        raise _header_error(len(lines), "missing size line")
    size_lineno = idx + 1
    size_parts = lines[idx].split()

    if layout == "coordinate":
        if len(size_parts) != 3:
            raise _header_error(size_lineno, "coordinate size line needs 'rows cols nnz'")
        try:
            nrows, ncols, nnz = (int(t) for t in size_parts)
        except ValueError:
            raise _header_error(size_lineno, f"bad size line: {lines[idx]!r}") from None
        if nrows < 1 or ncols < 1 or nnz < 0:
            raise _header_error(size_lineno, "non-positive dimensions")
        if symmetry == "symmetric" and nrows != ncols:
            raise _header_error(size_lineno, "symmetric matrix must be square")
        want_vals = field != "pattern"
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        count = 0
        for off, line in enumerate(lines[idx + 1 :]):
            lineno = size_lineno + 1 + off
            text = line.strip()
            if not text or text.startswith("%"):
                continue
            parts = text.split()
            if len(parts) != (3 if want_vals else 2):
                raise _header_error(lineno, f"bad entry: {line!r}")
            if count >= nnz:
                raise _header_error(lineno, f"more than the declared {nnz} entries")
            try:
                i, j = int(parts[0]), int(parts[1])
                v = float(parts[2]) if want_vals else 1.0
            except ValueError:
                raise _header_error(lineno, f"bad entry: {line!r}") from None
            if not (1 <= i <= nrows and 1 <= j <= ncols):
                raise _header_error(lineno, f"index ({i},{j}) out of range")
            rows[count], cols[count], vals[count] = i - 1, j - 1, v
            count += 1
        if count != nnz:
            raise _header_error(len(lines), f"declared {nnz} entries, found {count}")
        if nnz:
            flat = rows * ncols + cols
            uniq, first = np.unique(flat, return_index=True)
            if uniq.size != nnz:
                dup = np.setdiff1d(np.arange(nnz), first)[0]
                raise ParseError(
                    f"duplicate entry at ({rows[dup] + 1},{cols[dup] + 1})"
                )
        if symmetry == "symmetric":
            off_diag = rows != cols
            rows, cols, vals = (
                np.concatenate([rows, cols[off_diag]]),
                np.concatenate([cols, rows[off_diag]]),
                np.concatenate([vals, vals[off_diag]]),
            )
        mat = sp.csr_array(
            sp.coo_array((vals, (rows, cols)), shape=(nrows, ncols))
        )
        return ObservationMatrix(mat)

    # array layout: column-major list of all entries
    if len(size_parts) != 2:
        raise _header_error(size_lineno, "array size line needs 'rows cols'")
    try:
        nrows, ncols = (int(t) for t in size_parts)
    except ValueError:
        raise _header_error(size_lineno, f"bad size line: {lines[idx]!r}") from None
    if nrows < 1 or ncols < 1:
        raise _header_error(size_lineno, "non-positive dimensions")
    if symmetry == "symmetric" and nrows != ncols:
        raise _header_error(size_lineno, "symmetric matrix must be square")
    expected = (
        nrows * ncols if symmetry == "general" else nrows * (nrows + 1) // 2
    )
    entries = np.empty(expected, dtype=np.float64)
    count = 0
    for off, line in enumerate(lines[idx + 1 :]):
        lineno = size_lineno + 1 + off
        text = line.strip()
        if not text or text.startswith("%"):
            continue
        for tok in text.split():
            if count >= expected:
                raise _header_error(lineno, f"more than {expected} entries")
            try:
                entries[count] = float(tok)
            except ValueError:
                raise _header_error(lineno, f"bad value {tok!r}") from None
            count += 1
    if count != expected:
        raise _header_error(len(lines), f"expected {expected} entries, found {count}")
    dense = np.empty((nrows, ncols), order="F")
    if symmetry == "general":
        dense[:] = entries.reshape((nrows, ncols), order="F")
    else:
        k = 0
        for j in range(ncols):
            for i in range(j, nrows):
                dense[i, j] = entries[k]
                dense[j, i] = entries[k]
                k += 1
    return ObservationMatrix(dense)


def save_matrix_market_dense(path, array):
    """Write a dense array in Matrix Market array format, 17 significant digits."""
    arr = np.atleast_2d(np.asarray(array, dtype=np.float64))
    nrows, ncols = arr.shape
    with open(path, "wt", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix array real general\n")
        fh.write(f"{nrows} {ncols}\n")
        for j in range(ncols):
            for i in range(nrows):
                fh.write(f"{arr[i, j]:.17g}\n")


def save_matrix_market(path, x):
    """Write an ObservationMatrix (coordinate format when sparse)."""
    if not x.is_sparse:
        save_matrix_market_dense(path, x.raw)
        return
    coo = sp.coo_array(x.raw)
    with open(path, "wt", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{x.p} {x.n} {coo.nnz}\n")
        order = np.lexsort((coo.row, coo.col))
        for k in order:
            fh.write(f"{coo.row[k] + 1} {coo.col[k] + 1} {coo.data[k]:.17g}\n")
