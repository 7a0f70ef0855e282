"""Finite-difference Laplacians on the unit interval and square.

Unknowns sit at the interior nodes of a uniform mesh with h = 1/(n+1);
in 2-D they are ordered lexicographically with x running fastest, so the
assembled matrix has tridiag(-1, 4, -1) diagonal blocks and -I off-diagonal
blocks, all scaled by (n+1)**2. The closed-form eigenpairs of these
matrices serve as the exact oracle for every solver in the package.
"""

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.io
import scipy.sparse as sp

MAX_UNKNOWNS = 2**31 - 1


@dataclass(frozen=True)
class GridSpec:
    dimension: int
    n: int

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2, got %r" % (self.dimension,))
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError("need at least one interior point per direction, got n=%r" % (self.n,))
        if self.n ** self.dimension > MAX_UNKNOWNS:
            raise ValueError("n=%d in %d-D overflows the index range" % (self.n, self.dimension))

    @classmethod
    def from_h(cls, dimension, h):
        inv = 1.0 / h
        n1 = int(round(inv))
        if n1 < 2 or abs(n1 - inv) > 1e-9 * inv:
            raise ValueError("h=%r is not 1/(n+1) for an integer n >= 1" % (h,))
        return cls(dimension, n1 - 1)

    @property
    def h_exact(self):
        return Fraction(1, self.n + 1)

    @property
    def h(self):
        return 1.0 / (self.n + 1)

    @property
    def N(self):
        return self.n ** self.dimension

    def coordinates(self):
        """Node coordinates, one array per axis, in unknown order."""
        x = np.arange(1, self.n + 1) / (self.n + 1)
        if self.dimension == 1:
            return (x,)
        xx, yy = np.meshgrid(x, x, indexing="xy")
        return xx.ravel(), yy.ravel()

    def label(self):
        return "%dD n=%d" % (self.dimension, self.n)


@dataclass(frozen=True, eq=False)
class SparseSymMatrix:
    """Immutable CSR matrix, optionally tagged with the grid it came from.

    ``grid`` is set only while the matrix is the grid's Laplacian plus a
    constant diagonal ``shift``; the closed-form eigenpairs then apply with
    every eigenvalue moved by ``shift``.
    """

    csr: sp.csr_matrix
    grid: GridSpec = None
    shift: float = 0.0
    _diag: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        csr = sp.csr_matrix(self.csr, dtype=np.float64)
        csr.sort_indices()
        for arr in (csr.data, csr.indices, csr.indptr):
            arr.setflags(write=False)
        object.__setattr__(self, "csr", csr)
        d = csr.diagonal()
        d.setflags(write=False)
        object.__setattr__(self, "_diag", d)

    @property
    def shape(self):
        return self.csr.shape

    @property
    def N(self):
        return self.csr.shape[0]

    @property
    def indptr(self):
        return self.csr.indptr

    @property
    def indices(self):
        return self.csr.indices

    @property
    def data(self):
        return self.csr.data

    @property
    def nnz(self):
        return self.csr.nnz

    def diagonal(self):
        return self._diag

    def __matmul__(self, x):
        return self.csr @ x

    def toarray(self):
        return self.csr.toarray()

    def is_symmetric(self):
        diff = self.csr - self.csr.T
        return diff.nnz == 0 or not np.any(diff.data)


def _tridiag(n):
    return sp.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


def assemble_laplacian(grid):
    """(n+1)**2 times the 3-point (1-D) or 5-point (2-D) Dirichlet stencil."""
    n = grid.n
    T = _tridiag(n)
    if grid.dimension == 1:
        K = T
    else:
        eye = sp.identity(n, format="csr")
        K = sp.kron(eye, T, format="csr") + sp.kron(T, eye, format="csr")
    K.eliminate_zeros()
    return SparseSymMatrix(float((n + 1) ** 2) * K, grid=grid)


def matrix_inf_norm(A):
    """max_i sum_j |a_ij|."""
    csr = A.csr if isinstance(A, SparseSymMatrix) else sp.csr_matrix(A)
    return float(np.max(np.asarray(abs(csr).sum(axis=1)).ravel()))


def laplacian_inf_norm(grid):
    """Closed-form ||A||_inf of the grid Laplacian, without assembling it."""
    neighbours = min(2, grid.n - 1)
    return float((grid.n + 1) ** 2 * grid.dimension * (2 + neighbours))


@dataclass(frozen=True)
class EigenPair:
    index: tuple
    lam: float
    psi: np.ndarray


def _modes_1d(n, i):
    h = 1.0 / (n + 1)
    lam = 4.0 * (n + 1) ** 2 * math.sin(i * math.pi * h / 2) ** 2
    j = np.arange(1, n + 1)
    return lam, math.sqrt(2 * h) * np.sin(i * math.pi * j * h)


def _check_index(grid, index):
    index = (index,) if np.isscalar(index) else tuple(index)
    if len(index) != grid.dimension:
        raise ValueError("index %r does not match a %d-D grid" % (index, grid.dimension))
    for i in index:
        if not 1 <= i <= grid.n:
            raise ValueError("mode index %r outside 1..%d" % (index, grid.n))
    return tuple(int(i) for i in index)


def eigen_oracle(grid, index):
    """Closed-form eigenpair; in 2-D ``index = (i, j)`` with i the x-mode."""
    index = _check_index(grid, index)
    if grid.dimension == 1:
        lam, psi = _modes_1d(grid.n, index[0])
        return EigenPair(index, lam, psi)
    lx, px = _modes_1d(grid.n, index[0])
    ly, py = _modes_1d(grid.n, index[1])
    return EigenPair(index, lx + ly, np.outer(py, px).ravel())


def eigenvalues(grid):
    """All oracle eigenvalues laid out like the sine-transform coefficients.

    1-D: shape (n,) indexed by mode i-1. 2-D: shape (n, n) indexed by
    (j-1, i-1) with i the x-mode, matching ``f.reshape(n, n)``.
    """
    n = grid.n
    i = np.arange(1, n + 1)
    lam = 4.0 * (n + 1) ** 2 * np.sin(i * np.pi / (2 * (n + 1))) ** 2
    if grid.dimension == 1:
        return lam
    return lam[:, None] + lam[None, :]


def smallest_eigenvalue(grid):
    return grid.dimension * 4.0 * (grid.n + 1) ** 2 * math.sin(math.pi / (2 * (grid.n + 1))) ** 2


RHS_KINDS = ("checkerboard", "cosine", "cosine-nohup", "eigen", "custom")


def rhs_generate(grid, kind, index=None, values=None, h=None):
    """Right-hand side sampled at the interior nodes.

    ``checkerboard`` is +1 where (x-1/2)(y-1/2) > 0 and -1 elsewhere, grid
    lines included. ``cosine`` is the printed cos(pi h x) cos(pi h y), with
    h the grid's mesh size unless ``h`` is given (so that a finer mesh can
    sample the same function); ``cosine-nohup`` drops the factor h.
    """
    if kind not in RHS_KINDS:
        raise ValueError("unknown rhs kind %r; choose from %s" % (kind, ", ".join(RHS_KINDS)))
    if kind in ("checkerboard", "cosine", "cosine-nohup") and grid.dimension != 2:
        raise ValueError("rhs %r is defined on 2-D grids only" % kind)
    n = grid.n
    if kind == "checkerboard":
        s = 2 * np.arange(1, n + 1) - (n + 1)
        prod = np.outer(s, s).ravel()
        return np.where(prod > 0, 1.0, -1.0)
    if kind in ("cosine", "cosine-nohup"):
        x, y = grid.coordinates()
        c = math.pi * (grid.h if h is None else h) if kind == "cosine" else math.pi
        return np.cos(c * x) * np.cos(c * y)
    if kind == "eigen":
        if index is None:
            raise ValueError("rhs 'eigen' needs a mode index")
        return eigen_oracle(grid, index).psi
    vals = np.asarray(values, dtype=np.float64)
    if vals.shape != (grid.N,):
        raise ValueError("custom values must have length %d, got shape %s" % (grid.N, vals.shape))
    return vals.copy()


def add_diagonal_reaction(A, q):
    """A + diag(q) for a nonnegative reaction q sampled at the nodes."""
    q = np.asarray(q, dtype=np.float64)
    if np.isscalar(q) or q.ndim == 0:
        q = np.full(A.N, float(q))
    if q.shape != (A.N,):
        raise ValueError("reaction has length %d, matrix has %d rows" % (q.size, A.N))
    if np.any(q < 0):
        raise ValueError("reaction coefficients must be nonnegative (min %g)" % q.min())
    csr = A.csr + sp.diags(q, format="csr")
    constant = bool(np.all(q == q[0]))
    grid = A.grid if constant else None
    shift = A.shift + float(q[0]) if constant else 0.0
    return SparseSymMatrix(csr, grid=grid, shift=shift)


def write_matrix_market(A, path):
    scipy.io.mmwrite(str(path), A.csr.tocoo(), symmetry="symmetric", field="real")


def write_grid_function(grid, values, path):
    """CSV with header ``index,x[,y],value``."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (grid.N,):
        raise ValueError("grid function must have length %d" % grid.N)
    coords = grid.coordinates()
    header = ["index", "x"] + (["y"] if grid.dimension == 2 else []) + ["value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for idx in range(grid.N):
            w.writerow([idx] + [repr(float(c[idx])) for c in coords] + [repr(float(values[idx]))])
