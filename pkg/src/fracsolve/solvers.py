"""Solvers for A**alpha u = f built from independent shifted SPD solves.

Every method reduces to

    u = b0 f + sum_j w_j (A + s_j I)^{-1} f,   s_j >= 0,

with the constant, weights and shifts supplied by a BURA approximant of
t**(1-alpha), the reciprocal of a BURA approximant of t**alpha, or the sinc
quadrature of the Dunford-Taylor integral. The shifted systems are solved
one per task; contributions are summed in ascending-shift order once all
solves are done, so the result does not depend on the number of workers.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.fft import dst, dstn, idst, idstn

from .discretization import SparseSymMatrix, eigenvalues, matrix_inf_norm
from .exceptions import ShiftedSolveError
from .rational.poles import PoleResidueForm, bura_partial_fractions, reciprocal_partial_fractions

BACKENDS = ("cg", "direct", "dst")
PRECONDITIONERS = ("none", "jacobi")
SPECTRAL_MAX_UNKNOWNS = 2**24


@dataclass(frozen=True)
class ShiftedSolveConfig:
    """Inner solver settings.

    ``backend`` picks preconditioned CG, a sparse LU factorization, or the
    fast sine transform (only for matrices still tagged with their grid).
    ``maxiter=None`` means 10*sqrt(N).
    """

    tol: float = 1e-12
    maxiter: int = None
    preconditioner: str = "jacobi"
    backend: str = "cg"
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.tol <= 1e-2:
            raise ValueError("tolerance must lie in (0, 1e-2], got %r" % (self.tol,))
        if self.maxiter is not None and self.maxiter < 1:
            raise ValueError("maxiter must be positive")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError("preconditioner must be one of %s" % (PRECONDITIONERS,))
        if self.backend not in BACKENDS:
            raise ValueError("backend must be one of %s" % (BACKENDS,))
        if self.workers < 1:
            raise ValueError("need at least one worker")

    def iteration_cap(self, N):
        if self.maxiter is not None:
            return self.maxiter
        return max(1, int(math.ceil(10 * math.sqrt(N))))


@dataclass(frozen=True)
class PCGResult:
    x: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray


def _colnorm(v):
    return np.sqrt(np.einsum("ij,ij->j", v, v))


def pcg(A, c, f, tol=1e-12, maxiter=None, preconditioner="jacobi"):
    """Preconditioned CG for (A + c I) x = f.

    ``f`` may hold several right-hand sides as columns; each column runs its
    own recurrence. When the recursive residual drops below ``tol*||f||``
    the true residual is recomputed, and the iteration restarts from it if
    the two disagree. Raises ShiftedSolveError when ``maxiter`` is hit.
    """
    csr = A.csr if isinstance(A, SparseSymMatrix) else sp.csr_matrix(A)
    N = csr.shape[0]
    b = np.asarray(f, dtype=np.float64)
    single = b.ndim == 1
    B = b.reshape(N, -1)
    if maxiter is None:
        maxiter = max(1, int(math.ceil(10 * math.sqrt(N))))
    diag = csr.diagonal() + c
    dinv = 1.0 / diag if preconditioner == "jacobi" else np.ones(N)
    dinv = dinv[:, None]

    def apply(v):
        return csr @ v + c * v

    bnorm = _colnorm(B)
    target = tol * bnorm
    X = np.zeros_like(B)
    R = B.copy()
    Z = dinv * R
    P = Z.copy()
    rz = np.einsum("ij,ij->j", R, Z)
    iters = np.zeros(B.shape[1], dtype=np.int64)
    active = bnorm > 0
    rnorm = bnorm.copy()
    it = 0
    while np.any(active):
        if it >= maxiter:
            worst = float(np.max(rnorm[active] / bnorm[active]))
            raise ShiftedSolveError(
                "CG stopped after %d iterations with relative residual %.3e (tol %.1e, shift %g)"
                % (maxiter, worst, tol, c),
                residual=worst,
            )
        it += 1
        Q = apply(P)
        pq = np.einsum("ij,ij->j", P, Q)
        a = np.where(active, rz / np.where(active, pq, 1.0), 0.0)
        X += a * P
        R -= a * Q
        iters[active] = it
        rnorm = _colnorm(R)
        done = active & (rnorm <= target)
        restart = np.zeros_like(active)
        if np.any(done):
            cols = np.flatnonzero(done)
            Rt = B[:, cols] - apply(X[:, cols])
            true = _colnorm(Rt)
            ok = true <= target[cols]
            active[cols[ok]] = False
            bad = cols[~ok]
            R[:, bad] = Rt[:, ~ok]
            rnorm[bad] = true[~ok]
            restart[bad] = True
        Z = dinv * R
        rz_new = np.einsum("ij,ij->j", R, Z)
        beta = np.where(active & ~restart, rz_new / np.where(active, rz, 1.0), 0.0)
        P = Z + beta * P
        rz = rz_new
    final = _colnorm(B - apply(X))
    rel = np.where(bnorm > 0, final / np.where(bnorm > 0, bnorm, 1.0), 0.0)
    if single:
        return PCGResult(X[:, 0], iters, rel)
    return PCGResult(X, iters, rel)


def _check_operand(A, f):
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != A.N:
        raise ValueError("right-hand side has %d rows, matrix has %d" % (f.shape[0], A.N))
    return f


def _grid_spectrum(A):
    if A.grid is None:
        raise ValueError("the dst backend needs a matrix still tagged with its grid")
    return eigenvalues(A.grid) + A.shift


def sine_transform(grid, v):
    """Coefficients of ``v`` in the orthonormal oracle eigenbasis."""
    n = grid.n
    if grid.dimension == 1:
        return dst(v, type=1, norm="ortho", axis=0)
    shape = (n, n) + v.shape[1:]
    return dstn(v.reshape(shape), type=1, norm="ortho", axes=(0, 1))


def inverse_sine_transform(grid, coeffs):
    n = grid.n
    if grid.dimension == 1:
        return idst(coeffs, type=1, norm="ortho", axis=0)
    out = idstn(coeffs, type=1, norm="ortho", axes=(0, 1))
    return out.reshape((n * n,) + coeffs.shape[2:])


def _expand(lam, v):
    # broadcast a spectrum over trailing right-hand-side columns
    return lam.reshape(lam.shape + (1,) * (v.ndim - lam.ndim))


def _solve_one(A, c, f, cfg):
    """(x, iterations) for a single shift."""
    if cfg.backend == "cg":
        res = pcg(A, c, f, cfg.tol, cfg.iteration_cap(A.N), cfg.preconditioner)
        return res.x, int(np.max(res.iterations)) if res.iterations.size else 0
    if cfg.backend == "direct":
        M = (A.csr + c * sp.identity(A.N, format="csr")).tocsc()
        lu = spla.splu(M)
        x = lu.solve(f)
        # a small c is rounded away on a large diagonal; one refinement step
        # with the shift applied separately restores it
        x += lu.solve(f - (A.csr @ x + c * x))
        return x, 1
    lam = _grid_spectrum(A)
    fh = sine_transform(A.grid, f)
    return inverse_sine_transform(A.grid, fh / _expand(lam + c, fh)), 0


def shifted_solve(A, c, f, cfg=None):
    """Solve (A + c I) x = f for a shift c >= 0."""
    cfg = cfg or ShiftedSolveConfig()
    if not c >= 0:
        raise ValueError("shift must be nonnegative, got %r" % (c,))
    f = _check_operand(A, f)
    return _solve_one(A, float(c), f, cfg)[0]


@dataclass(frozen=True)
class SolveResult:
    solution: np.ndarray
    systems_solved: int
    iterations: tuple
    seconds: float
    method: str = ""
    shifts: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class ShiftedSum:
    """u = constant*f + sum_j weights[j] (A + shifts[j] I)^{-1} f, shifts ascending."""

    constant: float
    shifts: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.shifts, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if s.shape != w.shape:
            raise ValueError("need one weight per shift")
        if np.any(s < 0):
            raise ValueError("negative shift %g" % s.min())
        order = np.argsort(s, kind="stable")
        object.__setattr__(self, "shifts", s[order])
        object.__setattr__(self, "weights", w[order])

    def __len__(self):
        return len(self.shifts)

    def transfer(self, lam):
        """The scalar function the sum applies to an eigenvalue ``lam``."""
        lam = np.asarray(lam, dtype=np.float64)
        out = np.full(lam.shape, self.constant)
        for s, w in zip(self.shifts, self.weights):
            out = out + w / (lam + s)
        return out

    def apply(self, A, f, cfg=None, method=""):
        cfg = cfg or ShiftedSolveConfig()
        f = _check_operand(A, f)
        t0 = time.perf_counter()
        if cfg.backend == "dst":
            # all shifts share the eigenbasis: transform once
            fh = sine_transform(A.grid, f)
            u = inverse_sine_transform(A.grid, _expand(self.transfer(_grid_spectrum(A)), fh) * fh)
            iters = (0,) * len(self)
        else:
            def task(j):
                try:
                    return _solve_one(A, float(self.shifts[j]), f, cfg)
                except ShiftedSolveError as exc:
                    raise ShiftedSolveError(
                        "shift #%d (%g): %s" % (j, self.shifts[j], exc), exc.residual, j
                    ) from exc

            idx = range(len(self))
            if cfg.workers > 1 and len(self) > 1:
                with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                    parts = list(pool.map(task, idx))
            else:
                parts = [task(j) for j in idx]
            u = self.constant * f
            for w, (x, _) in zip(self.weights, parts):
                u = u + w * x
            iters = tuple(it for _, it in parts)
        return SolveResult(
            solution=u,
            systems_solved=len(self),
            iterations=iters,
            seconds=time.perf_counter() - t0,
            method=method,
            shifts=tuple(float(s) for s in self.shifts),
        )


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1), got %r" % (alpha,))


def _form(r, build, provenance, beta, what):
    if isinstance(r, PoleResidueForm):
        if r.provenance != provenance:
            raise ValueError("%s needs a %r pole form, got %r" % (what, provenance, r.provenance))
        return r
    if abs(r.beta - beta) > 1e-12:
        raise ValueError("%s needs an approximant of t**%g, got t**%g" % (what, beta, r.beta))
    return build(r)


def bura_sum(A, alpha, r, C=None):
    """Shifted-sum data of the BURA solution C**(1-alpha) sum c_j (A - C d_j I)^{-1} f."""
    _check_alpha(alpha)
    form = _form(r, bura_partial_fractions, "bura", 1 - alpha, "BURA")
    C = matrix_inf_norm(A) if C is None else C
    _, d, c = form.as_arrays()
    scale = C ** (1 - alpha)
    return ShiftedSum(0.0, -C * d + 0.0, scale * c)


def rbura_sum(A, alpha, r, C=None):
    """Shifted-sum data of C**-alpha [b0 f + C sum e_j (A - C z_j I)^{-1} f]."""
    _check_alpha(alpha)
    form = _form(r, reciprocal_partial_fractions, "reciprocal", alpha, "R-BURA")
    C = matrix_inf_norm(A) if C is None else C
    b0, z, e = form.as_arrays()
    return ShiftedSum(C ** -alpha * b0, -C * z + 0.0, C ** (1 - alpha) * e)


def solve_bura(A, f, alpha, r, cfg=None):
    """(k,k)-BURA solution from an approximant of t**(1-alpha) or its pole form."""
    return bura_sum(A, alpha, r).apply(A, f, cfg, method="bura")


def solve_rbura(A, f, alpha, r, cfg=None):
    """R-BURA solution from an approximant of t**alpha or its reciprocal pole form."""
    return rbura_sum(A, alpha, r).apply(A, f, cfg, method="rbura")


def _ceil(x):
    # alpha*k is often an integer up to rounding
    return int(math.ceil(round(x, 9)))


@dataclass(frozen=True)
class QuadratureScheme:
    """Sinc quadrature for lam**-alpha with nodes l = -m..M and step kprime."""

    alpha: float
    k: float
    kprime: float
    m: int
    M: int

    @property
    def ells(self):
        return np.arange(-self.m, self.M + 1)

    @property
    def shifts(self):
        return np.exp(-2.0 * self.ells * self.kprime)

    @property
    def weights(self):
        a = self.alpha
        pref = 2.0 * self.kprime * math.sin(math.pi * a) / math.pi
        return pref * np.exp(2.0 * (a - 1.0) * self.ells * self.kprime)

    @property
    def systems(self):
        return self.m + self.M + 1

    def __call__(self, lam):
        return self.as_sum().transfer(lam)

    def evaluate_big(self, ctx, lam):
        """Q_alpha(lam) in the working precision of ``ctx``."""
        a = ctx.mpf(repr(float(self.alpha)))
        kp = ctx.mpf(repr(float(self.kprime)))
        lam = ctx.convert(lam)
        acc = ctx.zero
        for ell in range(-self.m, self.M + 1):
            acc += ctx.exp(2 * (a - 1) * ell * kp) / (lam + ctx.exp(-2 * ell * kp))
        return 2 * kp * ctx.sin(ctx.pi * a) / ctx.pi * acc

    def as_sum(self):
        return ShiftedSum(0.0, self.shifts, self.weights)


def build_quadrature(alpha, k=None, kprime=None):
    """Quadrature scheme from the degree parameter ``k`` or the step ``kprime``."""
    _check_alpha(alpha)
    if (k is None) == (kprime is None):
        raise ValueError("give exactly one of k and kprime")
    a = float(alpha)
    if k is not None:
        if not k > 0:
            raise ValueError("k must be positive")
        kprime = math.pi / (2.0 * math.sqrt(a * (1 - a) * k))
    else:
        if not kprime > 0:
            raise ValueError("kprime must be positive")
        k = math.pi**2 / (4.0 * a * (1 - a) * kprime**2)
    return QuadratureScheme(a, float(k), float(kprime), _ceil((1 - a) * k), _ceil(a * k))


def solve_quadrature(A, f, scheme, cfg=None):
    return scheme.as_sum().apply(A, f, cfg, method="quad")


def solve_spectral(grid, f, alpha, max_unknowns=SPECTRAL_MAX_UNKNOWNS):
    """Exact A**-alpha f for the grid Laplacian through the sine basis."""
    if grid.N > max_unknowns:
        raise ValueError("grid with %d unknowns exceeds the oracle cap of %d" % (grid.N, max_unknowns))
    f = np.asarray(f, dtype=np.float64)
    if f.shape[0] != grid.N:
        raise ValueError("right-hand side has %d rows, grid has %d unknowns" % (f.shape[0], grid.N))
    fh = sine_transform(grid, f)
    return inverse_sine_transform(grid, _expand(eigenvalues(grid) ** -alpha, fh) * fh)
