"""Best uniform rational approximation of t**beta on [0, 1].

The approximant r = p/q of type (k, m) is found by a linearized Remez
exchange run entirely in arbitrary precision. Extreme points of the error
r(t) - t**beta crowd towards t = 0 (below 1e-14 already for moderate
degrees), so the search happens on a logarithmic grid and the degrees are
grown one step at a time, each level seeded with the previous level's
extreme points.
"""

import logging
from dataclasses import dataclass

from ..exceptions import CertificationError, ConvergenceError, PrecisionExhaustedError
from .chebyshev import (
    cheb_row,
    clenshaw,
    context,
    leading_monomial,
    polynomial_roots,
    to_monomial,
)

log = logging.getLogger(__name__)

DEFAULT_PRECISION = 512
MAX_PRECISION = 2048
CERTIFY_RTOL = 1e-3
LEVEL_RTOL = 1e-10
MAX_EXCHANGES = 40
GRID_LOWEST_DECADE = -40
GRID_PER_DECADE = 200


@dataclass(frozen=True)
class RationalMinimax:
    """Certified minimax approximant of t**beta on [0, 1].

    Numerator and denominator are stored as coefficients in the shifted
    Chebyshev basis T_j(2t - 1); the denominator is scaled to be monic in the
    monomial sense. ``signs[i]`` is the sign of r - t**beta at
    ``extreme_points[i]``.
    """

    beta: float
    k: int
    m: int
    precision: int
    numerator: tuple
    denominator: tuple
    error: object
    extreme_points: tuple
    signs: tuple
    iterations: int = 0

    @property
    def E(self):
        return self.error

    @property
    def ctx(self):
        return context(self.precision)

    @property
    def beta_big(self):
        return self.ctx.mpf(repr(float(self.beta)))

    def p(self, t):
        return clenshaw(self.ctx, self.numerator, t)

    def q(self, t):
        return clenshaw(self.ctx, self.denominator, t)

    def __call__(self, t):
        return self.p(t) / self.q(t)

    def error_at(self, t):
        """r(t) - t**beta in working precision."""
        ctx = self.ctx
        t = ctx.convert(t)
        power = ctx.power(t, self.beta_big) if t > 0 else ctx.zero
        return self(t) - power

    def evaluate(self, t, mode="bigreal"):
        return evaluate(self, t, mode)

    def numerator_monomial(self):
        return to_monomial(self.ctx, self.numerator)

    def denominator_monomial(self):
        return to_monomial(self.ctx, self.denominator)


def evaluate(r, t, mode="bigreal"):
    """Value of r at t in [0, 1], either as a BigReal or rounded to double."""
    if mode not in ("bigreal", "double"):
        raise ValueError("mode must be 'bigreal' or 'double', got %r" % (mode,))
    ctx = r.ctx
    t = ctx.convert(t)
    if t < 0 or t > 1:
        raise ValueError("t must lie in [0, 1], got %s" % ctx.nstr(t, 8))
    value = r(t)
    return value if mode == "bigreal" else float(value)


class _SearchGrid:
    """Log-spaced abscissae with cached t**beta and Chebyshev rows."""

    def __init__(self, ctx, beta, lowest_decade=GRID_LOWEST_DECADE, per_decade=GRID_PER_DECADE):
        self.ctx = ctx
        self.beta = beta
        ten = ctx.mpf(10)
        self.t = [ctx.zero] + [
            ten ** (ctx.mpf(j) / per_decade) for j in range(lowest_decade * per_decade, 1)
        ]
        self.t[-1] = ctx.one
        self.f = [ctx.zero] + [ctx.power(t, beta) for t in self.t[1:]]
        self.rows = [[] for _ in self.t]
        self.degree = -1

    def ensure_degree(self, degree):
        if degree <= self.degree:
            return
        self.rows = [cheb_row(self.ctx, t, degree) for t in self.t]
        self.degree = degree

    def errors(self, num, den):
        self.ensure_degree(max(len(num), len(den)) - 1)
        ctx = self.ctx
        kn, kd = len(num), len(den)
        return [
            ctx.fdot(num, row[:kn]) / ctx.fdot(den, row[:kd]) - f
            for row, f in zip(self.rows, self.f)
        ]


def _error_fn(ctx, beta, num, den):
    def err(t):
        power = ctx.power(t, beta) if t > 0 else ctx.zero
        return clenshaw(ctx, num, t) / clenshaw(ctx, den, t) - power

    return err


def _solve_reference(ctx, beta, k, m, ref):
    """Coefficients and levelled error interpolating +-E on ``ref``.

    p(t_i) - t_i**beta q(t_i) = (-1)**i E q(t_i) is linear in (p, q) for
    fixed E. Projecting onto the orthogonal complement of the numerator
    columns leaves an (m+1)-dimensional eigenproblem in (q, E); the
    admissible eigenpair is the one whose q keeps a single sign on the
    reference, taking the smallest |E| if several do.
    """
    n = k + m + 2
    degree = max(k, m)
    rows = [cheb_row(ctx, t, degree) for t in ref]
    f = [ctx.power(t, beta) if t > 0 else ctx.zero for t in ref]
    sign = [1 if i % 2 == 0 else -1 for i in range(n)]
    vp = ctx.matrix([row[:k + 1] for row in rows])
    Q, R = ctx.qr(vp, mode="full")
    lhs = ctx.matrix(m + 1, m + 1)
    rhs = ctx.matrix(m + 1, m + 1)
    for a in range(m + 1):
        ua = [Q[i, k + 1 + a] for i in range(n)]
        for b in range(m + 1):
            lhs[a, b] = -ctx.fdot([ua[i] * f[i] for i in range(n)], [rows[i][b] for i in range(n)])
            rhs[a, b] = ctx.fdot([ua[i] * sign[i] for i in range(n)], [rows[i][b] for i in range(n)])
    evals, evecs = ctx.eig(ctx.inverse(rhs) * lhs)
    real_tol = ctx.mpf(2) ** (-ctx.prec // 2)
    best = None
    for idx, ev in enumerate(evals):
        ev = ctx.mpc(ev)
        if abs(ev.imag) > real_tol * (1 + abs(ev.real)):
            continue
        den = [ctx.re(evecs[j, idx]) for j in range(m + 1)]
        qv = [ctx.fdot(den, row[:m + 1]) for row in rows]
        if not (all(v > 0 for v in qv) or all(v < 0 for v in qv)):
            continue
        if best is None or abs(ev.real) < abs(best[0]):
            best = (ev.real, den, qv)
    if best is None:
        raise ConvergenceError("no pole-free levelled solution on the current reference")
    E, den, qv = best
    target = ctx.matrix([(f[i] + sign[i] * E) * qv[i] for i in range(n)])
    proj = ctx.matrix(k + 1, 1)
    for a in range(k + 1):
        proj[a] = ctx.fdot([Q[i, a] for i in range(n)], [target[i] for i in range(n)])
    num = ctx.lu_solve(R[:k + 1, :k + 1], proj)
    num = [num[j] for j in range(k + 1)]
    scale = leading_monomial(ctx, den)
    return E, [c / scale for c in num], [c / scale for c in den]


def _golden_max(ctx, g, a, b, iters=32):
    """Maximize g on [a, b] by golden-section search; returns the abscissa."""
    ratio = (ctx.sqrt(5) - 1) / 2
    c = b - ratio * (b - a)
    d = a + ratio * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(iters):
        if gc > gd:
            b, d, gd = d, c, gc
            c = b - ratio * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + ratio * (b - a)
            gd = g(d)
    return (a + b) / 2


def _locate_extrema(ctx, grid, beta, num, den):
    """One extremum of the error per constant-sign run of the grid."""
    vals = grid.errors(num, den)
    err = _error_fn(ctx, beta, num, den)
    runs = []
    start = 0
    for j in range(1, len(vals) + 1):
        if j == len(vals) or (vals[j] > 0) != (vals[start] > 0):
            runs.append((start, j))
            start = j
    last = len(vals) - 1
    points = []
    for lo, hi in runs:
        jm = max(range(lo, hi), key=lambda j: abs(vals[j]))
        if jm <= 1:
            points.append(ctx.zero)
        elif jm == last:
            points.append(ctx.one)
        else:
            s = 1 if vals[jm] > 0 else -1
            u = _golden_max(
                ctx,
                lambda v: s * err(ctx.exp(v)),
                ctx.ln(grid.t[jm - 1]),
                ctx.ln(grid.t[jm + 1]),
            )
            points.append(ctx.exp(u))
    return points, len(runs), err


def _exchange(ctx, grid, beta, k, m, ref, tol, max_exchanges):
    n = k + m + 2
    spread = None
    for it in range(1, max_exchanges + 1):
        E, num, den = _solve_reference(ctx, beta, k, m, ref)
        points, _, err = _locate_extrema(ctx, grid, beta, num, den)
        if len(points) < n:
            raise ConvergenceError(
                "alternation lost at (%d, %d): %d sign runs for %d required" % (k, m, len(points), n),
                spread,
            )
        mags = [abs(err(t)) for t in points]
        if len(points) > n:
            # keep the n consecutive extrema with the largest minimum magnitude
            i0 = max(range(len(points) - n + 1), key=lambda i: min(mags[i:i + n]))
            points, mags = points[i0:i0 + n], mags[i0:i0 + n]
        top = max(mags)
        spread = (top - min(mags)) / top
        ref = points
        if spread <= tol:
            return num, den, ref, top, it
    raise ConvergenceError(
        "Remez exchange for (%d, %d) stalled after %d sweeps; extrema spread %s"
        % (k, m, max_exchanges, ctx.nstr(spread, 5)),
        float(spread),
    )


def _degree_path(k, m):
    if m < 0 or k < m or k > m + 1:
        raise ValueError("degrees must satisfy k == m or k == m + 1, got (%d, %d)" % (k, m))
    path = [(0, 0)]
    while path[-1] != (k, m):
        a, b = path[-1]
        path.append((a + 1, b) if a == b else (a, b + 1))
    return path


def bura_chain(beta, k, m, precision=DEFAULT_PRECISION, tol=LEVEL_RTOL,
               max_exchanges=MAX_EXCHANGES, grid=None):
    """Yield the minimax approximant at every level from (0, 0) to (k, m).

    Levels alternate between raising the numerator and the denominator
    degree, which is the only ordering that reaches both (k, k) and
    (k + 1, k). Each level starts from the previous extreme points plus one
    point inserted geometrically below the smallest nonzero one.
    """
    beta = float(beta)
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1), got %r" % beta)
    path = _degree_path(k, m)
    ctx = context(precision)
    b = ctx.mpf(repr(beta))
    if grid is None:
        grid = _SearchGrid(ctx, b)
    ref = [ctx.zero, ctx.one]
    for kk, mm in path:
        if kk + mm > 0:
            if len(ref) == 2:
                ref = [ctx.zero, ctx.mpf("0.25"), ctx.one]
            else:
                ref = [ref[0], ref[1] ** 2 / ref[2]] + ref[1:]
        num, den, ref, E, iters = _exchange(ctx, grid, b, kk, mm, ref, tol, max_exchanges)
        err = _error_fn(ctx, b, num, den)
        signs = tuple(1 if err(t) > 0 else -1 for t in ref)
        log.debug("beta=%s (%d,%d): E=%s after %d sweeps", beta, kk, mm, ctx.nstr(E, 8), iters)
        yield RationalMinimax(
            beta=beta, k=kk, m=mm, precision=precision,
            numerator=tuple(num), denominator=tuple(den), error=E,
            extreme_points=tuple(ref), signs=signs, iterations=iters,
        )


def certify(r, rtol=CERTIFY_RTOL):
    """Raise unless r equioscillates and its denominator keeps one sign.

    Checks: k+m+2 extreme points including both endpoints, alternating
    signs, magnitudes equal to E within ``rtol``, and no real root of the
    denominator in [0, 1].
    """
    ctx = r.ctx
    n = r.k + r.m + 2
    pts = r.extreme_points
    if len(pts) != n:
        raise CertificationError("expected %d extreme points, found %d" % (n, len(pts)))
    if pts[0] != 0 or pts[-1] != 1:
        raise CertificationError("endpoints 0 and 1 must be extreme points")
    if any(pts[i] >= pts[i + 1] for i in range(n - 1)):
        raise CertificationError("extreme points are not strictly increasing")
    errs = [r.error_at(t) for t in pts]
    for i, e in enumerate(errs):
        if (e > 0) != (i % 2 == 0):
            raise CertificationError("error does not alternate at extreme point %d" % i)
    E = ctx.convert(r.error)
    for i, e in enumerate(errs):
        if abs(abs(e) - E) > rtol * E:
            raise CertificationError(
                "extreme point %d has |error| %s, levelled E is %s"
                % (i, ctx.nstr(abs(e), 8), ctx.nstr(E, 8))
            )
    if r.m > 0:
        tol = ctx.mpf(2) ** (-ctx.prec // 4)
        for z in polynomial_roots(ctx, r.denominator_monomial()):
            z = ctx.mpc(z)
            if abs(z.imag) <= tol * (1 + abs(z)) and -tol <= z.real <= 1 + tol:
                raise PrecisionExhaustedError(
                    "denominator changes sign near t=%s; retry at %d bits"
                    % (ctx.nstr(z.real, 8), 2 * r.precision),
                    2 * r.precision,
                )
    return r


def compute_bura(beta, k, m, precision=DEFAULT_PRECISION, auto_escalate=True,
                 max_precision=MAX_PRECISION, tol=LEVEL_RTOL, max_exchanges=MAX_EXCHANGES):
    """Best uniform rational approximant of type (k, m) to t**beta on [0, 1].

    Parameters
    ----------
    beta : float
        Exponent in (0, 1). In the notation of the BURA solver,
        beta = 1 - alpha.
    k, m : int
        Numerator and denominator degree; (k, k) and (k + 1, k) are
        supported.
    precision : int
        Working precision in bits (at least 128).
    auto_escalate : bool
        On a precision failure, double the precision up to ``max_precision``.

    Returns
    -------
    RationalMinimax
        Certified approximant; ``r.E`` is the sup-norm error.
    """
    if precision < 128:
        raise ValueError("precision must be at least 128 bits")
    while True:
        try:
            r = None
            for r in bura_chain(beta, k, m, precision, tol, max_exchanges):
                pass
            return certify(r)
        except (PrecisionExhaustedError, ConvergenceError) as exc:
            if not auto_escalate or 2 * precision > max_precision:
                if isinstance(exc, PrecisionExhaustedError):
                    raise
                raise ConvergenceError(
                    "%s (at %d bits; retry at %d bits)" % (exc, precision, 2 * precision),
                    exc.spread,
                ) from exc
            log.info("beta=%s (%d,%d) failed at %d bits: %s; doubling", beta, k, m, precision, exc)
            precision *= 2
