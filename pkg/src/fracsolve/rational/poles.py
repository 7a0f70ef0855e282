"""Partial-fraction forms of BURA approximants and roots of their error.

Two solver-facing forms are produced from a certified approximant r = p/q:

* ``bura``: t**-1 r(t) = sum_j c_j / (t - d_j) with d_0 = 0 and the
  remaining d_j the roots of q.
* ``reciprocal``: 1/r(t) = b_0 + sum_j e_j / (t - z_j) over the roots z_j
  of p, with b_0 present only when deg p == deg q.
"""

from dataclasses import dataclass

import numpy as np

from ..exceptions import CertificationError, PrecisionExhaustedError
from .chebyshev import context, derivative, horner, polynomial_roots


@dataclass(frozen=True)
class PoleResidueForm:
    """b_0 + sum_j coefficients[j] / (t - poles[j]) with poles strictly decreasing."""

    constant: object
    poles: tuple
    coefficients: tuple
    provenance: str
    precision: int

    @property
    def ctx(self):
        return context(self.precision)

    def __len__(self):
        return len(self.poles)

    def __call__(self, t):
        ctx = self.ctx
        t = ctx.convert(t)
        acc = ctx.convert(self.constant) if self.constant is not None else ctx.zero
        for c, d in zip(self.coefficients, self.poles):
            acc += c / (t - d)
        return acc

    def as_arrays(self):
        """(b_0, poles, coefficients) rounded to double for the solvers."""
        b0 = float(self.constant) if self.constant is not None else 0.0
        return (
            b0,
            np.array([float(d) for d in self.poles]),
            np.array([float(c) for c in self.coefficients]),
        )


def real_roots(ctx, mono, what="polynomial"):
    """Simple real roots of a monomial polynomial, sorted decreasingly.

    Raises CertificationError when a root is complex and
    PrecisionExhaustedError when two roots are closer than 2**(-P/2)
    relative to their size.
    """
    roots = polynomial_roots(ctx, mono)
    tol = ctx.mpf(2) ** (-ctx.prec // 4)
    out = []
    for z in roots:
        z = ctx.mpc(z)
        if abs(z.imag) > tol * (1 + abs(z)):
            raise CertificationError(
                "%s has a complex root %s" % (what, ctx.nstr(z, 8))
            )
        out.append(z.real)
    d = derivative(mono)
    polished = []
    for x in out:
        for _ in range(4):
            dx = horner(ctx, d, x)
            if dx == 0:
                break
            x = x - horner(ctx, mono, x) / dx
        polished.append(x)
    polished.sort(reverse=True)
    gap_tol = ctx.mpf(2) ** (-ctx.prec // 2)
    for a, b in zip(polished, polished[1:]):
        if abs(a - b) <= gap_tol * max(abs(a), abs(b)):
            raise PrecisionExhaustedError(
                "%s has nearly coincident roots %s, %s; retry at %d bits"
                % (what, ctx.nstr(a, 8), ctx.nstr(b, 8), 2 * ctx.prec),
                2 * ctx.prec,
            )
    return polished


def bura_partial_fractions(r):
    """Partial fractions of t**-1 r(t) for a diagonal (k, k) approximant.

    The pole at zero carries r(0); every other pole is a root d_j < 0 of
    the denominator with coefficient p(d_j) / (d_j q'(d_j)).
    """
    if r.k != r.m or r.k < 1:
        raise ValueError("BURA partial fractions need a (k, k) approximant with k >= 1, got (%d, %d)"
                         % (r.k, r.m))
    ctx = r.ctx
    P = r.numerator_monomial()
    Q = r.denominator_monomial()
    dQ = derivative(Q)
    poles = real_roots(ctx, Q, "denominator")
    if any(d >= 0 for d in poles):
        raise CertificationError("denominator has a nonnegative root")
    coeffs = [horner(ctx, P, ctx.zero) / horner(ctx, Q, ctx.zero)]
    for d in poles:
        coeffs.append(horner(ctx, P, d) / (d * horner(ctx, dQ, d)))
    if any(c <= 0 for c in coeffs):
        raise CertificationError("BURA partial-fraction coefficients must all be positive")
    return PoleResidueForm(
        constant=None,
        poles=tuple([ctx.zero] + poles),
        coefficients=tuple(coeffs),
        provenance="bura",
        precision=r.precision,
    )


def reciprocal_partial_fractions(r):
    """Partial fractions of 1/r(t) over the numerator roots of r.

    Every numerator root must be real, simple and nonpositive; this is
    checked, not assumed.
    """
    if r.k < 1:
        raise ValueError("reciprocal form needs a numerator of degree >= 1")
    ctx = r.ctx
    P = r.numerator_monomial()
    Q = r.denominator_monomial()
    dP = derivative(P)
    poles = real_roots(ctx, P, "numerator")
    if any(z > 0 for z in poles):
        raise CertificationError("numerator has a positive root")
    coeffs = [horner(ctx, Q, z) / horner(ctx, dP, z) for z in poles]
    constant = Q[-1] / P[-1] if len(P) == len(Q) else None
    if len(Q) > len(P):
        raise ValueError("1/r is improper for deg q > deg p")
    return PoleResidueForm(
        constant=constant,
        poles=tuple(poles),
        coefficients=tuple(coeffs),
        provenance="reciprocal",
        precision=r.precision,
    )


def source_function(r, provenance):
    """The function a pole-residue form of r is meant to reproduce."""
    if provenance == "bura":
        return lambda t: r(t) / t
    if provenance == "reciprocal":
        return lambda t: 1 / r(t)
    raise ValueError("unknown provenance %r" % (provenance,))


def reconstruction_error(form, r, npoints=1000, lo=1e-15):
    """Max relative deviation of ``form`` from its source on a log grid in [lo, 1]."""
    ctx = form.ctx
    src = source_function(r, form.provenance)
    a = ctx.log10(ctx.mpf(lo))
    worst = ctx.zero
    for i in range(npoints):
        t = ctx.power(10, a - a * i / (npoints - 1))
        exact = src(t)
        worst = max(worst, abs(form(t) - exact) / abs(exact))
    return worst


@dataclass(frozen=True)
class ErrorRootTable:
    beta: float
    k: int
    m: int
    roots: tuple

    def __len__(self):
        return len(self.roots)

    def as_floats(self):
        return [float(x) for x in self.roots]


def _bisect_log(ctx, err, lo, hi, iters=80):
    # err(lo) and err(hi) have opposite signs; lo > 0
    slo = err(lo) > 0
    a, b = ctx.ln(lo), ctx.ln(hi)
    for _ in range(iters):
        mid = (a + b) / 2
        if (err(ctx.exp(mid)) > 0) == slo:
            a = mid
        else:
            b = mid
    return ctx.exp((a + b) / 2)


def error_function_roots(r):
    """Sign changes of r(t) - t**beta between consecutive extreme points.

    Each root is bracketed by two extreme points of opposite sign and
    refined by bisection in log t to far better than 1e-6 relative.
    """
    ctx = r.ctx
    pts = r.extreme_points
    err = r.error_at
    roots = []
    for a, b in zip(pts, pts[1:]):
        ea, eb = err(a), err(b)
        if (ea > 0) == (eb > 0):
            raise CertificationError("no sign change between consecutive extreme points")
        if a == 0:
            # walk down from b until the sign matches the value at 0
            a = b / 16
            while (err(a) > 0) != (ea > 0):
                a /= 16
        roots.append(_bisect_log(ctx, err, a, b))
    return ErrorRootTable(beta=r.beta, k=r.k, m=r.m, roots=tuple(roots))
