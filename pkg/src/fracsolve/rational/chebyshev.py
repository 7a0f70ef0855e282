"""Shifted Chebyshev polynomials on [0, 1] and monomial helpers.

All routines take an mpmath context so that callers control the working
precision; nothing here touches the global ``mpmath.mp`` state.
"""

from functools import lru_cache

import mpmath


@lru_cache(maxsize=None)
def context(precision):
    """Return a private mpmath context running at ``precision`` bits.

    Contexts are shared per precision and never mutated after creation, so
    they can be used from several threads at once.
    """
    if precision < 53:
        raise ValueError("precision must be at least 53 bits, got %d" % precision)
    ctx = mpmath.MPContext()
    ctx.prec = precision
    return ctx


def cheb_row(ctx, t, degree):
    """Values T_0(2t-1), ..., T_degree(2t-1)."""
    x = 2 * ctx.convert(t) - 1
    row = [ctx.one, x]
    for _ in range(2, degree + 1):
        row.append(2 * x * row[-1] - row[-2])
    return row[:degree + 1]


def clenshaw(ctx, coeffs, t):
    """Evaluate sum_j coeffs[j] T_j(2t-1) by the Clenshaw recurrence."""
    x = 2 * ctx.convert(t) - 1
    b1 = b2 = ctx.zero
    for c in reversed(coeffs[1:]):
        b1, b2 = 2 * x * b1 - b2 + c, b1
    return x * b1 - b2 + coeffs[0]


@lru_cache(maxsize=64)
def _shifted_cheb_monomials(degree):
    # integer monomial coefficients (lowest first) of T_j(2t-1), j = 0..degree
    polys = [[1], [-1, 2]]
    for _ in range(2, degree + 1):
        a, b = polys[-1], polys[-2]
        nxt = [0] * (len(a) + 1)
        for i, c in enumerate(a):
            nxt[i] -= 2 * c
            nxt[i + 1] += 4 * c
        for i, c in enumerate(b):
            nxt[i] -= c
        polys.append(nxt)
    return tuple(tuple(p) for p in polys[:degree + 1])


def to_monomial(ctx, coeffs):
    """Convert shifted-Chebyshev coefficients to monomial ones (lowest first).

    The basis change is exact in integers; only the final products are
    rounded at the context precision.
    """
    degree = len(coeffs) - 1
    basis = _shifted_cheb_monomials(max(degree, 1))
    out = [ctx.zero] * (degree + 1)
    for j, c in enumerate(coeffs):
        for i, b in enumerate(basis[j]):
            if b:
                out[i] += c * b
    return out


def horner(ctx, mono, t):
    """Evaluate a monomial polynomial (lowest coefficient first) at t."""
    acc = ctx.zero
    for c in reversed(mono):
        acc = acc * t + c
    return acc


def derivative(mono):
    return [i * c for i, c in enumerate(mono)][1:]


def leading_monomial(ctx, coeffs):
    """Leading monomial coefficient of a shifted-Chebyshev series."""
    degree = len(coeffs) - 1
    if degree == 0:
        return ctx.convert(coeffs[0])
    return coeffs[-1] * ctx.mpf(2) ** (2 * degree - 1)


def polynomial_roots(ctx, mono):
    """All complex roots of a monomial polynomial (lowest coefficient first).

    Trailing zero coefficients are an error: the caller must know the exact
    degree. Roots are computed with doubled working precision and returned as
    context numbers (mpf for real roots, mpc otherwise).
    """
    if mono[-1] == 0:
        raise ValueError("leading coefficient vanishes")
    if len(mono) == 1:
        return []
    high_first = list(reversed(mono))
    roots = ctx.polyroots(high_first, maxsteps=800, extraprec=ctx.prec, cleanup=True)
    return list(roots)
