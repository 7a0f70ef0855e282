import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsolve.exceptions import (
    CacheCorruptError,
    CacheMissError,
    CertificationError,
    ConvergenceError,
)
from fracsolve.rational import (
    RationalMinimax,
    bura_chain,
    bura_partial_fractions,
    cache_load,
    cache_store,
    certify,
    compute_bura,
    context,
    error_function_roots,
    evaluate,
    get_bura,
    reciprocal_partial_fractions,
    reconstruction_error,
)
from fracsolve.rational.cache import cache_filename
from fracsolve.rational.chebyshev import clenshaw, horner, to_monomial
from fracsolve.rational.remez import _degree_path


@pytest.fixture(scope="module")
def small():
    return compute_bura(0.6, 3, 3, precision=256)


@given(beta=st.floats(0.05, 0.95))
@settings(max_examples=5, deadline=None)
def test_best_constant_is_half(beta):
    r = compute_bura(beta, 0, 0, precision=128)
    assert r.E == r.ctx.mpf(1) / 2


def test_chebyshev_and_monomial_agree():
    ctx = context(256)
    coeffs = [ctx.mpf(c) for c in ("0.3", "-1.2", "2.5", "0.7")]
    t = ctx.mpf("0.37")
    mono = to_monomial(ctx, coeffs)
    assert abs(clenshaw(ctx, coeffs, t) - horner(ctx, mono, t)) < ctx.mpf(10) ** -70


def test_context_rejects_low_precision():
    with pytest.raises(ValueError):
        context(32)


def test_dual_basis_spot_value(small):
    ctx = small.ctx
    t = ctx.mpf("0.37")
    cheb = evaluate(small, t)
    mono = horner(ctx, small.numerator_monomial(), t) / horner(ctx, small.denominator_monomial(), t)
    assert abs(cheb - mono) <= 1e-12 * abs(cheb)
    assert evaluate(small, 0.37, mode="double") == pytest.approx(float(cheb), rel=1e-15)


def test_evaluate_domain(small):
    with pytest.raises(ValueError):
        evaluate(small, 1.5)
    with pytest.raises(ValueError):
        evaluate(small, -1e-3)
    with pytest.raises(ValueError):
        evaluate(small, 0.5, mode="quad")


# extreme errors are levelled to 1e-10 relative, so r(0) = E holds to that
LEVELLED = 1e-9


def test_value_at_zero_is_E(small):
    assert abs(evaluate(small, 0) - small.E) <= LEVELLED * small.E


def test_equioscillation(small):
    ctx = small.ctx
    pts = small.extreme_points
    assert len(pts) == small.k + small.m + 2
    assert pts[0] == 0 and pts[-1] == 1
    for i, t in enumerate(pts):
        e = small.error_at(t)
        assert (e > 0) == (i % 2 == 0)
        assert abs(abs(e) - small.E) <= ctx.mpf("1e-3") * small.E


def test_certify_rejects_broken_alternation(small):
    pts = list(small.extreme_points)
    pts[2] = (pts[1] + pts[2]) / 2
    bad = RationalMinimax(**{**small.__dict__, "extreme_points": tuple(pts)})
    with pytest.raises(CertificationError):
        certify(bad)


def test_precision_floor():
    with pytest.raises(ValueError, match="128"):
        compute_bura(0.5, 2, 2, precision=64)


@pytest.mark.parametrize("k, m", [(3, 5), (5, 3), (2, -1)])
def test_degree_path_rejects(k, m):
    with pytest.raises(ValueError):
        _degree_path(k, m)


def test_degree_path_alternates():
    assert _degree_path(3, 2) == [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2), (3, 2)]
    with pytest.raises(ValueError):
        compute_bura(0.5, 4, 1)


def test_chain_yields_every_level():
    levels = [(r.k, r.m) for r in bura_chain(0.5, 2, 1, precision=128)]
    assert levels == [(0, 0), (1, 0), (1, 1), (2, 1)]


def test_nonconvergence_reports_spread():
    with pytest.raises(ConvergenceError) as info:
        compute_bura(0.75, 3, 3, precision=128, auto_escalate=False, max_exchanges=1, tol=1e-30)
    assert info.value.spread is not None


def test_cache_round_trip(tmp_path):
    r = get_bura(0.75, 5, 5)
    path = cache_store(r, tmp_path)
    assert path.name == cache_filename(0.75, 5, 5, 512)
    back = cache_load(0.75, 5, 5, 512, tmp_path)
    assert back.E == r.E
    assert back.numerator == r.numerator and back.extreme_points == r.extreme_points
    rec = json.loads(path.read_text())
    assert all(isinstance(s, str) for s in rec["numerator"])


def test_cache_rejects_tampered_E(tmp_path):
    r = get_bura(0.75, 5, 5)
    path = cache_store(r, tmp_path)
    rec = json.loads(path.read_text())
    rec["E"] = str(float(rec["E"]) * 1.01)
    path.write_text(json.dumps(rec))
    with pytest.raises(CacheCorruptError):
        cache_load(0.75, 5, 5, 512, tmp_path)


def test_cache_rejects_garbage(tmp_path):
    (tmp_path / cache_filename(0.5, 2, 2, 512)).write_text("{not json")
    with pytest.raises(CacheCorruptError):
        cache_load(0.5, 2, 2, 512, tmp_path)


def test_cache_key_includes_precision(tmp_path):
    r = compute_bura(0.3, 2, 2, precision=256)
    cache_store(r, tmp_path)
    assert cache_load(0.3, 2, 2, 256, tmp_path).E == r.E
    with pytest.raises(CacheMissError):
        cache_load(0.3, 2, 2, 512, tmp_path)


def test_get_bura_stores_whole_chain(tmp_path):
    get_bura(0.4, 2, 2, precision=128, directory=tmp_path)
    names = sorted(p.name for p in tmp_path.glob("*.json"))
    assert names == sorted(cache_filename(0.4, k, m, 128) for k, m in _degree_path(2, 2))


def test_bura_form_examples():
    r = get_bura(0.75, 5, 5)
    form = bura_partial_fractions(r)
    assert len(form) == 6
    assert form.poles[0] == 0
    assert abs(form.coefficients[0] - evaluate(r, 0)) <= 1e-100 * r.E
    assert abs(form.coefficients[0] - r.E) <= LEVELLED * r.E
    assert all(d < 0 for d in form.poles[1:])
    assert all(c > 0 for c in form.coefficients)
    assert reconstruction_error(form, r) <= 1e-10


def test_bura_form_rejects_linear_function():
    # r(t) = t written as (1/2)(T_0 + T_1); not a diagonal approximant
    ctx = context(128)
    r = RationalMinimax(beta=0.5, k=1, m=0, precision=128, numerator=(ctx.mpf(0.5), ctx.mpf(0.5)),
                        denominator=(ctx.one,), error=ctx.zero, extreme_points=(), signs=())
    with pytest.raises(ValueError, match="\\(k, k\\)"):
        bura_partial_fractions(r)


def test_reciprocal_form_upper_diagonal():
    r = get_bura(0.5, 8, 7)
    form = reciprocal_partial_fractions(r)
    assert form.constant is None
    assert len(form) == 8
    assert all(z <= 0 for z in form.poles)
    assert reconstruction_error(form, r) <= 1e-10


def test_reciprocal_form_at_zero_is_inverse_E():
    # R-BURA for alpha = 0.75 uses the (8,8) approximant of t**0.75
    r = get_bura(0.75, 8, 8)
    form = reciprocal_partial_fractions(r)
    assert form.constant is not None and len(form) == 8
    assert abs(form(0) * r.E - 1) <= LEVELLED
    assert float(r.E) == pytest.approx(1.2288e-6, abs=0.5e-10)


@pytest.mark.parametrize("beta, k", [(0.25, 4), (0.5, 7), (0.75, 9)])
def test_monotone_concave(beta, k):
    # r(t) = b + sum cs_j/(t - d_j) with cs_j = c_j d_j < 0, d_j < 0
    r = get_bura(beta, k, k)
    ctx = r.ctx
    form = bura_partial_fractions(r)
    d = form.poles[1:]
    cs = [c * p for c, p in zip(form.coefficients[1:], d)]
    b = sum(form.coefficients)
    assert all(c < 0 for c in cs) and all(p < 0 for p in d)
    for i in range(1000):
        t = ctx.mpf(i) / 999
        assert abs(b + sum(c / (t - p) for c, p in zip(cs, d)) - r(t)) <= ctx.mpf(10) ** -25
        d1 = -sum(c / (t - p) ** 2 for c, p in zip(cs, d))
        d2 = 2 * sum(c / (t - p) ** 3 for c, p in zip(cs, d))
        assert d1 > 0 and d2 < 0


@pytest.mark.parametrize("beta", [0.25, 0.5, 0.75])
def test_error_hierarchy(beta):
    E = [get_bura(beta, k, m).E for k, m in _degree_path(9, 9)]
    assert all(a >= b for a, b in zip(E, E[1:]))


@pytest.mark.parametrize("beta, k, m", [(0.5, 5, 5), (0.75, 8, 7), (0.25, 6, 6)])
def test_error_roots(beta, k, m):
    r = get_bura(beta, k, m)
    table = error_function_roots(r)
    assert len(table) == k + m + 1
    assert r.E > 0 and abs(r.error_at(0) - r.E) <= LEVELLED * r.E
    xi = table.roots
    assert all(a < b for a, b in zip(xi, xi[1:]))
    for i, x in enumerate(xi):
        below, above = r.error_at(x * (1 - 1e-5)), r.error_at(x * (1 + 1e-5))
        assert (below > 0) == (i % 2 == 0)
        assert (above > 0) != (below > 0)
