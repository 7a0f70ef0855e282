"""On-disk store of certified approximants.

One JSON file per (beta, k, m, precision) with every number written as a
decimal string carrying enough digits to round-trip at the stored
precision. Loading re-checks equioscillation before anything is returned.
Lookups go to the user cache first (``$FRACSOLVE_CACHE_DIR``, default
``~/.cache/fracsolve``) and then to the tables shipped with the package.
"""

import json
import logging
import math
import os
import tempfile
from pathlib import Path

from ..exceptions import (
    CacheCorruptError,
    CacheMissError,
    CertificationError,
    ConvergenceError,
    FracSolveError,
    PrecisionExhaustedError,
)
from .chebyshev import context
from .poles import bura_partial_fractions, reciprocal_partial_fractions
from .remez import DEFAULT_PRECISION, RationalMinimax, bura_chain, certify, compute_bura

log = logging.getLogger(__name__)

FORMAT = "fracsolve-bura/1"
CACHE_ENV = "FRACSOLVE_CACHE_DIR"
BUNDLED_DIR = Path(__file__).resolve().parent.parent / "data" / "bura"


def cache_dir():
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "fracsolve"


def cache_filename(beta, k, m, precision):
    return "bura_%s_%d_%d_%d.json" % (repr(float(beta)), k, m, precision)


def _digits(precision):
    return int(math.ceil(precision * math.log10(2))) + 8


def _dump(ctx, x, digits):
    return ctx.nstr(ctx.convert(x), digits, strip_zeros=False, min_fixed=1, max_fixed=0)


def _form_record(ctx, form, digits):
    return {
        "constant": None if form.constant is None else _dump(ctx, form.constant, digits),
        "poles": [_dump(ctx, d, digits) for d in form.poles],
        "residues": [_dump(ctx, c, digits) for c in form.coefficients],
    }


def to_record(r):
    ctx = r.ctx
    digits = _digits(r.precision)
    rec = {
        "format": FORMAT,
        "beta": repr(float(r.beta)),
        "k": r.k,
        "m": r.m,
        "precision": r.precision,
        "E": _dump(ctx, r.error, digits),
        "numerator": [_dump(ctx, c, digits) for c in r.numerator],
        "denominator": [_dump(ctx, c, digits) for c in r.denominator],
        "extreme_points": [_dump(ctx, t, digits) for t in r.extreme_points],
        "signs": list(r.signs),
        "iterations": r.iterations,
        "pole_forms": {},
    }
    builders = {"reciprocal": reciprocal_partial_fractions}
    if r.k == r.m:
        builders["bura"] = bura_partial_fractions
    for name, build in sorted(builders.items()):
        try:
            rec["pole_forms"][name] = _form_record(ctx, build(r), digits)
        except (FracSolveError, ValueError) as exc:
            log.debug("no %s form for (%s,%d,%d): %s", name, r.beta, r.k, r.m, exc)
    return rec


def from_record(rec):
    """Rebuild and re-verify an approximant; raises CacheCorruptError."""
    try:
        if rec.get("format") != FORMAT:
            raise CacheCorruptError("unknown cache format %r" % rec.get("format"))
        precision = int(rec["precision"])
        ctx = context(precision)
        r = RationalMinimax(
            beta=float(rec["beta"]),
            k=int(rec["k"]),
            m=int(rec["m"]),
            precision=precision,
            numerator=tuple(ctx.mpf(s) for s in rec["numerator"]),
            denominator=tuple(ctx.mpf(s) for s in rec["denominator"]),
            error=ctx.mpf(rec["E"]),
            extreme_points=tuple(ctx.mpf(s) for s in rec["extreme_points"]),
            signs=tuple(int(s) for s in rec["signs"]),
            iterations=int(rec.get("iterations", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CacheCorruptError("malformed cache record: %s" % exc) from exc
    verify_record(r)
    return r


def verify_record(r):
    """Equioscillation checks plus agreement of the stored E with the data."""
    ctx = r.ctx
    try:
        certify(r)
    except CertificationError as exc:
        raise CacheCorruptError("stored approximant fails certification: %s" % exc) from exc
    errs = [r.error_at(t) for t in r.extreme_points]
    if tuple(1 if e > 0 else -1 for e in errs) != tuple(r.signs):
        raise CacheCorruptError("stored signs disagree with the approximant")
    top = max(abs(e) for e in errs)
    if abs(top - r.error) > ctx.mpf("1e-12") * top:
        raise CacheCorruptError(
            "stored E=%s but the extreme points give %s" % (ctx.nstr(r.error, 12), ctx.nstr(top, 12))
        )
    return r


def cache_store(r, directory=None):
    """Write ``r`` atomically (temp file + rename) and return the path."""
    directory = Path(directory) if directory is not None else cache_dir()
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / cache_filename(r.beta, r.k, r.m, r.precision)
    payload = json.dumps(to_record(r), indent=1, sort_keys=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _candidates(beta, k, m, precision, directory):
    name = cache_filename(beta, k, m, precision)
    if directory is not None:
        return [Path(directory) / name]
    return [cache_dir() / name, BUNDLED_DIR / name]


def cache_load(beta, k, m, precision=DEFAULT_PRECISION, directory=None):
    for path in _candidates(beta, k, m, precision, directory):
        if path.is_file():
            with open(path, encoding="utf-8") as fh:
                try:
                    rec = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise CacheCorruptError("%s is not valid JSON: %s" % (path, exc)) from exc
            r = from_record(rec)
            if (r.beta, r.k, r.m, r.precision) != (float(beta), k, m, precision):
                raise CacheCorruptError("%s holds a different key" % path)
            return r
    raise CacheMissError("no cached approximant for beta=%r (%d,%d) at %d bits" % (beta, k, m, precision))


def get_bura(beta, k, m, precision=DEFAULT_PRECISION, directory=None, store=True):
    """Load from cache, or compute the whole degree chain and store each level."""
    try:
        return cache_load(beta, k, m, precision, directory)
    except CacheMissError:
        pass
    log.info("computing BURA beta=%r (%d,%d) at %d bits", beta, k, m, precision)
    try:
        r = None
        for r in bura_chain(beta, k, m, precision):
            if store:
                _store_quietly(certify(r), directory)
        return certify(r)
    except (ConvergenceError, PrecisionExhaustedError) as exc:
        # a level failed at this precision; retry the target alone with doubling
        log.info("chain failed (%s); escalating precision", exc)
    r = compute_bura(beta, k, m, precision)
    if store:
        _store_quietly(r, directory)
    return r


def _store_quietly(r, directory):
    try:
        cache_store(r, directory)
    except OSError as exc:
        log.warning("could not write cache entry: %s", exc)
