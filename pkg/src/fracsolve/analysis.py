"""Error curves, bound calculators and the experiment engine.

Relative errors are measured as ||u_method - u_ref|| / ||f|| in the
2-norm and as the analogous ratio of max-norms; the per-mode formulas and
the theoretical bounds are stated in the same normalization.
"""

import configparser
import csv
import io
import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .discretization import (
    GridSpec,
    assemble_laplacian,
    eigenvalues,
    laplacian_inf_norm,
    rhs_generate,
)
from .exceptions import FracSolveError
from .rational import error_function_roots, get_bura
from .rational.chebyshev import context
from .rational.remez import DEFAULT_PRECISION
from .solvers import (
    ShiftedSolveConfig,
    build_quadrature,
    bura_sum,
    rbura_sum,
    solve_spectral,
)

log = logging.getLogger(__name__)

CSV_HEADER = ("method", "alpha", "k", "m", "h", "rhs", "l2_rel", "linf_rel", "systems", "seconds", "status")
REFERENCES = ("spectral-oracle", "quadrature-fine", "fine-mesh")
METHOD_KINDS = ("bura", "rbura", "quad")


def parse_number(text):
    """Reals written as 0.25, 1e-3, 1/3 or 2^-8."""
    text = text.strip()
    m = re.fullmatch(r"([0-9.]+)\^(-?[0-9]+)", text)
    if m:
        return float(m.group(1)) ** int(m.group(2))
    if "/" in text:
        return float(Fraction(text))
    return float(text)


def _fmt(x):
    return "%.6g" % x


@dataclass(frozen=True)
class MethodSpec:
    """One solver with its degree parameters.

    ``bura`` and ``rbura`` carry the approximant degrees (k, m); ``quad``
    carries either the degree parameter k or the step kprime.
    """

    kind: str
    k: float = None
    m: int = None
    kprime: float = None

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise ValueError("unknown method %r; choose from %s" % (self.kind, ", ".join(METHOD_KINDS)))
        if self.kind == "quad":
            if (self.k is None) == (self.kprime is None):
                raise ValueError("quadrature needs exactly one of k and k'")
        elif self.k is None or self.m is None:
            raise ValueError("%s needs degrees (k, m)" % self.kind)

    @classmethod
    def parse(cls, text):
        """``bura:7`` or ``bura:7,7``, ``rbura:8,7``, ``quad:7`` or ``quad:k'=1/3``."""
        kind, _, args = text.strip().partition(":")
        kind = kind.strip().lower()
        args = args.strip()
        if not args:
            raise ValueError("method %r is missing its degree parameters" % text)
        if kind == "quad":
            m = re.fullmatch(r"(k'|kp|kprime)\s*=\s*(.+)", args)
            if m:
                return cls("quad", kprime=parse_number(m.group(2)))
            k = parse_number(args)
            return cls("quad", k=int(k) if k == int(k) else k)
        parts = [int(p) for p in args.split(",")]
        if len(parts) == 1:
            parts = parts * 2
        if len(parts) != 2:
            raise ValueError("method %r needs one or two degrees" % text)
        return cls(kind, k=parts[0], m=parts[1])

    def label(self):
        if self.kind == "quad":
            if self.kprime is not None:
                return "quad(k'=%s)" % _fmt(self.kprime)
            return "quad(%s)" % _fmt(self.k)
        return "%s(%d,%d)" % (self.kind, self.k, self.m)

    def beta(self, alpha):
        """Exponent of the power function behind the method."""
        return 1 - alpha if self.kind == "bura" else alpha

    def resolve(self, alpha, precision=DEFAULT_PRECISION, directory=None):
        """The approximant or quadrature scheme for this method and alpha."""
        if self.kind == "quad":
            return build_quadrature(alpha, k=self.k, kprime=self.kprime)
        return get_bura(self.beta(alpha), self.k, self.m, precision, directory)

    def shifted_sum(self, A, alpha, obj=None, **kw):
        obj = self.resolve(alpha, **kw) if obj is None else obj
        if self.kind == "bura":
            return bura_sum(A, alpha, obj)
        if self.kind == "rbura":
            return rbura_sum(A, alpha, obj)
        return obj.as_sum()


def _as_spec(method):
    return method if isinstance(method, MethodSpec) else MethodSpec.parse(method)


def _mode_indices(grid, modes):
    if modes is None:
        modes = range(1, grid.n + 1) if grid.dimension == 1 else [
            (i, j) for j in range(1, grid.n + 1) for i in range(1, grid.n + 1)
        ]
    out = []
    for idx in modes:
        idx = (int(idx),) if np.isscalar(idx) else tuple(int(i) for i in idx)
        if len(idx) != grid.dimension or not all(1 <= i <= grid.n for i in idx):
            raise ValueError("mode %r is not valid on %s" % (idx, grid.label()))
        out.append(idx)
    return out


def eigenvalue_big(ctx, grid, index):
    """Oracle eigenvalue in working precision."""
    n1 = grid.n + 1
    return sum(4 * n1 * n1 * ctx.sin(i * ctx.pi / (2 * n1)) ** 2 for i in index)


def mode_error_big(kind, obj, alpha, C, lam):
    """Analytic relative error of a method for f equal to one eigenvector.

    ``obj`` is the approximant (bura, rbura) or quadrature scheme; C and lam
    must already be numbers of the approximant's context.
    """
    ctx = obj.ctx if kind != "quad" else context(DEFAULT_PRECISION)
    a = ctx.mpf(repr(float(alpha)))
    if kind == "quad":
        return abs(obj.evaluate_big(ctx, lam) - lam ** (-a))
    mu = lam / C
    rv = obj(mu)
    if kind == "bura":
        return C ** (-a) * abs(rv / mu - mu ** (-a))
    return C ** (-a) * abs(rv - mu**a) / (mu**a * rv)


def per_mode_error_curve(alpha, method, grid, modes=None, precision=DEFAULT_PRECISION, directory=None):
    """[(index, error)] of the analytic per-mode error, evaluated in BigReal."""
    spec = _as_spec(method)
    obj = spec.resolve(alpha, precision, directory)
    ctx = obj.ctx if spec.kind != "quad" else context(DEFAULT_PRECISION)
    C = ctx.mpf(laplacian_inf_norm(grid))
    out = []
    for idx in _mode_indices(grid, modes):
        lam = eigenvalue_big(ctx, grid, idx)
        err = mode_error_big(spec.kind, obj, alpha, C, lam)
        out.append((idx[0] if grid.dimension == 1 else idx, float(err)))
    return out


@dataclass(frozen=True)
class WindowClassification:
    """Where mu_1 sits on the ladder of roots of r(t) - t**alpha.

    ``kind`` is ``degenerate`` (mu_1 <= xi_1), ``valid`` (error nonnegative,
    mu_1 in [xi_2i, xi_2i+1] or past the last root with a positive tail) or
    ``gap`` (error negative). ``index`` i means xi_i < mu_1 <= xi_i+1.
    """

    kind: str
    index: int
    mu1: float
    lower: float
    upper: float
    sign: int
    nearest_root: float
    relative_distance: float

    @property
    def near_boundary(self):
        return self.relative_distance < 0.1

    @property
    def bound(self):
        return {"degenerate": "degenerate", "valid": "window", "gap": "general"}[self.kind]


def validate_mu1_window(alpha, r, grid, roots=None):
    """Classify mu_1 = lambda_1/C by the actual sign of the error there."""
    if abs(r.beta - alpha) > 1e-12:
        raise ValueError("need an approximant of t**%g, got t**%g" % (alpha, r.beta))
    ctx = r.ctx
    roots = roots if roots is not None else error_function_roots(r)
    xi = list(roots.roots)
    C = ctx.mpf(laplacian_inf_norm(grid))
    mu1 = eigenvalue_big(ctx, grid, (1,) * grid.dimension) / C
    eps = r.error_at(mu1)
    sign = 1 if eps >= 0 else -1
    i = sum(1 for x in xi if x < mu1)
    lower = xi[i - 1] if i > 0 else ctx.zero
    upper = xi[i] if i < len(xi) else ctx.one
    if i == 0:
        if sign < 0:
            raise FracSolveError("error is negative below the first root; approximant inconsistent")
        kind = "degenerate"
    else:
        kind = "valid" if sign > 0 else "gap"
    nearest = min(xi, key=lambda x: abs(ctx.ln(mu1 / x))) if xi else ctx.zero
    dist = abs(mu1 - nearest) / nearest if xi else math.inf
    return WindowClassification(
        kind=kind,
        index=i,
        mu1=float(mu1),
        lower=float(lower),
        upper=float(upper),
        sign=sign,
        nearest_root=float(nearest),
        relative_distance=float(dist),
    )


@dataclass(frozen=True)
class BoundSummary:
    alpha: float
    k: int
    rbura_degrees: tuple
    C: float
    lam1: float
    mu1: float
    E_bura: float
    E_rbura: float
    bura_bound: float
    rbura_window_bound: float
    rbura_degenerate_bound: float
    rbura_general_bound: float
    bura_asymptotic: float
    rbura_asymptotic: float
    quad_asymptotic: float
    window: WindowClassification

    @property
    def rbura_bound(self):
        """The R-BURA bound that applies to the classified window."""
        return {
            "degenerate": self.rbura_degenerate_bound,
            "window": self.rbura_window_bound,
            "general": self.rbura_general_bound,
        }[self.window.bound]

    def as_dict(self):
        out = {k: v for k, v in self.__dict__.items() if k != "window"}
        out["window"] = self.window.kind
        out["window_index"] = self.window.index
        out["rbura_bound"] = self.rbura_bound
        return out


def bound_summary(alpha, k, grid, rbura_degrees=None, precision=DEFAULT_PRECISION, directory=None):
    """Theoretical error bounds for (k,k)-BURA, R-BURA and the quadrature.

    The asymptotic entries are the limit constants of the error laws, i.e.
    the error predicted for degree k is the constant times
    exp(-2 pi sqrt((1-alpha) k)), exp(-2 pi sqrt(alpha k)) and
    exp(-pi sqrt(alpha (1-alpha) k)) respectively.
    """
    rk, rm = rbura_degrees or (k, k)
    rb = get_bura(1 - alpha, k, k, precision, directory)
    rr = get_bura(alpha, rk, rm, precision, directory)
    ctx = rr.ctx
    a = ctx.mpf(repr(float(alpha)))
    C = ctx.mpf(laplacian_inf_norm(grid))
    lam1 = eigenvalue_big(ctx, grid, (1,) * grid.dimension)
    mu1 = lam1 / C
    Eb, Er = ctx.convert(rb.E), rr.E
    s = ctx.sin(ctx.pi * a)
    return BoundSummary(
        alpha=float(alpha),
        k=k,
        rbura_degrees=(rk, rm),
        C=float(C),
        lam1=float(lam1),
        mu1=float(mu1),
        E_bura=float(Eb),
        E_rbura=float(Er),
        bura_bound=float(C ** (1 - a) * Eb / lam1),
        rbura_window_bound=float(C**a * Er / lam1 ** (2 * a)),
        rbura_degenerate_bound=float(lam1 ** (-a)),
        rbura_general_bound=float(Er / (lam1**a * rr(mu1))),
        bura_asymptotic=float(4 ** (2 - a) * C ** (1 - a) * s / lam1),
        rbura_asymptotic=float(4 ** (2 - a) * C**a * s / lam1 ** (2 * a)),
        quad_asymptotic=float(2 * s / ctx.pi * (1 / a + 1 / ((1 - a) * lam1))),
        window=validate_mu1_window(alpha, rr, grid),
    )


def quadrature_bound(scheme, grid):
    """max_i |Q(lam_i) - lam_i**-alpha| over the whole oracle spectrum."""
    lam = eigenvalues(grid).ravel()
    return float(np.max(np.abs(scheme(lam) - lam ** -scheme.alpha)))


def parse_grid(text):
    """``2d:255``, ``2d:n=255``, ``2d:h=2^-8`` or ``1d:h=1e-3``."""
    m = re.fullmatch(r"\s*([12])d?\s*:\s*(?:(n|h)\s*=\s*)?(.+?)\s*", text)
    if not m:
        raise ValueError("cannot parse grid %r (expected e.g. 2d:h=2^-8 or 1d:999)" % text)
    dim = int(m.group(1))
    if m.group(2) == "h":
        return GridSpec.from_h(dim, parse_number(m.group(3)))
    return GridSpec(dim, int(m.group(3)))


def parse_rhs(text):
    """(kind, index) from ``checkerboard``, ``cosine``, ``eigen:3`` or ``eigen:1,2``."""
    kind, _, arg = text.strip().partition(":")
    if kind == "eigen":
        if not arg:
            raise ValueError("eigen right-hand side needs a mode index, e.g. eigen:1")
        idx = tuple(int(i) for i in arg.split(","))
        return kind, idx
    return kind, None


def rhs_label(kind, index):
    if index is None:
        return kind
    return "eigen:" + ",".join(str(i) for i in index)


@dataclass(frozen=True)
class ExperimentConfig:
    """Experiment matrix: every alpha x grid x rhs x method combination."""

    alphas: tuple
    methods: tuple
    grids: tuple
    rhs: tuple = ("checkerboard",)
    solver: ShiftedSolveConfig = field(default_factory=ShiftedSolveConfig)
    output: str = None
    name: str = "experiment"
    reference: str = "spectral-oracle"
    reference_h: float = 2.0**-12
    precision: int = DEFAULT_PRECISION
    cache_dir: str = None

    def __post_init__(self):
        if self.reference not in REFERENCES:
            raise ValueError("reference must be one of %s" % (REFERENCES,))
        for a in self.alphas:
            if not 0 < a < 1:
                raise ValueError("alpha must lie in (0, 1), got %r" % (a,))
        if not self.methods or not self.grids or not self.alphas:
            raise ValueError("experiment needs at least one alpha, method and grid")


KEYS = {
    "alpha", "methods", "grids", "rhs", "reference", "reference_h", "output", "name",
    "precision", "cache_dir", "tol", "maxiter", "preconditioner", "backend", "workers",
}


def load_config(path_or_text):
    """ExperimentConfig from flat ``key = value`` text.

    Lists are whitespace separated. Keys: alpha, methods, grids, rhs,
    reference, reference_h, output, name, precision, cache_dir, tol,
    maxiter, preconditioner, backend, workers. Lines starting with # are
    comments.
    """
    text = path_or_text
    p = Path(str(path_or_text))
    if "\n" not in str(path_or_text) and p.is_file():
        text = p.read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",))
    parser.optionxform = str
    parser.read_string("[experiment]\n" + text)
    kv = dict(parser["experiment"])
    unknown = set(kv) - KEYS
    if unknown:
        raise ValueError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    for req in ("alpha", "methods", "grids"):
        if req not in kv:
            raise ValueError("config is missing %r" % req)
    solver_kw = {}
    if "tol" in kv:
        solver_kw["tol"] = float(kv["tol"])
    if kv.get("maxiter"):
        solver_kw["maxiter"] = int(kv["maxiter"])
    for key in ("preconditioner", "backend"):
        if key in kv:
            solver_kw[key] = kv[key].strip()
    if "workers" in kv:
        solver_kw["workers"] = int(kv["workers"])
    cfg = ExperimentConfig(
        alphas=tuple(parse_number(a) for a in kv["alpha"].split()),
        methods=tuple(MethodSpec.parse(m) for m in kv["methods"].split()),
        grids=tuple(parse_grid(g) for g in kv["grids"].split()),
        rhs=tuple(kv.get("rhs", "checkerboard").split()),
        solver=ShiftedSolveConfig(**solver_kw),
        output=kv.get("output") or None,
        name=kv.get("name", "experiment").strip(),
        reference=kv.get("reference", "spectral-oracle").strip(),
        reference_h=parse_number(kv["reference_h"]) if "reference_h" in kv else 2.0**-12,
        precision=int(kv.get("precision", DEFAULT_PRECISION)),
        cache_dir=kv.get("cache_dir") or None,
    )
    for r in cfg.rhs:
        parse_rhs(r)
    return cfg


@dataclass(frozen=True)
class ReportRow:
    method: str
    alpha: float
    k: object
    m: object
    h: float
    rhs: str
    l2_rel: float
    linf_rel: float
    systems: int
    seconds: float
    status: str = "ok"

    def csv_fields(self):
        def num(x):
            return "" if x is None or (isinstance(x, float) and not math.isfinite(x)) else _fmt(x)

        return [
            self.method,
            _fmt(self.alpha),
            num(self.k),
            num(self.m),
            _fmt(self.h),
            self.rhs,
            num(self.l2_rel),
            num(self.linf_rel),
            "" if self.systems is None else str(self.systems),
            num(self.seconds),
            self.status,
        ]


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow(row.csv_fields())
    return buf.getvalue()


def csv_data_section(text, drop=("seconds",)):
    """Data rows of an experiment CSV without the wall-clock column.

    Used for determinism checks: everything but the measured time must be
    reproducible byte for byte.
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    keep = [i for i, name in enumerate(header) if name not in drop]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in reader:
        w.writerow([row[i] for i in keep])
    return buf.getvalue()


def _rhs_vector(grid, kind, index, h=None):
    return rhs_generate(grid, kind, index=index, h=h)


def reference_solution(grid, f, alpha, reference="spectral-oracle", rhs=None, reference_h=2.0**-12):
    """The solution methods are compared against.

    ``spectral-oracle`` is the exact discrete solution on the same mesh,
    ``quadrature-fine`` the k'=1/3 quadrature on the same mesh, and
    ``fine-mesh`` the exact discrete solution on a nested finer mesh
    (``reference_h``) read off at the coarse nodes, which needs an
    analytic ``rhs`` kind.
    """
    if reference == "spectral-oracle":
        return solve_spectral(grid, f, alpha)
    if reference == "quadrature-fine":
        A = assemble_laplacian(grid)
        scheme = build_quadrature(alpha, kprime=1.0 / 3.0)
        return scheme.as_sum().apply(A, f, ShiftedSolveConfig(backend="dst")).solution
    if reference != "fine-mesh":
        raise ValueError("unknown reference %r" % (reference,))
    kind, index = parse_rhs(rhs) if rhs is not None else (None, None)
    if kind not in ("checkerboard", "cosine", "cosine-nohup"):
        raise ValueError("fine-mesh reference needs an analytic rhs kind, got %r" % (rhs,))
    fine = GridSpec.from_h(grid.dimension, reference_h)
    step, rem = divmod(fine.n + 1, grid.n + 1)
    if rem or step < 1:
        raise ValueError("reference mesh h=%g is not nested in h=%g" % (reference_h, grid.h))
    ff = _rhs_vector(fine, kind, None, h=grid.h)
    uf = solve_spectral(fine, ff, alpha)
    if grid.dimension == 1:
        return uf[step - 1 :: step].copy()
    return uf.reshape(fine.n, fine.n)[step - 1 :: step, step - 1 :: step].ravel()


def relative_errors(u, ref, f):
    d = u - ref
    return (
        float(np.linalg.norm(d) / np.linalg.norm(f)),
        float(np.max(np.abs(d)) / np.max(np.abs(f))),
    )


def _method_columns(spec, alpha):
    if spec.kind == "quad":
        if spec.k is None:
            return spec.kind, build_quadrature(alpha, kprime=spec.kprime).k, None
        return spec.kind, spec.k, None
    return spec.kind, spec.k, spec.m


def run_experiment(config, write=True):
    """Run the whole matrix; returns ReportRows (and writes CSV if configured).

    Rows come out in config order: alpha, grid, rhs, method. A failing row
    records its error in ``status`` and the run continues.
    """
    rows = []
    approx = {}
    for alpha in config.alphas:
        for grid in config.grids:
            A = assemble_laplacian(grid)
            for rhs in config.rhs:
                kind, index = parse_rhs(rhs)
                f = _rhs_vector(grid, kind, index)
                try:
                    ref = reference_solution(grid, f, alpha, config.reference, rhs, config.reference_h)
                except (ValueError, MemoryError) as exc:
                    ref = exc
                for spec in config.methods:
                    name, k, m = _method_columns(spec, alpha)
                    base = dict(method=name, alpha=alpha, k=k, m=m, h=grid.h, rhs=rhs_label(kind, index))
                    try:
                        if isinstance(ref, Exception):
                            raise ref
                        key = (spec, alpha)
                        if key not in approx:
                            approx[key] = spec.resolve(alpha, config.precision, config.cache_dir)
                        res = spec.shifted_sum(A, alpha, approx[key]).apply(A, f, config.solver, spec.label())
                        l2, linf = relative_errors(res.solution, ref, f)
                        rows.append(ReportRow(l2_rel=l2, linf_rel=linf, systems=res.systems_solved,
                                              seconds=res.seconds, **base))
                    except (FracSolveError, ValueError, ArithmeticError, MemoryError) as exc:
                        log.warning("row %s alpha=%g %s failed: %s", spec.label(), alpha, grid.label(), exc)
                        msg = "error: %s: %s" % (type(exc).__name__, exc)
                        rows.append(ReportRow(l2_rel=None, linf_rel=None, systems=None, seconds=None,
                                              status=msg, **base))
    if write and config.output:
        out = Path(config.output)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / (config.name + ".csv"), "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv(rows))
    return rows


@dataclass(frozen=True)
class CrossoverResult:
    alpha: float
    variant: str
    rhs: str
    h: float
    k: int
    quad_systems: int
    variant_systems: int
    variant_error: float
    quad_error: float
    capped: bool
    scanned: tuple = field(default=(), repr=False)

    def describe(self):
        if self.capped:
            return "%s (%s, h=%g, alpha=%g): no quadrature k <= %d beats error %.4g" % (
                self.variant, self.rhs, self.h, self.alpha, self.scanned[-1][0], self.variant_error)
        return "%s (%s, h=%g, alpha=%g): k=%d quadrature (%d systems vs %d), errors %.4g < %.4g" % (
            self.variant, self.rhs, self.h, self.alpha, self.k, self.quad_systems,
            self.variant_systems, self.quad_error, self.variant_error)


def efficiency_crossover(alpha, variant, grid, rhs="checkerboard", reference="spectral-oracle",
                         cfg=None, k_max=80, precision=DEFAULT_PRECISION, directory=None,
                         reference_h=2.0**-12):
    """Smallest quadrature k whose l2 error drops below the variant's."""
    spec = _as_spec(variant)
    if spec.kind == "quad":
        raise ValueError("the variant must be a BURA-type method")
    cfg = cfg or ShiftedSolveConfig(backend="dst")
    A = assemble_laplacian(grid)
    kind, index = parse_rhs(rhs)
    f = _rhs_vector(grid, kind, index)
    ref = reference_solution(grid, f, alpha, reference, rhs, reference_h)
    vres = spec.shifted_sum(A, alpha, precision=precision, directory=directory).apply(A, f, cfg)
    verr = relative_errors(vres.solution, ref, f)[0]
    scanned = []
    for k in range(1, k_max + 1):
        scheme = build_quadrature(alpha, k=k)
        q = scheme.as_sum().apply(A, f, cfg)
        qerr = relative_errors(q.solution, ref, f)[0]
        scanned.append((k, qerr))
        if qerr < verr:
            return CrossoverResult(alpha, spec.label(), rhs, grid.h, k, q.systems_solved,
                                   vres.systems_solved, verr, qerr, False, tuple(scanned))
    return CrossoverResult(alpha, spec.label(), rhs, grid.h, None, None, vres.systems_solved,
                           verr, None, True, tuple(scanned))


__all__ = [
    "BoundSummary",
    "CSV_HEADER",
    "CrossoverResult",
    "ExperimentConfig",
    "MethodSpec",
    "ReportRow",
    "WindowClassification",
    "bound_summary",
    "csv_data_section",
    "efficiency_crossover",
    "load_config",
    "parse_grid",
    "per_mode_error_curve",
    "quadrature_bound",
    "reference_solution",
    "relative_errors",
    "rows_to_csv",
    "run_experiment",
    "validate_mu1_window",
]
