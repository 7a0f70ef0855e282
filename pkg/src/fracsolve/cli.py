"""Command line entry point: ``fracsolve <command>``."""

import csv
import json
import logging
import sys
from dataclasses import replace

import click
import numpy as np

from . import analysis
from .discretization import assemble_laplacian, rhs_generate, write_grid_function
from .exceptions import FracSolveError
from .rational import DEFAULT_PRECISION, cache_store, compute_bura, error_function_roots, get_bura
from .solvers import ShiftedSolveConfig


def _solver_options(fn):
    fn = click.option("--workers", type=int, default=1, show_default=True, help="Threads for the shifted solves.")(fn)
    fn = click.option("--tol", type=float, default=1e-12, show_default=True, help="Relative residual tolerance.")(fn)
    fn = click.option("--backend", type=click.Choice(["cg", "direct", "dst"]), default="cg", show_default=True)(fn)
    return fn


def _fail(exc):
    raise click.ClickException("%s: %s" % (type(exc).__name__, exc))


@click.group()
@click.option("-v", "--verbose", count=True, help="Log progress (-vv for debug).")
def main(verbose):
    """Fractional diffusion solvers based on best uniform rational approximation."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.group()
def bura():
    """Compute and inspect best uniform rational approximants."""


@bura.command("compute")
@click.option("--alpha", type=float, help="Fractional power; the approximated function is t**(1-alpha).")
@click.option("--beta", type=float, help="Approximate t**beta directly (overrides --alpha).")
@click.option("--k", "k", type=int, required=True, help="Numerator degree.")
@click.option("--m", "m", type=int, help="Denominator degree (default k).")
@click.option("--precision", type=int, default=DEFAULT_PRECISION, show_default=True, help="Working precision in bits.")
@click.option("--store/--no-store", default=True, show_default=True, help="Write the result to the cache.")
@click.option("--json", "as_json", is_flag=True, help="Print a JSON summary.")
def bura_compute(alpha, beta, k, m, precision, store, as_json):
    """Run the Remez exchange for one (k, m) and print E."""
    if beta is None:
        if alpha is None:
            raise click.UsageError("give --alpha or --beta")
        beta = 1 - alpha
    m = k if m is None else m
    try:
        r = compute_bura(beta, k, m, precision)
        if store:
            cache_store(r)
    except (FracSolveError, ValueError) as exc:
        _fail(exc)
    ctx = r.ctx
    if as_json:
        click.echo(json.dumps({
            "beta": r.beta, "k": r.k, "m": r.m, "precision": r.precision,
            "E": ctx.nstr(r.E, 20), "extreme_points": [ctx.nstr(t, 12) for t in r.extreme_points],
            "iterations": r.iterations,
        }, indent=1))
        return
    click.echo("t**%g  (%d,%d)  %d bits" % (r.beta, r.k, r.m, r.precision))
    click.echo("E = %s" % ctx.nstr(r.E, 12))
    click.echo("extreme points: %d, smallest nonzero %s" % (len(r.extreme_points), ctx.nstr(r.extreme_points[1], 6)))


@bura.command("roots")
@click.option("--alpha", type=float, required=True, help="Fractional power; the approximated function is t**alpha.")
@click.option("--k", "k", type=int, required=True)
@click.option("--m", "m", type=int, help="Denominator degree (default k).")
@click.option("--precision", type=int, default=DEFAULT_PRECISION, show_default=True)
def bura_roots(alpha, k, m, precision):
    """Roots xi_i of r(t) - t**alpha for the R-BURA approximant."""
    m = k if m is None else m
    try:
        r = get_bura(alpha, k, m, precision)
        table = error_function_roots(r)
    except (FracSolveError, ValueError) as exc:
        _fail(exc)
    for i, xi in enumerate(table.roots, 1):
        click.echo("xi_%d = %s" % (i, r.ctx.nstr(xi, 6)))


@main.command()
@click.option("--method", type=click.Choice(["bura", "rbura", "quad"]), required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--k", "k", type=str, required=True, help="Degree; for quad also k'=<step>.")
@click.option("--m", "m", type=int, help="Second degree for bura/rbura (default k).")
@click.option("--grid", "grid_text", default="2d:h=2^-6", show_default=True, help="e.g. 2d:h=2^-8 or 1d:999.")
@click.option("--rhs", default="checkerboard", show_default=True, help="checkerboard, cosine, cosine-nohup, eigen:i[,j].")
@click.option("--reference", type=click.Choice(analysis.REFERENCES), default="spectral-oracle", show_default=True)
@click.option("--output", type=click.Path(dir_okay=False), help="Write the solution as CSV.")
@_solver_options
def solve(method, alpha, k, m, grid_text, rhs, reference, output, backend, tol, workers):
    """Solve A**alpha u = f once and report the error against a reference."""
    try:
        text = "%s:%s" % (method, k) if m is None or method == "quad" else "%s:%s,%d" % (method, k, m)
        spec = analysis.MethodSpec.parse(text)
        grid = analysis.parse_grid(grid_text)
        kind, index = analysis.parse_rhs(rhs)
        f = rhs_generate(grid, kind, index=index)
        A = assemble_laplacian(grid)
        cfg = ShiftedSolveConfig(tol=tol, backend=backend, workers=workers)
        res = spec.shifted_sum(A, alpha).apply(A, f, cfg, spec.label())
        ref = analysis.reference_solution(grid, f, alpha, reference, rhs)
        l2, linf = analysis.relative_errors(res.solution, ref, f)
    except (FracSolveError, ValueError) as exc:
        _fail(exc)
    click.echo("%s alpha=%g %s rhs=%s" % (spec.label(), alpha, grid.label(), rhs))
    click.echo("systems=%d  iterations=%s  seconds=%.3g" % (res.systems_solved, list(res.iterations), res.seconds))
    click.echo("l2_rel=%.6g  linf_rel=%.6g  (reference: %s)" % (l2, linf, reference))
    if output:
        write_grid_function(grid, res.solution, output)


@main.command()
@click.option("--alpha", type=float, required=True)
@click.option("--h", "h", type=str, required=True, help="Mesh size of the 1-D grid, e.g. 1e-3.")
@click.option("--methods", required=True, help='Space separated, e.g. "bura:7 rbura:8,8 quad:7".')
@click.option("--modes", type=int, help="Only the first N modes.")
@click.option("--output", type=click.Path(dir_okay=False), help="CSV file (default stdout).")
def curve(alpha, h, methods, modes, output):
    """Per-mode error of each method on the 1-D Laplacian."""
    try:
        grid = analysis.parse_grid("1d:h=%s" % h)
        specs = [analysis.MethodSpec.parse(t) for t in methods.split()]
        idx = list(range(1, (modes or grid.n) + 1))
        curves = [analysis.per_mode_error_curve(alpha, s, grid, idx) for s in specs]
    except (FracSolveError, ValueError) as exc:
        _fail(exc)
    fh = open(output, "w", newline="", encoding="utf-8") if output else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mode"] + [s.label() for s in specs])
        for row in zip(idx, *curves):
            w.writerow([row[0]] + ["%.6g" % e for _, e in row[1:]])
    finally:
        if output:
            fh.close()


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--workers", type=int, help="Override the configured worker count.")
def experiment(config_path, workers):
    """Run an experiment matrix from a key = value config file."""
    try:
        cfg = analysis.load_config(config_path)
        if workers is not None:
            cfg = replace(cfg, solver=replace(cfg.solver, workers=workers))
        rows = analysis.run_experiment(cfg)
    except (FracSolveError, ValueError) as exc:
        _fail(exc)
    text = analysis.rows_to_csv(rows)
    if cfg.output:
        click.echo("wrote %d rows to %s/%s.csv" % (len(rows), cfg.output, cfg.name), err=True)
    click.echo(text, nl=False)


@main.command()
@click.option("--alpha", type=float, required=True)
@click.option("--variant", required=True, help="e.g. bura:9 or rbura:8,8.")
@click.option("--grid", "grid_text", default="2d:h=2^-10", show_default=True)
@click.option("--rhs", default="checkerboard", show_default=True)
@click.option("--reference", type=click.Choice(analysis.REFERENCES), default="spectral-oracle", show_default=True)
@click.option("--kmax", type=int, default=80, show_default=True)
@click.option("--backend", type=click.Choice(["cg", "direct", "dst"]), default="dst", show_default=True)
def crossover(alpha, variant, grid_text, rhs, reference, kmax, backend):
    """Smallest quadrature k that beats a BURA-type method."""
    try:
        res = analysis.efficiency_crossover(
            alpha, variant, analysis.parse_grid(grid_text), rhs, reference,
            ShiftedSolveConfig(backend=backend), k_max=kmax,
        )
    except (FracSolveError, ValueError) as exc:
        _fail(exc)
    click.echo(res.describe())
    if res.capped:
        sys.exit(3)


@main.command()
@click.option("--alpha", type=float, required=True)
@click.option("--k", "k", type=int, required=True)
@click.option("--grid", "grid_text", required=True)
@click.option("--rbura", "rbura_text", help="R-BURA degrees as k,m (default k,k).")
def bounds(alpha, k, grid_text, rbura_text):
    """Theoretical error bounds and the mu_1 window for one setting."""
    try:
        degrees = tuple(int(x) for x in rbura_text.split(",")) if rbura_text else None
        bs = analysis.bound_summary(alpha, k, analysis.parse_grid(grid_text), degrees)
    except (FracSolveError, ValueError) as exc:
        _fail(exc)
    for key, val in bs.as_dict().items():
        click.echo("%-24s %s" % (key, "%.6g" % val if isinstance(val, (float, np.floating)) else val))


if __name__ == "__main__":
    main()
