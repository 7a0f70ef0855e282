"""Acceptance criteria, each at its stated tolerance.

Every test appends one ``criterion N: PASS|FAIL ...`` line to the session
log, which is printed in the terminal summary, and then asserts.
Run with ``pytest tests/test_acceptance.py -v -s`` to see detail lines as
they are produced.
"""

import math
import os
import time

import numpy as np
import pytest

from fracsolve.analysis import (
    ExperimentConfig,
    MethodSpec,
    bound_summary,
    csv_data_section,
    efficiency_crossover,
    per_mode_error_curve,
    quadrature_bound,
    rows_to_csv,
    run_experiment,
)
from fracsolve.discretization import GridSpec, assemble_laplacian, eigen_oracle
from fracsolve.rational import bura_chain, error_function_roots
from fracsolve.solvers import ShiftedSolveConfig, build_quadrature, solve_spectral

PRECISION = 512
BUDGET = 300.0

# E_{alpha,k,m}: best uniform error for t**(1 - alpha)
BURA_ERRORS = {
    0.25: {(5, 5): 2.8676e-5, (6, 6): 9.2522e-6, (7, 7): 3.2566e-6, (8, 7): 1.9500e-6,
           (8, 8): 1.2288e-6, (9, 8): 7.5972e-7, (9, 9): 4.9096e-7, (10, 9): 3.1128e-7},
    0.5: {(5, 5): 2.6896e-4, (6, 6): 1.0747e-4, (7, 7): 4.6037e-5, (8, 7): 3.0789e-5, (8, 8): 2.0852e-5},
    0.75: {(5, 5): 2.7348e-3, (6, 6): 1.4312e-3, (7, 7): 7.8269e-4},
}

# first four roots of r(t) - t**alpha for the approximant of t**alpha
ERROR_ROOTS = {
    0.5: {(5, 5): (1.030e-7, 6.732e-6, 6.592e-5, 4.352e-4),
          (6, 6): (1.650e-8, 1.076e-6, 1.053e-5, 6.950e-5),
          (7, 7): (3.100e-9, 1.981e-7, 1.932e-6, 1.275e-5),
          (8, 7): (1.400e-9, 8.840e-8, 8.644e-7, 5.705e-6),
          (8, 8): (7.00e-10, 4.070e-8, 3.967e-7, 2.617e-6)},
    0.75: {(5, 5): (2.185e-6, 7.269e-5, 5.004e-4, 2.353e-3),
           (6, 6): (4.836e-7, 1.609e-5, 1.108e-4, 5.216e-4),
           (7, 7): (1.202e-7, 3.999e-6, 2.754e-5, 1.297e-4),
           (8, 7): (6.070e-8, 2.019e-6, 1.390e-5, 6.544e-5),
           (8, 8): (3.280e-8, 1.091e-6, 7.509e-6, 3.536e-5)},
}

# l2 errors at h = 2**-8; columns follow the method lists below
GRID_ERRORS = {
    (0.25, "checkerboard"): (5.863e-3, 1.080e-2),
    (0.5, "checkerboard"): (1.383e-3, 1.351e-3, 1.347e-3, 3.113e-3),
    (0.5, "cosine"): (1.509e-4, 5.790e-5, 5.031e-5, 1.423e-3),
    (0.75, "checkerboard"): (4.194e-4, 4.226e-4, 4.206e-4, 1.558e-3),
    (0.75, "cosine"): (2.222e-5, 1.893e-5, 3.586e-6, 7.386e-4),
}
METHODS_LOW = ("bura:9", "quad:9")
METHODS = ("bura:7", "rbura:8,7", "rbura:8,8", "quad:7")


def report(log, n, ok, detail):
    line = "criterion %d: %s  %s" % (n, "PASS" if ok else "FAIL", detail)
    log.append(line)
    print(line)
    return ok


def sig_match(ours, expected, digits):
    # agreement to the printed digits: half a unit in the last place
    e = math.floor(math.log10(abs(expected)))
    return abs(ours - expected) <= 0.5 * 10.0 ** (e - digits + 1)


@pytest.fixture(scope="module")
def chains():
    """Fresh Remez chains (no cache), with the cumulative time to each level."""
    out = {}
    for beta, (k, m) in ((0.75, (10, 9)), (0.5, (8, 8)), (0.25, (7, 7))):
        t0 = time.perf_counter()
        for r in bura_chain(beta, k, m, precision=PRECISION):
            out[beta, r.k, r.m] = (r, time.perf_counter() - t0)
    return out


def test_criterion_1_bura_errors(chains, acceptance_log):
    bad, slow, worst = [], [], 0.0
    for alpha, row in BURA_ERRORS.items():
        for (k, m), expected in row.items():
            r, seconds = chains[1 - alpha, k, m]
            worst = max(worst, seconds)
            E = float(r.E)
            print("  E_{%g,%d,%d} = %.5e  expected %.4e  %.1fs" % (alpha, k, m, E, expected, seconds))
            if not sig_match(E, expected, 4):
                bad.append("E_{%g,%d,%d}=%.5e vs %.4e" % (alpha, k, m, E, expected))
            if seconds > BUDGET:
                slow.append((alpha, k, m, seconds))
    n = sum(len(v) for v in BURA_ERRORS.values())
    ok = not bad and not slow
    detail = "%d/%d entries to 4 digits, slowest %.0fs" % (n - len(bad), n, worst)
    if bad:
        detail += "; mismatches: " + ", ".join(bad)
    report(acceptance_log, 1, ok, detail)
    assert not slow, slow
    assert not bad, bad


def test_criterion_2_error_roots(chains, acceptance_log):
    bad, n = [], 0
    for alpha, row in ERROR_ROOTS.items():
        for (k, m), expected in row.items():
            r = chains[alpha, k, m][0]
            xi = error_function_roots(r).as_floats()[:4]
            for i, (ours, p) in enumerate(zip(xi, expected), 1):
                n += 1
                if not sig_match(ours, p, 3):
                    bad.append("a=%g (%d,%d) xi_%d=%.4e vs %.3e" % (alpha, k, m, i, ours, p))
    detail = "%d/%d roots to 3 digits" % (n - len(bad), n)
    if bad:
        detail += "; mismatches: " + ", ".join(bad)
    report(acceptance_log, 2, not bad, detail)
    assert not bad, bad


def test_criterion_3_quadrature_counts(acceptance_log):
    counts = [build_quadrature(a, kprime=1 / 3).systems for a in (0.25, 0.5, 0.75)]
    k7 = build_quadrature(0.5, k=7).systems
    ok = counts == [120, 91, 120] and k7 == 9
    report(acceptance_log, 3, ok, "k'=1/3 -> %s, (0.5, k=7) -> %d" % ("/".join(map(str, counts)), k7))
    assert ok


def test_criterion_4_per_mode_exactness(acceptance_log):
    rng = np.random.default_rng(4)
    cfg = ShiftedSolveConfig(backend="direct")
    worst, bad = 0.0, []
    for n in (999, 9999):
        grid = GridSpec(1, n)
        A = assemble_laplacian(grid)
        modes = sorted({1, n} | set(rng.choice(np.arange(2, n), 18, replace=False).tolist()))
        psi = np.column_stack([eigen_oracle(grid, i).psi for i in modes])
        lam = np.array([eigen_oracle(grid, i).lam for i in modes])
        for alpha in (0.25, 0.5, 0.75):
            exact = psi * lam ** -alpha
            for text in ("bura:7", "rbura:8,7", "rbura:8,8", "quad:7"):
                spec = MethodSpec.parse(text)
                u = spec.shifted_sum(A, alpha).apply(A, psi, cfg).solution
                measured = np.linalg.norm(u - exact, axis=0) / np.linalg.norm(psi, axis=0)
                analytic = np.array([e for _, e in per_mode_error_curve(alpha, spec, grid, modes)])
                dev = np.abs(measured - analytic)
                worst = max(worst, dev.max())
                if dev.max() > 1e-10:
                    bad.append("n=%d a=%g %s dev %.2e" % (n, alpha, text, dev.max()))
    report(acceptance_log, 4, not bad, "max |measured - analytic| = %.2e over 2 grids x 3 alphas x 4 methods x 20 modes"
           % worst)
    assert not bad, bad


def test_criterion_5_bound_compliance(acceptance_log):
    grid = GridSpec(2, 63)
    A = assemble_laplacian(grid)
    F = np.random.default_rng(5).standard_normal((grid.N, 100))
    cfg = ShiftedSolveConfig(backend="cg")
    bad, margins = [], []
    for alpha in (0.25, 0.5, 0.75):
        ref = solve_spectral(grid, F, alpha)
        fn = np.linalg.norm(F, axis=0)
        for k, rb in ((7, (8, 7)), (8, (8, 8))):
            bs = bound_summary(alpha, k, grid, rbura_degrees=rb)
            q = build_quadrature(alpha, k=k)
            cases = (
                ("bura:%d" % k, bs.bura_bound),
                ("rbura:%d,%d" % rb, bs.rbura_bound),
                ("quad:%d" % k, quadrature_bound(q, grid)),
            )
            for text, bound in cases:
                spec = MethodSpec.parse(text)
                u = spec.shifted_sum(A, alpha).apply(A, F, cfg).solution
                err = np.linalg.norm(u - ref, axis=0) / fn
                margins.append(err.max() / bound)
                if err.max() > bound:
                    bad.append("a=%g %s %.3e > %.3e" % (alpha, text, err.max(), bound))
    report(acceptance_log, 5, not bad, "%d method/alpha cases x 100 rhs, max error/bound = %.3f"
           % (len(margins), max(margins)))
    assert not bad, bad


def _table_config(workers):
    grid = GridSpec.from_h(2, 2.0**-8)
    solver = ShiftedSolveConfig(backend="cg", workers=workers)
    common = dict(grids=(grid,), solver=solver, reference="fine-mesh", reference_h=2.0**-12)
    low = ExperimentConfig(alphas=(0.25,), methods=tuple(map(MethodSpec.parse, METHODS_LOW)),
                           rhs=("checkerboard",), **common)
    high = ExperimentConfig(alphas=(0.5, 0.75), methods=tuple(map(MethodSpec.parse, METHODS)),
                            rhs=("checkerboard", "cosine", "cosine-nohup"), **common)
    return low, high


def _run_tables(workers):
    rows = []
    for cfg in _table_config(workers):
        rows += run_experiment(cfg, write=False)
    return rows


@pytest.fixture(scope="module")
def table_run():
    t0 = time.perf_counter()
    rows = _run_tables(1)
    return rows, time.perf_counter() - t0


def _row_verdict(ours, expected):
    ratios = [o / p for o, p in zip(ours, expected)]
    within = all(0.5 <= q <= 2.0 for q in ratios)
    # same permutation when sorted by error
    ordered = np.argsort(ours, kind="stable").tolist() == np.argsort(expected, kind="stable").tolist()
    return within, ordered, ratios


def test_criterion_6_grid_errors(table_run, acceptance_log):
    rows, seconds = table_run
    assert all(r.status == "ok" for r in rows), [r.status for r in rows if r.status != "ok"]
    errs = {}
    for r in rows:
        errs.setdefault((r.alpha, r.rhs), []).append(r.l2_rel)
    failures = []
    for (alpha, rhs), expected in GRID_ERRORS.items():
        variants = [rhs] if rhs == "checkerboard" else ["cosine", "cosine-nohup"]
        verdicts = []
        for v in variants:
            within, ordered, ratios = _row_verdict(errs[alpha, v], expected)
            verdicts.append(within and ordered)
            print("  a=%g %-13s ratios %s  within2=%s ordered=%s" % (
                alpha, v, " ".join("%.2f" % q for q in ratios), within, ordered))
        if not any(verdicts):
            failures.append("a=%g %s" % (alpha, rhs))
    ok = not failures and seconds <= 600
    detail = "%d/%d rows within 2x and ordered, %.0fs" % (len(GRID_ERRORS) - len(failures), len(GRID_ERRORS), seconds)
    if failures:
        detail += "; failing rows: " + ", ".join(failures)
    report(acceptance_log, 6, ok, detail)
    assert seconds <= 600
    assert not failures, failures


def test_criterion_7_crossover(acceptance_log):
    grid = GridSpec.from_h(2, 2.0**-10)
    cases = (
        (0.25, "bura:9", ("checkerboard",), 37),
        (0.75, "rbura:8,8", ("cosine", "cosine-nohup"), 29),
    )
    found, bad = [], []
    for alpha, variant, rhs_kinds, target in cases:
        ks = []
        for rhs in rhs_kinds:
            res = efficiency_crossover(alpha, variant, grid, rhs=rhs, reference="fine-mesh", k_max=60)
            print("  " + res.describe())
            ks.append(res.k)
        hit = [k for k in ks if k is not None and abs(k - target) <= 2]
        found.append("a=%g %s k=%s (target %d)" % (alpha, variant, "/".join(map(str, ks)), target))
        if not hit:
            bad.append(alpha)
    report(acceptance_log, 7, not bad, "h=2^-10: " + "; ".join(found))
    assert not bad, bad


def test_criterion_8_exponential_decay(chains, acceptance_log):
    ks = np.arange(5, 10)
    E = np.array([float(chains[0.75, k, k][0].E) for k in ks])
    slope, _ = np.polyfit(np.sqrt(ks), np.log(E), 1)
    target = -2 * math.pi * math.sqrt(0.75)
    ok = abs(slope - target) <= 0.25 * abs(target)
    report(acceptance_log, 8, ok, "slope %.3f vs %.3f (%.1f%% off)" % (slope, target, 100 * abs(slope / target - 1)))
    assert ok


def test_criterion_9_determinism(table_run, acceptance_log):
    rows1, _ = table_run
    workers = max(2, min(4, os.cpu_count() or 2))
    rowsN = _run_tables(workers)
    a = csv_data_section(rows_to_csv(rows1))
    b = csv_data_section(rows_to_csv(rowsN))
    ok = a == b
    report(acceptance_log, 9, ok, "workers=1 vs workers=%d: %d data rows %s" % (
        workers, len(rows1), "byte-identical" if ok else "differ"))
    assert ok
