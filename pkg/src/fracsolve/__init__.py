"""Solvers for fractional powers of sparse SPD matrices.

A**alpha u = f is solved with the best uniform rational approximation of
t**(1-alpha) (BURA), the reciprocal of the best approximation of t**alpha
(R-BURA), or a sinc quadrature, each reduced to independent shifted solves.
"""

from .analysis import (
    ExperimentConfig,
    MethodSpec,
    bound_summary,
    efficiency_crossover,
    load_config,
    per_mode_error_curve,
    run_experiment,
    validate_mu1_window,
)
from .discretization import (
    GridSpec,
    SparseSymMatrix,
    add_diagonal_reaction,
    assemble_laplacian,
    eigen_oracle,
    matrix_inf_norm,
    rhs_generate,
)
from .exceptions import (
    CacheCorruptError,
    CacheMissError,
    CertificationError,
    ConvergenceError,
    FracSolveError,
    PrecisionExhaustedError,
    ShiftedSolveError,
)
from .rational import (
    PoleResidueForm,
    RationalMinimax,
    bura_partial_fractions,
    cache_load,
    cache_store,
    compute_bura,
    error_function_roots,
    evaluate,
    get_bura,
    reciprocal_partial_fractions,
)
from .solvers import (
    QuadratureScheme,
    ShiftedSolveConfig,
    SolveResult,
    build_quadrature,
    shifted_solve,
    solve_bura,
    solve_quadrature,
    solve_rbura,
    solve_spectral,
)

__version__ = "0.1.0"

__all__ = [
    "CacheCorruptError",
    "CacheMissError",
    "CertificationError",
    "ConvergenceError",
    "ExperimentConfig",
    "FracSolveError",
    "GridSpec",
    "MethodSpec",
    "PoleResidueForm",
    "PrecisionExhaustedError",
    "QuadratureScheme",
    "RationalMinimax",
    "ShiftedSolveConfig",
    "ShiftedSolveError",
    "SolveResult",
    "SparseSymMatrix",
    "add_diagonal_reaction",
    "assemble_laplacian",
    "bound_summary",
    "build_quadrature",
    "bura_partial_fractions",
    "cache_load",
    "cache_store",
    "compute_bura",
    "efficiency_crossover",
    "eigen_oracle",
    "error_function_roots",
    "evaluate",
    "get_bura",
    "load_config",
    "matrix_inf_norm",
    "per_mode_error_curve",
    "reciprocal_partial_fractions",
    "rhs_generate",
    "run_experiment",
    "shifted_solve",
    "solve_bura",
    "solve_quadrature",
    "solve_rbura",
    "solve_spectral",
    "validate_mu1_window",
]
