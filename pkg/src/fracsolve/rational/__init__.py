"""Arbitrary-precision best uniform rational approximation of t**beta."""

from .cache import cache_dir, cache_load, cache_store, get_bura
from .chebyshev import context
from .poles import (
    ErrorRootTable,
    PoleResidueForm,
    bura_partial_fractions,
    error_function_roots,
    reciprocal_partial_fractions,
    reconstruction_error,
)
from .remez import (
    DEFAULT_PRECISION,
    RationalMinimax,
    bura_chain,
    certify,
    compute_bura,
    evaluate,
)

__all__ = [
    "DEFAULT_PRECISION",
    "ErrorRootTable",
    "PoleResidueForm",
    "RationalMinimax",
    "bura_chain",
    "bura_partial_fractions",
    "cache_dir",
    "cache_load",
    "cache_store",
    "certify",
    "compute_bura",
    "context",
    "error_function_roots",
    "evaluate",
    "get_bura",
    "reciprocal_partial_fractions",
    "reconstruction_error",
]
