"""Finite-precision p-adic dynamics.

Exact truncated p-adic arithmetic, shadowing solvers driven by families
of contracting right inverses, conjugacy builders for perturbed maps and
contractions, metric estimators, and a transported-subshift construction
showing that right inverses without the covering property do not yield
shadowing.
"""

from .padic import (
    NormValue,
    PAdic,
    PrecisionContext,
    add,
    enumerate_ball,
    format_norm,
    format_padic,
    int_frac_split,
    make_padic,
    mul,
    norm,
    norm_from_exp,
    norm_zero,
    padic_from_json,
    padic_to_json,
    parse_norm,
    parse_padic,
    sub,
)

__all__ = [
    "NormValue", "PAdic", "PrecisionContext", "add", "sub", "mul", "norm",
    "make_padic", "enumerate_ball", "int_frac_split", "parse_padic",
    "format_padic", "parse_norm", "format_norm", "norm_from_exp",
    "norm_zero", "padic_to_json", "padic_from_json",
]

__version__ = "0.1.0"
