"""Optimal polynomial approximants in the full Fock space and the pencil machinery behind them."""

from .fockops import CapacityError, basis_size, col_norm, left_mult_matrix, right_mult_matrix, row_norm
from .freealg import FreePoly, MatrixTuple, ParseError, evaluate, format_poly, mul, norm_sq, parse
from .linearize import MonicPencil, StableAssocWitness, linearize, verify_stable_assoc
from .opa import cyclicity_verdict, decay_table, solve_opa
from .sigma import sigma_build, sigma_residual_norm_sq
from .specrad import burnside_triangularize, outer_spectral_radius, similarity_to_column_contraction

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "FreePoly", "MatrixTuple", "MonicPencil", "ParseError", "StableAssocWitness",
    "basis_size", "burnside_triangularize", "col_norm", "cyclicity_verdict", "decay_table", "evaluate",
    "format_poly", "left_mult_matrix", "linearize", "mul", "norm_sq", "outer_spectral_radius", "parse",
    "right_mult_matrix", "row_norm", "sigma_build", "sigma_residual_norm_sq",
    "similarity_to_column_contraction", "solve_opa", "verify_stable_assoc",
]
