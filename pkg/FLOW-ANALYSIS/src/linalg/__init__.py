"""Exact and certified linear algebra over the Gaussian rationals."""

from .scalars import (
    BallScalar, ExactScalar, Scalar, ZERO, ONE, I_UNIT, DEFAULT_BITS,
    parse_scalar, format_scalar, is_exact, to_ball, ball_from_dict,
    reconstruct_rational, scalar_to_json,
)
from .subspaces import (
    ComplexSubspace, ExactVector, RealSubspace, complexify, nullspace, quotient_project,
    rank, real_times_i, realify, rref, solve_linear, span,
)
from .saturation import integer_relations, is_saturated, rational_saturation

__all__ = [
    'BallScalar', 'ExactScalar', 'Scalar', 'ZERO', 'ONE', 'I_UNIT', 'DEFAULT_BITS',
    'parse_scalar', 'format_scalar', 'is_exact', 'to_ball', 'ball_from_dict',
    'reconstruct_rational', 'scalar_to_json',
    'ComplexSubspace', 'ExactVector', 'RealSubspace', 'complexify', 'nullspace',
    'quotient_project', 'rank', 'real_times_i', 'realify', 'rref', 'solve_linear', 'span',
    'integer_relations', 'is_saturated', 'rational_saturation',
]
