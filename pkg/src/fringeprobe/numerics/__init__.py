"""Quadrature and least-squares engines shared by the physics modules."""

from .fitting import (FitResult, LeastSquaresResult, finite_diff_gradient, finite_diff_jacobian,
                      fit_least_squares)
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate, integrate_batch

__all__ = [
    "DEFAULT_SPEC", "FitResult", "LeastSquaresResult", "QuadratureSpec", "finite_diff_gradient",
    "finite_diff_jacobian", "fit_least_squares", "integrate", "integrate_batch",
]
