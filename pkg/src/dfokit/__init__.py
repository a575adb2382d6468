"""Derivative-free trust-region optimization with interpolation models."""

from .errors import DfoError
from .interp import (InterpolationSet, ModelKind, QuadraticModel, build_composite_least_squares,
                     build_full_quadratic, build_linear, build_min_frobenius, build_regression,
                     fully_linear_constants)
from .problem_model import (Ball, BoundedDeterministic, Box, Exact, Halfspace, Intersection,
                            ObjectiveOracle, Stochastic, WholeSpace)
from .trs import (cauchy_point, eigenstep, projected_gradient_cauchy, solve_trs_exact,
                  solve_trs_secondorder, steihaug_toint)

__version__ = "0.1.0"
