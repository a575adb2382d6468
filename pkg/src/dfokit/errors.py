"""Exception hierarchy shared by every dfokit module."""


class DfoError(Exception):
    """Base class for all dfokit errors."""


class ConfigError(DfoError, ValueError):
    """Invalid parameter or configuration value."""


class DimensionMismatch(DfoError, ValueError):
    """Array shapes do not agree."""


class NonFiniteInput(DfoError, ValueError):
    """NaN or infinite entries passed where finite values are required."""


class NonConvergence(DfoError):
    """An inner iterative method hit its iteration limit."""


class FactorizationFailure(DfoError):
    """A shifted Hessian could not be factorized for any admissible shift."""


class MaxItersExceeded(DfoError):
    """Truncated CG ran out of iterations.

    The best iterate found is attached as ``solution``.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class NoNegativeCurvature(DfoError):
    """Eigenstep requested for a Hessian with no negative eigenvalue."""


class LineSearchFailure(DfoError):
    """Projected-gradient backtracking found no acceptable step."""


class SingularSystem(DfoError):
    """Interpolation matrix is singular or too badly conditioned."""


class RankDeficient(DfoError):
    """Regression matrix does not have full column rank."""


class InvalidPointCount(DfoError, ValueError):
    """Number of interpolation points is wrong for the requested model."""


class IterationCap(DfoError):
    """Geometry improvement exceeded its swap budget."""


class NoFeasibleReplacement(DfoError):
    """No feasible point with a usable Lagrange value was found."""


class InfeasibleStart(DfoError, ValueError):
    """Starting point lies outside the feasible set."""


class MixedProblems(DfoError, ValueError):
    """Reports passed to a comparison refer to different problems."""
