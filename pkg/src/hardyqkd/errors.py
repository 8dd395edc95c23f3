"""Exception types shared across the package."""


class ParameterRangeError(ValueError):
    """A numeric parameter is outside its admissible range."""


class LinearDependenceError(ValueError):
    """Input vectors are (numerically) linearly dependent."""


class EpsilonTooLargeError(ParameterRangeError):
    """A bias epsilon pushes a branch probability outside [0, 1]."""


class InsufficientDataError(ValueError):
    """An estimator has no samples for at least one required cell."""


class ZeroPosteriorError(ValueError):
    """Conditioning event P(a=0, b=0) has probability zero."""


class UnsupportedLevelError(ValueError):
    """Requested relaxation level is not supported."""


class InexpressibleFunctionalError(ValueError):
    """A functional references a cell with no moment representation."""


class SolverFailure(RuntimeError):
    """An optimization backend did not return an optimal certificate."""


class InfeasibleHError(SolverFailure):
    """The security-parameter vector h admits no quantum model at this level."""


class DecompositionInfeasibleError(SolverFailure):
    """Target h lies outside the convex hull of the tabulated grid."""
