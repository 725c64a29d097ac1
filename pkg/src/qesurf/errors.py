"""Exception hierarchy shared across the package."""


class QesurfError(Exception):
    """Base class for all package errors."""


class StencilError(QesurfError):
    """Grid too small for the requested finite-difference stencil."""


class DomainError(QesurfError):
    """Evaluation point or path outside the valid region of a chart."""


class GeometryError(QesurfError):
    """Metric data that is not positive definite, or otherwise degenerate."""


class ParameterError(QesurfError):
    """Invalid parameter value (m = 0, m = 2 in the identity, pole in a series)."""


class ConvergenceError(QesurfError):
    """Iterative solver failed to converge.

    Attributes
    ----------
    trace : list of float
        Residual history up to the failure.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class ContractError(QesurfError):
    """A precondition of an operation could not be verified numerically."""


class UnsupportedRegimeError(QesurfError):
    """Parameters fall into a regime that is not implemented."""


class AccuracyError(QesurfError):
    """A series or quadrature did not reach its accuracy target."""


class BranchError(QesurfError):
    """A continuous branch of a multivalued function could not be kept."""


class SingularityError(QesurfError):
    """An ODE coefficient vanished along a trajectory.

    Attributes
    ----------
    location : float
        Value of the independent variable where the singularity was hit.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class InconsistentThetaError(QesurfError):
    """Reconstruction data failed the mixed-partial compatibility test."""


class DegeneracyError(GeometryError):
    """Vector field vanishes where it is required to be nonzero."""


class SignatureError(GeometryError):
    """Assembled metric fails to be Riemannian."""
