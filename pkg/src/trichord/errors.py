"""Exception types shared across the package."""


class TrichordError(Exception):
    """Base class for all package-specific errors."""


class GuardViolationError(TrichordError):
    """A state came closer to a primary than the configured guard distance.

    Attributes
    ----------
    primary : str
        Which primary was approached, ``"earth"`` or ``"moon"``.
    distance : float
        The offending distance.
    time : float or None
        Trajectory time of the violation when raised by the integrator,
        ``None`` for pointwise evaluations.
    """

    def __init__(self, primary, distance, time=None):
        self.primary = primary
        self.distance = distance
        self.time = time
        msg = f"distance {distance:.6e} to {primary} is below the collision guard"
        if time is not None:
            msg += f" at t={time:.9f}"
        super().__init__(msg)


class ChartDomainError(TrichordError):
    """Input lies outside the domain of a regularization chart."""


class PreconditionError(TrichordError):
    """A documented precondition of an operation was violated."""


class IntegrationError(TrichordError):
    """The integrator failed: step-size underflow or step budget exhausted."""


class RefinementError(TrichordError):
    """Newton refinement failed.

    Attributes
    ----------
    trace : list of (int, float)
        Iteration index and residual norm, in order.
    condition : float or None
        Jacobian condition estimate when the failure was a conditioning one.
    """

    def __init__(self, message, trace=None, condition=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
        self.condition = condition


class ContinuationError(TrichordError):
    """Family continuation could not proceed at the requested parameter."""


class NonReturningError(TrichordError):
    """No section return was found within the allotted time."""

    def __init__(self, t_max):
        self.t_max = t_max
        super().__init__(f"no section return within t_max={t_max:g}")


class ConfigError(TrichordError):
    """Invalid run configuration; names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
