"""Exception hierarchy shared by all modules."""


class RespdcError(Exception):
    """Base class for errors raised by respdc."""


class DomainError(RespdcError, ValueError):
    """An argument lies outside the physical or numerical validity domain."""


class ResolutionError(DomainError):
    """A frequency grid is too coarse to resolve the cavity resonances."""


class DegenerateCavityError(DomainError):
    """The cavity has zero finesse, so resonance quantities are undefined."""


class ConvergenceError(RespdcError, RuntimeError):
    """An iterative solver failed to converge."""
