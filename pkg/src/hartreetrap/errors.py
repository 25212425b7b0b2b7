"""Exception types raised by the solver layers."""


class HartreeTrapError(Exception):
    """Base class for all package errors."""


class InvalidStateError(HartreeTrapError):
    """A state vector contains non-finite components."""


class InitializationError(HartreeTrapError):
    """A left-endpoint start could not be built (e.g. r_start too large)."""


class StiffnessError(HartreeTrapError):
    """Integrator step size underflowed; carries the last valid state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ClassificationError(HartreeTrapError):
    """A trajectory ended without resolving its class (e.g. hit r_max)."""


class BracketError(HartreeTrapError):
    """No sign-defining bracket for the shooting parameter was found."""


class NodeCountError(HartreeTrapError):
    """A converged profile has a different node count than requested."""


class ExtractionError(HartreeTrapError):
    """A profile is not in the decayed regime needed to read off omega."""


class FitDomainError(HartreeTrapError):
    """Input data is outside the domain of the requested fit."""


class ModelNotApplicableError(HartreeTrapError):
    """The requested asymptotic model does not exist in this regime."""
