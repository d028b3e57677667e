"""Exception hierarchy shared by every module of the package."""


class GraphFeedbackError(Exception):
    """Base class for all package errors."""


class InvalidParameter(GraphFeedbackError, ValueError):
    """An argument lies outside its documented domain."""


class CapacityExceeded(GraphFeedbackError):
    """An exact combinatorial routine was asked for an instance above its size cap."""


class SolverFailure(GraphFeedbackError, RuntimeError):
    """The LP solver did not reach an optimal basis within its iteration budget."""


class ProtocolViolation(GraphFeedbackError):
    """Feedback or round indices inconsistent with the learning protocol."""


class ConfigurationError(GraphFeedbackError):
    """An experiment pairs incompatible components (e.g. informed policy, withheld graph)."""


class InvalidConfiguration(GraphFeedbackError):
    """A policy reached an internal state its preconditions should have ruled out."""
