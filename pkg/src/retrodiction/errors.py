"""Exception hierarchy.

``ValidationError`` covers malformed inputs (bad shapes, non-stochastic
columns, non-PSD blocks). ``PreconditionError`` covers well-formed inputs
that violate a mathematical precondition of the requested operation.
"""


class RetroError(Exception):
    """Base class for all library errors."""


class ValidationError(RetroError, ValueError):
    pass


class NotSquare(ValidationError):
    pass


class NotHermitian(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidStochastic(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class NotCPTP(ValidationError):
    pass


class NotATensorAlgebra(ValidationError):
    pass


class DimensionTooSmall(ValidationError):
    pass


class NotADilation(ValidationError):
    pass


class PreconditionError(RetroError):
    pass


class EvidenceNotAbsolutelyContinuous(PreconditionError):
    pass


class PriorNotFaithful(PreconditionError):
    pass


class PredictionNotFaithful(PreconditionError):
    pass
