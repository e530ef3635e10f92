"""Semantic exception hierarchy for the preference-learning engine."""


class UuplError(Exception):
    """Base class for all engine errors."""


class DimensionMismatchError(UuplError):
    """Operands have incompatible shapes or feature dimensions."""


class NotPositiveDefiniteError(UuplError):
    """A matrix required to be symmetric positive definite is not."""


class UndefinedCorrelationError(UuplError):
    """Sample correlation requested for a constant vector."""


class ConvergenceError(UuplError):
    """Iterative mode search did not reach the requested tolerance."""

    def __init__(self, message: str, grad_norm: float | None = None):
        super().__init__(message)
        self.grad_norm = grad_norm


class NumericalError(UuplError):
    """A linear-algebra step failed (beyond a plain non-SPD input)."""


class CalibrationRangeError(UuplError):
    """A calibration target falls outside the invertible part of the curve."""


class DomainError(UuplError):
    """A feature point lies outside the task domain, or the domain is invalid."""


class SessionError(UuplError):
    """Invalid session state transition or request."""

    status_code = 409


class UnknownSessionError(SessionError):
    status_code = 404


class PendingQueryConflictError(SessionError):
    status_code = 409


class SessionStoppedError(SessionError):
    status_code = 409


class StaleQueryError(SessionError):
    status_code = 409


class ValidationError(SessionError):
    status_code = 400


class PersistenceError(UuplError):
    """Session file missing, corrupt, or from an unsupported schema version."""


class CorruptSessionFileError(PersistenceError):
    pass


class SchemaVersionError(PersistenceError):
    pass
