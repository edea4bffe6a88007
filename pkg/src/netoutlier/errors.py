"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class NetOutlierError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(NetOutlierError):
    """An input file is missing or cannot be parsed."""


class ValidationError(NetOutlierError):
    """Input parsed fine but violates a structural invariant."""


class ParameterError(ValidationError):
    """A user-supplied parameter is out of its admissible range."""


class ConfigError(ValidationError):
    """A synthetic-generator configuration cannot be realised."""


class EvaluationError(ValidationError):
    """Scores/labels cannot be evaluated (e.g. a single class)."""


class DistanceError(ValueError):
    """Cosine distance is undefined for a zero vector."""


class ContractViolation(ValueError):
    """A numerical routine received input outside its contract."""


class EmptySupport(NetOutlierError):
    """The fitted coefficient vector has no nonzero entry."""


class NumericalFailure(NetOutlierError):
    """The solver produced a non-finite objective or gradient.

    The per-iteration trace collected up to the failure is attached so the
    caller can inspect or serialise it.
    """

    def __init__(self, message: str, trace: list[dict] | None = None) -> None:
        super().__init__(message)
        self.trace = list(trace or [])
