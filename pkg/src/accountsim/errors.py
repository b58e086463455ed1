"""Exception types shared across the toolkit."""


class AccountSimError(Exception):
    """Base class for all toolkit errors."""


class FormatError(AccountSimError):
    """Raw input could not be parsed (bad stream, too many malformed lines)."""


class DatasetError(AccountSimError):
    """Dataset became empty or inconsistent after pruning."""

    def __init__(self, message: str, counts: dict | None = None):
        super().__init__(message)
        self.counts = counts or {}


class ConfigError(AccountSimError):
    """A parameter is out of range or incompatible with the data."""


class SizeError(AccountSimError):
    """A dense-matrix cap or hard size limit was exceeded."""


class SpectralError(AccountSimError):
    """Attenuation too large or a linear system is singular."""


class TrainingError(AccountSimError):
    """Optimization diverged or failed to make progress."""


class QueryError(AccountSimError):
    """A query referenced an unknown seed, space, or parameter."""


class AlignmentError(AccountSimError):
    """Two embedding spaces do not share the same node set."""


class EvaluationError(AccountSimError):
    """Evaluation preconditions violated (e.g. no positive labels)."""
