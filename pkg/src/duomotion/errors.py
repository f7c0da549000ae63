"""Exception hierarchy shared by all duomotion modules."""


class DuomotionError(Exception):
    """Base class for all package errors."""


class InputError(DuomotionError):
    """Rejected input: bad shapes, mismatched lengths, malformed files."""


class ConfigError(DuomotionError):
    """Inconsistent configuration, e.g. an unmapped body part index."""


class DivergedError(DuomotionError):
    """An optimizer produced a non-finite loss."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class NoContactError(DuomotionError):
    """Root offset requested but the contact set is empty."""


class UndefinedMetricError(DuomotionError):
    """A metric was requested on a sequence too short to define it."""


class StageError(DuomotionError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage
