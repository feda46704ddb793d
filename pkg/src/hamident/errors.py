"""Exception types raised by the identification pipeline."""


class HamidentError(Exception):
    """Base class for all package errors."""


class InvalidAxisError(HamidentError, ValueError):
    pass


class UnknownChannelError(HamidentError, IndexError):
    pass


class SeriesFormatError(HamidentError, ValueError):
    """Malformed or invalid series file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EstimationError(HamidentError):
    """Any failure to extract a parameter from measurement data."""


class NoRotationDetected(EstimationError):
    pass


class UndefinedSharpness(EstimationError):
    pass


class FitFailure(EstimationError):
    pass


class NoCrossingError(EstimationError):
    pass


class EquatorUnreachable(EstimationError):
    pass


class PoleDegenerate(EstimationError):
    pass


class UnidentifiableError(EstimationError):
    pass


class LabelingError(EstimationError):
    pass


class RankDeficientError(EstimationError):
    pass


class ConfigError(HamidentError, ValueError):
    pass
