"""Custom exceptions and warnings raised by this library"""

from typing import Optional


class InputFormatError(Exception):
    """Exception raised when given input does not match expected format

    This error will only be raised when parsing external input, i.e.
    configuration files, event streams, histogram and result files. Other
    malformed input from the user will result in a `ValueError` being raised,
    as is idiomatic in Python.

    Parameters
    ----------
    message : str
        Description of the problem.
    line_number : Optional[int], optional
        One-based number of the offending line, if known. Defaults to None.
    """

    def __init__(self, message: str, line_number: Optional[int]=None) -> None:
        self.line_number = line_number
        if line_number is not None:
            message = f"Line {line_number}: {message}"
        super().__init__(message)


class ConfigValidationError(ValueError):
    """Raised when a configuration value violates an invariant

    Parameters
    ----------
    key : str
        The configuration key holding the invalid value.
    message : str
        Description of the violated invariant.
    """

    def __init__(self, key: str, message: str) -> None:
        self.key = key
        super().__init__(f"Invalid value for `{key}`: {message}")


class DegenerateDistributionError(ValueError):
    """Raised when no photon can pass postselection (zero splitting, zero angle)"""
    pass


class OrthogonalStatesError(ValueError):
    """Raised when the weak value is undefined due to orthogonal states"""
    pass


class UnorderedEventsError(ValueError):
    """Raised when detector events are not ordered in absolute time"""
    pass


class EmptyWindowError(ValueError):
    """Raised when an analysis window contains no usable bins or counts"""
    pass


class SaturationError(ValueError):
    """Raised when the detector is (almost) always dead in some bin"""
    pass


class FitError(RuntimeError):
    """Raised when a fit is singular or fails to converge"""
    pass


class ReferenceStabilityError(RuntimeError):
    """Raised when the references taken before and after a measurement disagree"""
    pass


class PipelineStageError(RuntimeError):
    """Raised by the analysis pipeline, naming the stage that failed

    Parameters
    ----------
    stage : str
        Name of the pipeline stage, e.g. "correct" or "subtract".
    cause : Exception
        The underlying exception.
    """

    def __init__(self, stage: str, cause: Exception) -> None:
        self.stage = stage
        self.cause = cause
        super().__init__(f"Analysis stage `{stage}` failed: {cause}")


class CoarseGridWarning(UserWarning):
    """Warned when a spectral grid is too coarse to certify the Fourier transform"""
    pass


class WeakRegimeWarning(UserWarning):
    """Warned when an approximation is requested outside the weak regime"""
    pass
