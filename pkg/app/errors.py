class DenoiserError(Exception):
    """Base class for every failure raised by the denoiser toolkit."""


class ClipFormatError(DenoiserError, ValueError):
    """A clip directory, manifest or frame file violates the on-disk format."""


class AnnotationFormatError(DenoiserError, ValueError):
    """An annotation file line is malformed or a box violates its bounds."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class CheckpointFormatError(DenoiserError, ValueError):
    """A checkpoint file has a bad magic, an unknown version or is truncated."""


class ShapeMismatchError(DenoiserError, ValueError):
    """Tensor, frame or histogram shapes disagree."""


class TapeError(DenoiserError):
    """Backward was requested for a value the tape never recorded."""


class TrainingDivergedError(DenoiserError):
    """The training loss became NaN or infinite."""


class EvaluationError(DenoiserError, ValueError):
    """A metric cannot be computed for the given inputs."""


class WindowRangeError(DenoiserError, IndexError):
    """A temporal window reaches outside the clip."""


class EmptyDatasetError(DenoiserError, ValueError):
    """Training was requested on clips that yield no usable window."""


class ConfigError(DenoiserError, ValueError):
    """A configuration file cannot be read or parsed."""


class UsageError(DenoiserError):
    """A command-line flag combination is invalid."""
