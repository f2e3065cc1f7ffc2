"""Exception hierarchy shared by all gradmine modules.

The CLI maps these onto process exit codes: usage/config problems exit 1,
numerical-conformance failures exit 2, I/O problems exit 3.
"""


class GradmineError(Exception):
    """Base class for all gradmine errors."""


class ShapeError(GradmineError):
    """Tensor dimensions incompatible with the requested operation."""


class ArgumentError(GradmineError):
    """A scalar argument is outside its legal domain."""


class StateError(GradmineError):
    """An operation was invoked out of order (e.g. forward-second before
    backward) or with caches from a different step."""


class BuildError(GradmineError):
    """Network construction failed, typically a shape-inference mismatch
    with the declared layer output sizes."""


class FormatError(GradmineError):
    """A serialized file (checkpoint, PNM image, config) is malformed."""


class MetricError(GradmineError):
    """A metric is undefined for the given inputs (single-class ROC,
    FROC without any ground-truth lesions)."""


class PreprocessError(GradmineError):
    """Image preprocessing failed (e.g. no field of view found)."""


class ConfigError(GradmineError):
    """Run configuration is invalid (unknown key, bad value)."""


class ConformanceError(GradmineError):
    """The derivative conformance suite detected a tolerance breach."""
