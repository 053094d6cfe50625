"""Exception types shared across the package."""


class SvbmError(Exception):
    """Base class for all errors raised by this package."""


class DataError(SvbmError):
    """Bad input data: unparseable CSV cells, ragged rows, too few classes."""


class DimensionMismatchError(SvbmError):
    """Shapes or lengths of inputs do not line up."""


class DegenerateProblemError(SvbmError):
    """A training problem that cannot be solved: single-class input or a
    weight distribution that collapses one side of the box constraints."""


class TrainingError(SvbmError):
    """Training could not produce a usable model."""


class NotFittedError(SvbmError):
    """An operation requiring a trained model was called on an empty one."""
