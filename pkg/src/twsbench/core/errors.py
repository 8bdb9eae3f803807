"""
Exception hierarchy for twsbench.

Every error raised by the library derives from TwsBenchError; each module
area has its own family so callers (and the CLI exit-code mapping) can
catch at the right granularity.
"""

from typing import Optional


class TwsBenchError(Exception):
    """Base class for all twsbench errors."""


# ---------------------------------------------------------------------------
# dataset
# ---------------------------------------------------------------------------

class DatasetError(TwsBenchError):
    """Problems with basin series inputs, splits or scaling."""

    def __init__(
        self,
        message: str,
        basin_id: Optional[str] = None,
        date: Optional[str] = None,
        column: Optional[str] = None,
    ):
        self.basin_id = basin_id
        self.date = date
        self.column = column
        context = [
            f"{name}={value}"
            for name, value in (("basin", basin_id), ("date", date), ("column", column))
            if value is not None
        ]
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class SchemaError(DatasetError):
    pass


class MissingValueError(DatasetError):
    pass


class GapError(DatasetError):
    pass


class OrphanBasinError(DatasetError):
    pass


class OutOfRangeError(DatasetError):
    pass


class EmptySplitError(DatasetError):
    pass


class DegenerateError(DatasetError):
    pass


class InvalidConfigError(DatasetError):
    pass


# ---------------------------------------------------------------------------
# features
# ---------------------------------------------------------------------------

class FeatureError(TwsBenchError):
    """Problems turning series into supervised examples."""


class InvalidTaskError(FeatureError):
    pass


class InsufficientHistoryError(FeatureError):
    pass


class WindowTooLargeError(FeatureError):
    pass


class SplitLeakageError(FeatureError):
    pass


class ResolutionMismatchError(FeatureError):
    pass


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

class ModelError(TwsBenchError):
    """Problems fitting or running a model."""


class EmptyInputError(ModelError):
    pass


class NonFiniteInputError(ModelError):
    pass


class InvalidParamsError(ModelError):
    pass


class FitError(ModelError):
    """A per-basin fit failed; carries the basin that failed."""

    def __init__(self, basin_id: str, cause: Exception):
        self.basin_id = basin_id
        self.cause = cause
        super().__init__(f"fit failed for basin {basin_id}: {cause}")

    def __reduce__(self):
        return (type(self), (self.basin_id, self.cause))


class ShapeMismatchError(ModelError):
    pass


class UnknownSchemeError(ModelError):
    pass


class DivergenceError(ModelError):
    pass


class UntrainedModelError(ModelError):
    pass


class ModelWithoutAttentionError(ModelError):
    pass


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

class EvaluationError(TwsBenchError):
    """Problems computing metrics, tests or summaries."""


class EmptySampleError(EvaluationError):
    pass


class ManifestMismatchError(EvaluationError):
    pass


class MissingCellError(EvaluationError):
    pass


# ---------------------------------------------------------------------------
# harness
# ---------------------------------------------------------------------------

class HarnessError(TwsBenchError):
    """Problems configuring or running an experiment."""


class ConfigError(HarnessError):
    pass


class HorizonExceedsSplitError(HarnessError):
    pass


class MissingReportError(HarnessError):
    pass
