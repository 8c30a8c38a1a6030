"""Exception types shared across the toolkit.

The CLI maps these to exit code 1 (validation) while unexpected OS errors
map to exit code 2.
"""


class GradeconfError(Exception):
    """Base class for all toolkit errors."""


class CorpusParseError(GradeconfError):
    """A corpus line is not well-formed JSON or lacks required fields."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class SchemaError(GradeconfError):
    """Structurally valid input violates a corpus invariant."""


class StratificationError(GradeconfError):
    """A stratified split cannot give every class at least one record."""


class SignalError(GradeconfError):
    """Raw model outputs cannot be turned into a valid signal."""


class ClusteringError(GradeconfError):
    """Invalid clustering request (bad K, NaN embeddings, empty grid)."""


class TrainingError(GradeconfError):
    """Ensemble training preconditions violated (e.g. single-class data)."""


class CalibrationError(GradeconfError):
    """Platt fitting or cross-validated calibration cannot proceed."""


class MetricUndefinedError(GradeconfError):
    """A metric is undefined for the given items (e.g. one-class ROC)."""
