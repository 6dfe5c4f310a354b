"""Exception hierarchy shared by every stage of the pipeline."""


class PrefclusterError(Exception):
    """Base class for all errors raised by prefcluster."""


class ParseError(PrefclusterError, ValueError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class RangeError(ParseError):
    pass


class ShapeError(PrefclusterError, ValueError):
    pass


class ConfigurationError(PrefclusterError, ValueError):
    pass


class NumericOverflowError(PrefclusterError, FloatingPointError):
    pass


class EvaluationError(PrefclusterError, ValueError):
    pass


class SamplingError(PrefclusterError, ValueError):
    pass


class DegenerateDataError(PrefclusterError, ValueError):
    pass


class DetectionError(PrefclusterError, ValueError):
    pass


class AnalysisError(PrefclusterError, ValueError):
    pass


class FormatError(PrefclusterError, ValueError):
    """Artifact file has the wrong format tag or version."""

    def __init__(self, expected, found, path=None):
        msg = f"expected format {expected!r}, found {found!r}"
        if path is not None:
            msg += f" in {path}"
        super().__init__(msg)
        self.expected = expected
        self.found = found


class StageError(PrefclusterError):
    """A pipeline stage failed; wraps the underlying cause."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
