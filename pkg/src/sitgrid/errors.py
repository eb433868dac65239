"""Exception hierarchy shared by every stage of the pipeline."""


class SitgridError(Exception):
    """Base class for all errors raised by this package."""


class DataError(SitgridError):
    """Input data is malformed or violates a domain invariant."""


class NonZeroUnoccupiedCell(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.row = row
        self.column = column


class InvariantViolation(DataError):
    pass


class ConfigError(SitgridError):
    pass


class NoRowsForBaseline(DataError):
    pass


class VariantError(DataError):
    pass


class MissingTimestamp(DataError):
    pass


class SpecError(ConfigError):
    pass


class DegenerateLabels(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class FeatureMismatch(DataError):
    pass


class MissingFeature(DataError):
    pass


class TooFewRows(DataError):
    pass


class GroupLargerThanFold(DataError):
    pass


class LengthMismatch(DataError):
    pass


class CorruptModel(DataError):
    pass


class FormatVersionMismatch(CorruptModel):
    pass


class StageError(SitgridError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


class ConvergenceWarning(UserWarning):
    """An iterative trainer stopped at its iteration cap."""
