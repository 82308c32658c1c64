"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (the class name) so the
CLI can print it next to the message.  ``ValidationError`` covers bad input;
anything else derived from ``ReprAlignError`` is a failure during computation.
"""


class ReprAlignError(Exception):
    @property
    def code(self) -> str:
        return type(self).__name__


class ValidationError(ReprAlignError, ValueError):
    pass


class NonFinite(ValidationError):
    def __init__(self, row: int, col: int):
        super().__init__(f"non-finite value at row {row}, column {col}")
        self.row = row
        self.col = col


class LabelOutOfRange(ValidationError):
    def __init__(self, row: int, label: int | None = None):
        msg = f"label id out of range at row {row}"
        if label is not None:
            msg += f" (got {label})"
        super().__init__(msg)
        self.row = row


class DegenerateLabels(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class SizeOutOfRange(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class KOutOfRange(ValidationError):
    pass


class KTooSmall(ValidationError):
    pass


class TooLargeForOracle(ValidationError):
    pass


class MismatchedDendrogram(ValidationError):
    pass


class MismatchedPartition(ValidationError):
    pass


class SingleClass(ValidationError):
    pass


class FoldTooSmall(ValidationError):
    pass


class ZeroVariance(ValidationError):
    pass


class TooFewPairs(ValidationError):
    pass


class DuplicateCell(ValidationError):
    pass


class EmptyRuns(ValidationError):
    pass


class EmptyVocabulary(ValidationError):
    pass


class EmptyFile(ValidationError):
    pass


class RowCountMismatch(ValidationError):
    pass


class FormatError(ValidationError):
    def __init__(self, offset: int, reason: str):
        super().__init__(f"format error at offset {offset}: {reason}")
        self.offset = offset
        self.reason = reason


class VersionMismatch(ValidationError):
    pass


class MissingField(ValidationError):
    def __init__(self, line: int, field: str):
        super().__init__(f"line {line}: missing field {field!r}")
        self.line = line
        self.field = field


class BadJson(ValidationError):
    def __init__(self, line: int, reason: str = ""):
        super().__init__(f"line {line}: invalid JSON {reason}".rstrip())
        self.line = line
