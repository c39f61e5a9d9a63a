"""Exception hierarchy shared across the package."""


class DataError(Exception):
    """Invalid input data (exit code 2 at the CLI boundary)."""


class ParseError(DataError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, path: str, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{path}:{line_no}: {reason}")


class SchemaError(DataError):
    """A record violates the schema; names the offending field."""

    def __init__(self, field: str, reason: str, line_no: int | None = None):
        self.field = field
        self.reason = reason
        self.line_no = line_no
        loc = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"field '{field}': {reason}{loc}")


class WeightFormatError(DataError):
    """Weight file has a bad magic, version, or header."""


class ChecksumError(WeightFormatError):
    """Weight file failed CRC verification."""


class FeatureWidthError(DataError):
    """Model feature width does not match the data feature width."""

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(
            f"model expects node feature width {expected}, data has width {got}"
        )


class TrainingDiverged(RuntimeError):
    """Training loss became NaN; aborting."""
