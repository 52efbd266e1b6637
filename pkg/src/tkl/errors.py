"""Exception types shared across the package.

The CLI maps these onto stable exit codes: configuration problems exit 2,
data problems exit 3, non-convergence exits 4, oracle-check tolerance
violations exit 5.
"""


class TklError(Exception):
    """Base class for all library errors."""


class ConfigError(TklError):
    """Invalid configuration; may aggregate several messages."""

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class DataError(TklError):
    """Base class for dataset / file problems."""


class ParseError(DataError):
    def __init__(self, row, col, message):
        self.row = row
        self.col = col
        super().__init__(f"row {row}, column {col}: {message}")


class EmptyFile(DataError):
    pass


class MoreThanTwoClasses(DataError):
    pass


class SingleClass(DataError):
    pass


class FoldsExceedSamples(DataError):
    pass


class DimensionMismatch(DataError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected} feature column(s), got {got}")


class ModelFormatError(DataError):
    """Malformed or incompatible model file."""


class VersionMismatch(ModelFormatError):
    def __init__(self, found, supported):
        self.found = found
        self.supported = supported
        super().__init__(
            f"model file version {found!r} is not supported (this build reads {supported!r})"
        )


class ChecksumMismatch(ModelFormatError):
    pass


class EigenFailure(TklError):
    """Iterative eigensolver failed to converge; input is likely degenerate."""
