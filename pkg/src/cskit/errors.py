"""Exception types shared across the toolkit."""


class CskitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CskitError):
    """Raised when inputs are structurally incompatible (e.g. symbol-table
    mismatch between graphs being composed)."""


class ParseError(CskitError):
    """Raised on malformed text inputs; carries a 1-based line number when
    one is known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
