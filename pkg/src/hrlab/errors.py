"""Exception hierarchy shared by the library and the CLI."""


class HrlabError(Exception):
    """Base class for every error raised by hrlab."""


class FormParseError(HrlabError, ValueError):
    """A linear-form expression could not be parsed.

    ``position`` is a 0-based offset into the original text.
    """

    def __init__(self, message: str, position: int | None = None) -> None:
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class HypothesisError(HrlabError, ValueError):
    """The forms or moduli do not satisfy the preconditions of an operation."""


class BudgetExceeded(HrlabError):
    """Work or memory estimate exceeds the configured cap."""


class CertificateFormatError(HrlabError, ValueError):
    """Certificate is malformed or carries an unknown schema version."""
