"""Error taxonomy shared by the library, the service, and the CLI.

Exit-code / HTTP mapping is owned by the callers; the core only raises.
"""


class InkbridgeError(Exception):
    """Base class for all errors raised by this package."""

    category = "error"


class ValidationFailure(InkbridgeError):
    """Input violates a documented invariant (bad id, bad range, bad shape)."""

    category = "validation"


class InputOutputFailure(InkbridgeError):
    """A file could not be read or written."""

    category = "io"


class NumericalFailure(InkbridgeError):
    """A numerical operation left its domain (non-PSD matrix, non-finite value)."""

    category = "numerical"
