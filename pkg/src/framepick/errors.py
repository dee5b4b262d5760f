"""Exception hierarchy.

Everything derives from :class:`FramePickError`; validation problems are
also ``ValueError`` subclasses so generic callers can catch them as such.
"""


class FramePickError(Exception):
    """Base class for all package errors."""


class ValidationError(FramePickError, ValueError):
    """Invalid input values or parameters."""


class InputShapeError(ValidationError):
    pass


class InvalidSpecError(ValidationError):
    pass


class ParameterError(ValidationError):
    pass


class EmptyInputError(ValidationError):
    pass


class DegenerateFrameError(ValidationError):
    pass


class DegenerateSpectrumError(ValidationError):
    pass


class InsufficientLengthError(ValidationError):
    pass


class GenerationError(ValidationError):
    pass


class UnattainableTargetError(FramePickError):
    """No lambda in the search range reaches the requested peak count."""

    def __init__(self, target, max_count):
        super().__init__(
            f"cannot detect {target} peaks; at most {max_count} at the smallest lambda"
        )
        self.target = target
        self.max_count = max_count


class FormatError(FramePickError, ValueError):
    """Malformed input file; `line` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
