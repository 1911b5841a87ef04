"""Exception types shared across the toolkit."""


class ParseError(ValueError):
    """Malformed input text; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(ValueError):
    """Well-formed input that violates a contract (shape, range, count)."""


class ConvergenceError(RuntimeError):
    """Iterative solver missed its tolerance; carries the final residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NumericalError(RuntimeError):
    """Non-finite value produced during training or scoring."""
