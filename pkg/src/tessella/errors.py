"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class BudgetExceeded(RuntimeError):
    """A resource budget ran out before the computation could finish.

    Callers must treat this as "unknown", never as a negative answer.
    """

    def __init__(self, message: str, **counts):
        super().__init__(message)
        self.counts = counts


class Inconclusive(RuntimeError):
    """A bounded search ended without a decision (e.g. propagation depth too small)."""


class FormatError(ValueError):
    """Malformed or unsupported file content."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field
