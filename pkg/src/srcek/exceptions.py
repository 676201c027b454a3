"""Exception types raised by srcek."""


class DataValidationError(ValueError):
    """Input data violates a structural requirement (shape, finiteness, sign)."""


class CsvFormatError(ValueError):
    """A CSV file could not be parsed into a numeric dataset."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite intermediates or results."""


class PerfectFitError(ArithmeticError):
    """Cross-validation error is exactly zero, so a log/gradient is undefined."""


class LineSearchError(RuntimeError):
    """Backtracking found no acceptable step above the minimum step size."""
