"""Exception types shared across the package.

Everything derives from :class:`CoarseRegError`, which itself derives from
``ValueError`` so callers that only know stdlib exceptions still catch
invalid-input failures.
"""


class CoarseRegError(ValueError):
    """Base class for all errors raised by this package."""


class UnsupportedDerivativeError(CoarseRegError):
    """The requested density derivative order is not available."""


class MissingCFError(CoarseRegError):
    """The density carries no characteristic function."""


class MissingDecayError(CoarseRegError):
    """Cutoff selection requires CF decay exponents that were not supplied."""


class DegenerateDenominatorError(CoarseRegError):
    """A ratio denominator fell below the degeneracy threshold."""


class DegenerateDesignError(CoarseRegError):
    """A least-squares design has (numerically) no predictor variation."""


class ResolutionError(CoarseRegError):
    """A quadrature grid is too coarse for the requested inversion."""


class DataFormatError(CoarseRegError):
    """An input file failed validation.

    Carries enough location information (file, line, column) for the CLI to
    emit a machine-readable error record.
    """

    def __init__(self, message, *, file=None, line=None, column=None):
        self.file = file
        self.line = line
        self.column = column
        where = file or "<data>"
        if line is not None:
            where += f":{line}"
        if column is not None:
            where += f" (column {column!r})"
        super().__init__(f"{where}: {message}")
        self.bare_message = message

    def record(self):
        """Machine-readable dict for CLI error output."""
        return {
            "error": self.bare_message,
            "file": self.file,
            "line": self.line,
            "column": self.column,
        }
