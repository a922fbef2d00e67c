"""Exception types raised across the package."""


class SparseRegError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(SparseRegError):
    """Inputs whose shapes do not agree."""


class IllPosed(SparseRegError):
    """Unpenalized least-squares problem without a unique minimizer."""


class CombinatorialBudgetExceeded(SparseRegError):
    """Subset enumeration would exceed the configured evaluation cap."""


class NonNormalizedDiagonal(SparseRegError):
    """Operation requires a unit-diagonal matrix."""


class MissingQuantity(SparseRegError):
    """A required design-matrix quantity is absent or certified in the wrong direction."""


class DegenerateDenominator(SparseRegError):
    """A ratio quantity has a vanishing denominator and no finite value."""


class EmptyFold(SparseRegError):
    """Cross-validation requested with more folds than samples."""


class CertificateNotFound(SparseRegError):
    """Greedy correction trace too short to certify the residual-correlation bound."""


class ZeroColumnScale(SparseRegError):
    """Design matrix has no nonzero column."""


class ParseError(SparseRegError):
    """Malformed numeric text input."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)


class EmptyDataset(SparseRegError):
    """Dataset file contains no usable rows."""


class DomainError(SparseRegError):
    """Formula evaluated outside its valid domain."""
