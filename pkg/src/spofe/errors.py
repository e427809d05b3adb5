"""Exception types shared across the package.

Every failure the pipeline can signal deliberately derives from SpofeError,
so the CLI can map them onto exit codes: input/usage problems (ParseError,
EmptyInput) exit 2, numerical/statistical problems exit 1.
"""


class SpofeError(Exception):
    """Base class for all deliberate pipeline failures."""


class ParseError(SpofeError):
    """Malformed input file. Carries 1-based (row, col) coordinates.

    Row counts data rows (the header line, when present, is row 0 and
    reported as such for header-level problems).
    """

    def __init__(self, message, row=None, col=None):
        self.row = row
        self.col = col
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", col {col})" if col is not None else ")")
        super().__init__(message + where)


class EmptyInput(SpofeError):
    """Input contains no data rows."""


class DegenerateInput(SpofeError):
    """Input is structurally valid but has no usable content for the op."""


class BoundsError(SpofeError):
    """Index or size argument outside its documented range."""


class NumericalError(SpofeError):
    """A numerical routine failed (singular system, factorization failure)."""


class NonConvergence(NumericalError):
    """Iterative solver hit its iteration cap. Carries the best iterate."""

    def __init__(self, message, coef=None):
        self.coef = coef
        super().__init__(message)


class InsufficientData(SpofeError):
    """Too few observations to fit the requested distribution."""


class DegenerateDistribution(SpofeError):
    """Fitted distribution has zero spread; p-values would be ill-defined."""
