"""Exception hierarchy shared by every module."""


class CrossPermError(Exception):
    """Base class for all library errors."""


class DegenerateError(CrossPermError):
    """The test statistic is undefined for the given data."""


class ConstantVector(DegenerateError):
    pass


class DegenerateCorrelation(DegenerateError):
    pass


class DegenerateVariances(DegenerateError):
    pass


class SingularCovariance(DegenerateError):
    pass


class TooFewObservations(CrossPermError, ValueError):
    pass


class InvalidSample(CrossPermError, ValueError):
    pass


class MissingPair(CrossPermError, KeyError):
    pass


class ParseError(CrossPermError, ValueError):
    """Malformed input file. ``row`` and ``col`` are 1-based."""

    def __init__(self, message, row=None, col=None):
        self.row = row
        self.col = col
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {col})" if col is not None else ")")
        super().__init__(message + where)


class RaggedRows(ParseError):
    pass


class NonNumericCell(ParseError):
    pass


class LabelMismatch(CrossPermError, ValueError):
    pass
