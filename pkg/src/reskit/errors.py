"""Exception hierarchy shared by all reskit modules."""


class ReskitError(Exception):
    """Base class for every error raised by reskit."""


class ParseError(ReskitError):
    """A malformed input row encountered in strict mode."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.message = message


class HeaderMismatch(ReskitError):
    pass


class TimestampOrderViolation(ParseError):
    pass


class DegenerateOutageWindow(ReskitError):
    """All outages of the event start in the same minute (o_n == o_1)."""


class NoPositiveRestores(ReskitError):
    """Every restore coincides with the first restore (z == n)."""


class SigmaUndefined(ReskitError):
    """Only one positive restore offset, so the log standard deviation is undefined."""


class OutOfDomain(ReskitError):
    pass


class OutOfQuantileRange(ReskitError):
    pass


class TooFewPoints(ReskitError):
    pass


class IndexOutOfRange(ReskitError):
    pass


class NumericalFailure(ReskitError):
    pass


class InvalidSpec(ReskitError):
    pass


class MetricUndefined(ReskitError):
    pass
