"""Exception hierarchy shared by all clickpol modules."""


class ClickPolError(Exception):
    """Base class for every error raised by clickpol."""


class InvalidArgument(ClickPolError, ValueError):
    pass


class InvalidState(InvalidArgument):
    """State parameters outside the normalizable region (|lambda| >= 1)."""


class NumericDegeneracy(ClickPolError, ArithmeticError):
    """A computation hit a singular matrix or a roundoff-dominated result."""


class InsufficientData(ClickPolError, ValueError):
    """The data (or the number of bins) cannot support the requested moments."""


class NoThreshold(ClickPolError, ValueError):
    """A noise threshold was requested where the variance never changes sign."""
