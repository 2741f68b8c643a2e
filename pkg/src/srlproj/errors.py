"""Exception hierarchy shared by all modules."""


class SrlError(Exception):
    """Base class for every error raised by srlproj."""


class CapExceeded(SrlError):
    """The number of ground atoms (or ground facts) exceeds the enumeration cap."""


class DimensionError(SrlError, ValueError):
    pass


class DuplicateIndex(SrlError, ValueError):
    pass


class ParseError(SrlError):
    """Model text could not be turned into a valid spec."""

    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(where + message)


class ModelSyntaxError(ParseError):
    pass


class StratificationError(ParseError):
    pass


class ArityError(ParseError):
    pass


class MissingParameter(SrlError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvalidParameter(SrlError, ValueError):
    pass


class ZeroEvidence(SrlError):
    pass


class NoMaximum(SrlError):
    pass


class NotInFragment(SrlError):
    pass


class SeparabilityError(SrlError):
    pass


class NotFullyObservable(SrlError):
    pass


class ZeroProbabilityWorld(SrlError):
    pass
