"""Exception types raised by felprob."""


class FelprobError(Exception):
    """Base class for all felprob errors."""


class DomainError(FelprobError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class CapacityError(FelprobError, ValueError):
    """A computation was requested for an input larger than its documented cap."""


class MeshParseError(FelprobError, ValueError):
    """Malformed mesh file. Carries the 1-based line and column of the problem."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
