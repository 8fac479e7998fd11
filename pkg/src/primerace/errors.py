"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: DataError -> 3, EnvelopeError -> 4.
"""


class PrimeRaceError(Exception):
    """Base class for all library errors."""


class DataError(PrimeRaceError):
    """Malformed or inconsistent input data (zero files, labels, tables)."""


class ParseError(DataError):
    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class EnvelopeError(PrimeRaceError):
    """A request outside the supported numerical envelope."""


class PrecisionError(PrimeRaceError):
    """Relation search asked for more than the available digits can support."""


class IncompleteTableError(DataError):
    """A zero table is not certified complete to the requested height."""


class MissedZeroError(DataError):
    """The zero finder's count disagrees with the counting formula."""


class InfeasibleError(PrimeRaceError):
    """Geometric construction with no solution (e.g. an unreachable robot-arm target)."""


class ConvergenceError(PrimeRaceError):
    """A numerical integral or limit failed to settle within its envelope."""
