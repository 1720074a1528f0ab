"""Exception types shared across the package."""


class DarpkitError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DarpkitError):
    """Malformed instance file or solution/assignment file."""


class DataError(DarpkitError):
    """Inconsistent problem data or configuration."""


class InfeasibleError(DarpkitError):
    """No feasible solution exists under the requested settings."""


class SolutionError(DarpkitError):
    """A solver assignment does not decode to a valid set of tours."""
