"""Exception types shared across the workbench."""


class RedbenchError(Exception):
    """Base class for all workbench errors."""


class ConfigError(RedbenchError, ValueError):
    """A parameter or configuration value is out of its valid range."""


class ParseError(RedbenchError, ValueError):
    """An input file or script line could not be parsed.

    Messages include the 1-based line number of the offending line.
    """


class StabilityError(RedbenchError, ValueError):
    """A numerical step size violates the scheme's stability bound."""


class NoEquilibriumError(RedbenchError, ValueError):
    """The fluid model has no fixed point under the given parameters."""


class DisjointRangeError(RedbenchError, ValueError):
    """Two time series share no overlapping time range to compare on."""
