"""Exception types shared across the toolkit.

The CLI maps these onto its exit codes, so keep the hierarchy flat.
"""


class ConfigError(ValueError):
    """Invalid simulation/analysis configuration (CLI exit 2)."""


class ParseError(ValueError):
    """Malformed fire-record input (CLI exit 2)."""


class InsufficientDataError(ValueError):
    """Too few usable points/records to compute a statistic (CLI exit 4)."""


class DegenerateInputError(ValueError):
    """Statistic undefined for the given input, e.g. zero variance."""
