"""Exception types shared across the toolkit.

The CLI maps these onto distinct exit codes, so raising the right class
matters more than the message text.
"""


class QSwitchError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(QSwitchError, ValueError):
    """Operands have incompatible or invalid shapes."""


class BoundViolationError(QSwitchError, ValueError):
    """A control amplitude or rate lies outside its declared bounds."""


class ReachabilityError(QSwitchError):
    """The requested transfer is provably infeasible for the given noise."""


class NumericalError(QSwitchError):
    """A numerical routine failed to converge or produced invalid values."""


class ConfigError(QSwitchError, ValueError):
    """An experiment configuration failed to parse or validate."""
