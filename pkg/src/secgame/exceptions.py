"""Exception types shared across the package."""


class SecgameError(Exception):
    """Base class for all package errors."""


class DimensionError(SecgameError, ValueError):
    """Operands have incompatible or non-square dimensions."""


class DomainError(SecgameError, ValueError):
    """A numeric argument is outside the operation's domain (e.g. non-PD matrix)."""


class ConfigError(SecgameError, ValueError):
    """An experiment or solver configuration is invalid or infeasible."""


class CoordinationDataError(SecgameError, ValueError):
    """Cross-link data required by a selection criterion is missing."""
