"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible or unexpected dimensions."""


class ConfigError(ValueError):
    """A configuration value violates its documented contract."""


class DomainError(ValueError):
    """Input data is outside the domain an operation supports."""


class IngestionError(ValueError):
    """A data file could not be parsed."""


class SessionError(RuntimeError):
    """A contest session was used in an invalid state."""


class RevisionError(ValueError):
    """A revision refers to state not present in the session."""
