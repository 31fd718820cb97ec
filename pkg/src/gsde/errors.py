"""Exception taxonomy shared across the package."""


class GsdeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(GsdeError):
    """Invalid configuration: wrong kind, unknown key, inconsistent settings."""


class DomainError(GsdeError):
    """Input outside an operation's domain: bad shapes, bad bounds, empty data."""


class NumericalError(GsdeError):
    """Non-finite value encountered where a finite one is required."""
