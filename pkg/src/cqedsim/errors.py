"""Exception types shared across the package."""


class SimError(Exception):
    """Base class for all package errors."""


class DomainError(SimError, ValueError):
    """Input lies outside an operation's physical or mathematical domain.

    Covers invalid truncation dimensions, singular detunings, degenerate
    transformations, missing idle points, unsupported drive layouts and
    similar parameter-level problems.
    """


class ContractError(SimError, RuntimeError):
    """A numerical contract failed (Hermiticity, norm drift, unitarity, step size)."""


class ConfigError(SimError, ValueError):
    """Bad run configuration: unknown key, unparsable value, duplicate keys."""


class NoDataError(SimError, ValueError):
    """An output writer received nothing it can render."""
