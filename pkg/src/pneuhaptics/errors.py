"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: validation-type errors
(DomainError, ConfigError, ProtocolError) exit 2, OSError exits 3,
AnalysisError exits 4.
"""


class HapticsError(Exception):
    """Base class for all package errors."""


class DomainError(HapticsError):
    """An argument is outside the physical or mathematical domain of an operation."""


class ConfigError(HapticsError):
    """A configuration object, table, or file is malformed."""


class ProtocolError(HapticsError):
    """A frame or command violates the wire/controller protocol."""


class AnalysisError(HapticsError):
    """An analysis cannot be carried out on the given data."""


class ClockError(DomainError):
    """A monotonic clock was driven backwards."""
