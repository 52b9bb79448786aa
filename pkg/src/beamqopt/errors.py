"""Exception types shared across the package."""


class BeamqoptError(Exception):
    """Base class for all package errors."""


class ConfigurationError(BeamqoptError, ValueError):
    """Invalid generator, mixer or solver configuration."""


class DomainError(BeamqoptError, ValueError):
    """Argument outside the domain of an operation (bad id, bad length, bad factor)."""


class CapacityError(BeamqoptError, RuntimeError):
    """Problem too large for the dense statevector or brute-force paths."""
