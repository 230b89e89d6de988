"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation and configuration problems
exit 1, runtime/endpoint failures exit 2.
"""


class AnchorlabError(Exception):
    """Base class for all package errors."""


class ValidationError(AnchorlabError):
    """Input data violates a schema or invariant."""


class ConfigError(AnchorlabError):
    """A configuration value or combination of values is unusable."""


class EndpointError(AnchorlabError):
    """A remote endpoint failed after bounded retries."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status
