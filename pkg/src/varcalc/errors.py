"""Exception hierarchy shared by all varcalc modules."""


class VarcalcError(Exception):
    """Base class for every error raised by the package."""


class DomainError(VarcalcError, ValueError):
    """A point lies on or outside a chart domain, or a stencil would leave it."""


class UnsupportedError(VarcalcError):
    """The requested chart kind, dimension or quantity is not available."""


class EvaluationError(VarcalcError):
    """A user-supplied map produced a non-finite value."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NotAttainedError(VarcalcError):
    """A requested level is never reached on the integrated range."""


class ConfigError(VarcalcError):
    """Invalid run configuration (CLI exit code 2)."""
