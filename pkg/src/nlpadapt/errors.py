"""Exception types raised across the package."""


class NlpAdaptError(Exception):
    """Base class for all package errors."""


class NonFiniteDerivative(NlpAdaptError):
    pass


class Diverged(NlpAdaptError):
    """A simulated state left the admissible magnitude range.

    The partially recorded trace, if any, is attached as ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class UnknownChannel(NlpAdaptError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptyWindow(NlpAdaptError, ValueError):
    pass


class WindowOutOfRange(NlpAdaptError, ValueError):
    pass


class InsufficientSpan(NlpAdaptError, ValueError):
    pass


class TraceTooShort(NlpAdaptError, ValueError):
    pass


class SingularControl(NlpAdaptError):
    pass


class DegenerateGrid(NlpAdaptError, ValueError):
    pass


class DependenceViolation(NlpAdaptError, ValueError):
    pass


class SlipOutOfRange(NlpAdaptError, ValueError):
    pass


class StoppedVehicle(NlpAdaptError):
    """Longitudinal speed reached the cut-off; a clean termination."""


class NotTerminated(NlpAdaptError):
    pass


class ConfigError(NlpAdaptError):
    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line


class PreflightFailed(NlpAdaptError):
    pass
