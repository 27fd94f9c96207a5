"""Exception hierarchy shared by every module."""


class TolBipError(Exception):
    """Base class for all package errors."""


class DomainError(TolBipError, ValueError):
    """An argument is outside the domain of the operation."""


class CapacityError(TolBipError):
    """A brute-force routine was asked to run above its configured cap."""


class ConfigurationError(TolBipError, ValueError):
    """Parameters are individually valid but cannot be used together."""


class VerificationFailure(TolBipError, AssertionError):
    """A proof inequality failed on a concrete instance.

    The offending report is attached as ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
