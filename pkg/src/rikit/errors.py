"""Exception types raised across the toolkit."""


class RikitError(Exception):
    """Base class for every error raised by rikit."""


class InvalidArgument(RikitError, ValueError):
    pass


class DomainError(RikitError, ValueError):
    pass


class PreconditionViolation(RikitError):
    """A theorem hypothesis or operation precondition does not hold.

    ``hypothesis`` names the failing condition so that reports and the CLI
    can say which gate was hit.
    """

    def __init__(self, message, hypothesis=None):
        super().__init__(message)
        self.hypothesis = hypothesis or message


class NonIntegrableWeight(RikitError):
    pass


class ResolutionTooCoarse(RikitError):
    pass


class UnsupportedAssociate(RikitError):
    pass


class UnsupportedSpace(RikitError):
    pass
