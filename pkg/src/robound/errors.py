"""Exception hierarchy."""


class RoboundError(Exception):
    """Base class for all toolkit errors."""


class SpaceMismatch(RoboundError, ValueError):
    """Vector or matrix incompatible with the space (shape or field)."""


class NotHermitian(RoboundError, ValueError):
    pass


class NotNegDef(RoboundError):
    """A form that must be negative definite is not."""

    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class MNNotNegDef(NotNegDef):
    """``M + N`` is not negative definite."""


class NotIndefinite(RoboundError):
    pass


class NegDefInput(RoboundError):
    pass


class DomainViolation(RoboundError):
    pass


class AmbiguousImage(RoboundError):
    """A multi-valued relation produced more than one image."""


class PreconditionNotMet(RoboundError):
    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = tuple(failed)


class PhiViolatesQC(RoboundError):
    def __init__(self, message, xi=None, value=None):
        super().__init__(message)
        self.xi = xi
        self.value = value


class ConstructionCheckFailed(RoboundError):
    def __init__(self, message, check=None):
        super().__init__(message)
        self.check = check


class AnchorViolatesM(RoboundError):
    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class CaseAssertionFailed(RoboundError):
    pass


class AlgebraicLoop(RoboundError):
    """The loop equations have no unique solution at some time step."""


class InadmissibleSpec(RoboundError):
    pass


class ConfigError(RoboundError, ValueError):
    pass
