"""Exception hierarchy shared by all modules."""


class AffineFlowError(Exception):
    """Base class for every error raised by this package."""


class DomainError(AffineFlowError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularMatrix(AffineFlowError, ArithmeticError):
    pass


class NotSymmetric(AffineFlowError, ValueError):
    pass


class ZeroKineticEnergy(AffineFlowError, ValueError):
    pass


class StepFailure(AffineFlowError, RuntimeError):
    """Raised when det A collapses during time stepping.

    ``time`` holds the time stamp of the last accepted step.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class QuadratureFailure(AffineFlowError, RuntimeError):
    pass


class OutsideDomain(AffineFlowError, ValueError):
    pass


class NotOnBoundary(AffineFlowError, ValueError):
    pass


class TooFewSamples(AffineFlowError, ValueError):
    pass


class WindowOutOfRange(AffineFlowError, ValueError):
    pass


class ZeroAsymptote(AffineFlowError, ValueError):
    pass


class DetNotDiverging(AffineFlowError, ValueError):
    pass


class PreconditionMu(AffineFlowError, ValueError):
    pass


class NoContraction(AffineFlowError, RuntimeError):
    def __init__(self, message, attempted_T=()):
        super().__init__(message)
        self.attempted_T = tuple(attempted_T)


class InsufficientDecay(AffineFlowError, ValueError):
    pass


class DetA1NotPositive(AffineFlowError, ValueError):
    pass


class ZeroEnergy(AffineFlowError, ValueError):
    pass


class WindowNotBracketed(AffineFlowError, ValueError):
    pass


class InsufficientSpan(AffineFlowError, ValueError):
    pass


class NotNilpotent(AffineFlowError, ValueError):
    pass


class NotUnimodular(AffineFlowError, ValueError):
    pass
