"""Exception types shared across the package."""


class DGreedyError(Exception):
    """Base class for all package errors."""


class InvalidDistribution(DGreedyError, ValueError):
    pass


class ZeroMeanDegree(DGreedyError, ValueError):
    pass


class AlphaOutOfRange(DGreedyError, ValueError):
    pass


class DegenerateStage(DGreedyError):
    pass


class NotConverged(DGreedyError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NegativeMass(DGreedyError, ValueError):
    pass


class AlreadyQuasiOptimal(DGreedyError):
    pass


class OddDegreeSum(DGreedyError, ValueError):
    pass


class AttemptsExhausted(DGreedyError):
    pass


class InvalidSequence(DGreedyError, ValueError):
    pass


class BudgetExceeded(DGreedyError):
    """Raised by the exact solver; ``best`` holds the largest independent set size found."""

    def __init__(self, message, best=0, upper=None):
        super().__init__(message)
        self.best = best
        self.upper = upper


class TooLarge(DGreedyError, ValueError):
    pass


class InvalidInputs(DGreedyError, ValueError):
    pass
