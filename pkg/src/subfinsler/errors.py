"""Exception types raised by the numerical routines."""


class SubFinslerError(Exception):
    """Base class for domain errors (mapped to CLI exit code 2)."""


class ConvexityViolation(SubFinslerError):
    def __init__(self, theta: float, value: float):
        self.theta = float(theta)
        self.value = float(value)
        super().__init__(
            f"strong convexity fails at theta={self.theta:.10g}: r(r + r'') = {self.value:.6g}"
        )


class CaseMismatch(SubFinslerError):
    pass


class SingularCoframe(SubFinslerError):
    pass


class StepUnderflow(SubFinslerError):
    pass


class ZeroMultiplier(SubFinslerError):
    pass


class InsufficientTrace(SubFinslerError):
    pass


class ProfileMismatch(SubFinslerError):
    pass


class RootIsolationFailure(SubFinslerError):
    pass


class DegenerateSegment(SubFinslerError):
    pass


class NotClosed(SubFinslerError):
    pass


class NoConvergence(SubFinslerError):
    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best
