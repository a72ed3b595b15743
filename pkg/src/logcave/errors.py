"""Exception hierarchy.

Every error raised on purpose by the package derives from ``LogcaveError``.
``DomainError`` marks failures caused by the data rather than by bad calls
(the CLI maps those to exit status 1).
"""


class LogcaveError(Exception):
    pass


class DomainError(LogcaveError):
    pass


class EmptyInput(LogcaveError, ValueError):
    pass


class NonPositiveWeight(LogcaveError, ValueError):
    pass


class NonFiniteValue(LogcaveError, ValueError):
    pass


class OutOfRange(LogcaveError, ValueError):
    pass


class LengthMismatch(LogcaveError, ValueError):
    pass


class ZeroScale(LogcaveError, ValueError):
    pass


class NonPositiveR(LogcaveError, ValueError):
    pass


class NotConcave(LogcaveError, ValueError):
    pass


class NonFiniteMass(LogcaveError, ValueError):
    pass


class NotNormalized(LogcaveError, ValueError):
    pass


class DegenerateSupport(DomainError):
    """The distribution sits on a single point, so L(Q) = +inf."""


class PerfectFit(DomainError):
    """The response lies in the regression model; no error density exists."""


class NoConvergence(DomainError):
    pass
