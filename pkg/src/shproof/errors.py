"""Exception types raised across the package."""

from .interval import (  # noqa: F401  (re-exported)
    DivisionByIntervalContainingZero,
    DomainViolation,
    NotCertifiablyInvertible,
)


class DomainMismatch(ValueError):
    """Sequences live on squares of different half-width."""


class NoConvergence(RuntimeError):
    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(f"{message} (final residual {residual:.3e})")


class NewtonDiverged(RuntimeError):
    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual {residual:.3e})")


class SingularJacobian(ArithmeticError):
    pass


class RankCertificationFailed(ArithmeticError):
    pass


class ExactSolveOverflow(OverflowError):
    pass


class TruncationPreconditionViolated(ValueError):
    pass


class CertificationFailed(RuntimeError):
    def __init__(self, message: str, worst_interval=None, margin: float = float("nan")):
        self.worst_interval = worst_interval
        self.margin = margin
        super().__init__(message)


class NegativeInnerProduct(UserWarning):
    """An inner-product enclosure reached below zero and was clamped."""


class SingularTruncation(ArithmeticError):
    pass


class Infeasible(RuntimeError):
    def __init__(self, message: str, margin: float = float("nan")):
        self.margin = margin
        super().__init__(message)


class CertificateSchemaError(ValueError):
    pass


class TraceCheckFailed(ValueError):
    """The sequence does not have exactly vanishing trace."""
