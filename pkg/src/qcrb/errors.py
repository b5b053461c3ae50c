"""Exception hierarchy shared by all qcrb modules."""


class QcrbError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(QcrbError):
    """Operands act on Hilbert spaces of different dimensions."""


class NotHermitian(QcrbError):
    """Matrix violates the hermiticity tolerance."""


class DomainError(QcrbError):
    """A scalar function is undefined at an eigenvalue of its argument."""


class InvalidMeasurement(QcrbError):
    """Kraus operators do not resolve the identity."""


class ZeroProbabilityOutcome(QcrbError):
    """Conditioning on an outcome whose probability is below the floor."""


class GridPointNotFound(QcrbError):
    """Evaluation point is not a member of the parameter grid."""


class GridMismatch(QcrbError):
    """Two families do not share the same parameter grid."""


class NotUnbiased(QcrbError):
    """Estimator fails the unbiasedness tolerance on the grid."""


class ValidationFailed(QcrbError):
    """A constructed object fails its defining conditions."""


class RangeViolation(QcrbError):
    """Lambda rows leave the column space of the information matrix."""


class SingularMixing(QcrbError):
    """Mixing matrix is singular at some grid point."""


class SingularState(QcrbError):
    """A state that must be invertible is singular within the floor."""


class NonPositiveProbability(QcrbError):
    """Probability vector has an entry at or below zero."""


class ZeroWeight(QcrbError):
    """Mixture weight below the floor where its log-derivative is needed."""


class ParseError(QcrbError):
    """Scenario file is not syntactically valid."""


class ValidationError(QcrbError):
    """Scenario file is structurally valid but semantically inconsistent.

    Carries the path of the offending field for diagnostics.
    """

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")
