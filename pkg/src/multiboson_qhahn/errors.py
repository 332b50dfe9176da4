"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: ``ConfigError`` -> 2,
``MathDomainError`` and subclasses -> 3, ``NonConvergenceError`` -> 4.
"""


class QHahnError(Exception):
    """Base class for all library errors."""

    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class ConfigError(QHahnError):
    kind = "config"


class MathDomainError(QHahnError, ValueError):
    kind = "domain"


class PoleError(MathDomainError):
    kind = "pole"


class FixedPointError(MathDomainError):
    kind = "fixed_point"


class DegenerateDataError(MathDomainError):
    kind = "degenerate"


class NoPositiveMeasure(MathDomainError):
    """Raised when the Pearson data do not define a positive measure.

    The offending classification is kept in ``spec`` (may be None).
    """

    kind = "no_positive_measure"

    def __init__(self, message, spec=None):
        super().__init__(message)
        self.spec = spec


class UnsupportedError(MathDomainError):
    kind = "unsupported"


class ModelError(MathDomainError):
    kind = "model"


class NonConvergenceError(QHahnError, ArithmeticError):
    kind = "non_convergence"
