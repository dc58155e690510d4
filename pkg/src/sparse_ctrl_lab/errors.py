"""Exception hierarchy shared by all modules."""


class SparseCtrlError(Exception):
    """Base class for library errors."""


class ParameterError(SparseCtrlError, ValueError):
    """An argument is outside its admissible range."""


class CapacityError(SparseCtrlError):
    """An exact computation would exceed its enumeration budget."""


class MatchingError(SparseCtrlError):
    """The configuration model could not produce a simple graph."""


class NumericalError(SparseCtrlError):
    """A matrix decomposition failed."""


class ModelAssumptionError(SparseCtrlError):
    """Inputs violate an assumption the bound formulas rely on."""


class InfeasibleError(SparseCtrlError):
    """Input design terminated above the residual tolerance.

    Carries the best plan found, its residual and, when available, the
    controllability verdict for the instance so callers can tell a greedy
    failure apart from a genuinely uncontrollable system.
    """

    def __init__(self, message, plan=None, residual=None, verdict=None):
        super().__init__(message)
        self.plan = plan
        self.residual = residual
        self.verdict = verdict
