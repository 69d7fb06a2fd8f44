"""Exception hierarchy shared by all modules.

Each class maps onto one CLI exit code (see ``cli.EXIT_CODES``).
"""


class ZetaLadderError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ZetaLadderError, ValueError):
    """An argument lies outside the domain of the operation."""


class AccuracyError(ZetaLadderError, ArithmeticError):
    """The requested accuracy cannot be delivered with the current configuration."""


class BracketError(ZetaLadderError, ArithmeticError):
    """A root bracket does not straddle a sign change."""


class ConvergenceError(ZetaLadderError, ArithmeticError):
    """An iterative procedure ran out of budget.

    ``value`` and ``error_estimate`` carry the best result reached so far.
    """

    def __init__(self, message, value=float("nan"), error_estimate=float("inf")):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class CacheError(ZetaLadderError, OSError):
    """Base class for moment-table persistence problems."""


class CacheVersionError(CacheError):
    pass


class CacheMonotonicityError(CacheError):
    pass


class CacheFingerprintError(CacheError):
    pass


class CacheFormatError(CacheError):
    pass
