"""Exception types raised across the package."""


class JsrecError(Exception):
    """Base class for package errors."""


class AmbiguousSign(JsrecError, ValueError):
    """An entry that should carry a sign is numerically zero."""


class AmbiguousSupport(JsrecError, ValueError):
    """A row declared to be in the support is identically zero."""


class DegenerateRow(JsrecError, ValueError):
    """A matrix row is zero, so its sign under any combination is undefined."""


class BudgetExceeded(JsrecError):
    """An exhaustive enumeration would exceed its configured budget."""


class SearchExhausted(JsrecError):
    """A randomized search ran out of attempts without finding a witness."""


class SolverError(JsrecError):
    """A solver did not reach an optimal point.

    The offending :class:`~jsrec.bpsolve.Status` is kept in ``status``.
    """

    def __init__(self, message, status=None, column=None):
        super().__init__(message)
        self.status = status
        self.column = column


class ConfigError(JsrecError, ValueError):
    """An experiment configuration is malformed or violates its invariants."""


class NumericFailureRate(JsrecError):
    """Too many solver calls ended in numeric failure during an experiment.

    Results computed so far are kept in ``rows``.
    """

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = rows or []
