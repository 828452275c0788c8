"""Exception types. CLI exit codes key off these classes."""


class MetaError(Exception):
    """Base class for errors raised by mlmeta."""


class DataError(MetaError, ValueError):
    """Invalid or inconsistent input data (exit code 2)."""


class ConvergenceError(MetaError, RuntimeError):
    """Variance-component optimizer failed to converge (exit code 3)."""


class RankDeficiencyError(MetaError, ValueError):
    """Design matrix without full column rank (exit code 4)."""


class SingularBlockError(MetaError, ValueError):
    """A marginal covariance block has a non-positive diagonal term."""
