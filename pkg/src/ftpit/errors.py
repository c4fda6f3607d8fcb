"""Exception hierarchy shared across the package."""


class FtpitError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(FtpitError):
    """Invalid or inconsistent setup: unsupported rule, mismatched grids, bad config."""


class NumericalError(FtpitError):
    """A numerical procedure broke down (singular factorization, singular solve)."""


class SolverError(FtpitError):
    """An implicit or iterative solver failed to converge."""


class OracleError(FtpitError):
    """A test-oracle computation (direct collocation solve) did not converge."""


class UsageError(FtpitError):
    """Operations combined in an unsupported way (e.g. mismatched run configs)."""
