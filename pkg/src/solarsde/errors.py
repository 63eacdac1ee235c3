"""Exception types mapped to the CLI exit-code contract."""


class SolarSdeError(Exception):
    """Base class for all package errors."""


class ConfigError(SolarSdeError):
    """Invalid or missing configuration (CLI exit code 2)."""


class DataError(SolarSdeError):
    """Malformed or inconsistent input data (CLI exit code 3)."""


class ConvergenceError(SolarSdeError):
    """A numerical procedure failed to converge (CLI exit code 4)."""


class InfeasibleMomentsError(SolarSdeError):
    """Propagated moments are incompatible with the surrogate family."""
