"""Exception types shared across the package."""


class HDGAMError(Exception):
    """Base class for all package errors."""


class ConfigError(HDGAMError):
    """Invalid configuration, shapes or arguments."""


class DataError(HDGAMError):
    """Input data outside the family support, missing or non-numeric."""


class DegenerateFeature(DataError):
    """A feature has too few distinct values to carry a spline basis."""


class SolverDiverged(HDGAMError):
    """The penalized objective became non-finite."""


class VersionError(ConfigError):
    """A persisted model file has an unsupported format version."""
