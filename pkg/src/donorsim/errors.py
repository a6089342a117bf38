"""Exception hierarchy shared across the package."""


class DonorSimError(Exception):
    """Base class for all package errors."""


class InvariantError(DonorSimError):
    """A physics parameter or domain object violates its invariants."""


class CatalogOrderError(InvariantError):
    """Doublet centers interleave so line indices no longer follow energy order."""


class SolverError(DonorSimError):
    """A linear solve or integration failed."""


class NonUniqueSteadyStateError(SolverError):
    """The rate generator is reducible; the steady state is not unique."""


class LineshapeError(DonorSimError):
    """A spectral profile computation failed (e.g. non-unimodal profile)."""


class ConfigError(DonorSimError):
    """A run configuration is missing keys, has unknown keys, or fails validation."""
