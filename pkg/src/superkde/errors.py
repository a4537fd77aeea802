"""Exception hierarchy shared across the package."""


class SuperkdeError(Exception):
    """Base class for all package-specific errors."""


class NonConvergence(SuperkdeError):
    """A numerical routine exhausted its budget without meeting tolerance."""


class InvalidBracket(SuperkdeError):
    """A minimization bracket does not satisfy 0 < lo < hi."""


class NotIntegrable(SuperkdeError):
    """Spatial evaluation requested for a non-integrable kernel."""


class InvalidBandwidth(SuperkdeError):
    """Bandwidth must be strictly positive."""


class NotApplicable(SuperkdeError):
    """Quantity undefined for this kernel/density combination."""


class Divergent(SuperkdeError):
    """An integral was detected to diverge under truncation growth."""


class NoFlatRegion(SuperkdeError):
    """ECF never stays below the threshold within the search cap."""


class EmptyGrid(SuperkdeError):
    """A selector was given an empty bandwidth grid."""


class DegenerateSample(SuperkdeError):
    """Sample has zero scale or too few points for the selector."""


class NoRoot(SuperkdeError):
    """Root bracketing failed in a solve-the-equation selector."""


class ConfigError(SuperkdeError):
    """Invalid experiment configuration (bad name, value, or file key)."""
