"""Exception hierarchy.

Two broad families matter for the CLI exit codes: configuration problems
(exit 2) and data/computation problems (exit 3). The two "nothing passed
the plausibility rule" outcomes get their own exit code (4).
"""


class UrbanClustersError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(UrbanClustersError):
    """Invalid configuration file, flag or API argument."""


class DataError(UrbanClustersError):
    """Invalid, degenerate or unreadable input data."""


# -- parsing / grids ---------------------------------------------------------

class ParseError(DataError):
    pass


class MissingHeaderField(ParseError):
    pass


class ValueOutOfRange(DataError):
    pass


class InvalidPolygon(DataError):
    pass


class GeographicCrs(DataError):
    """Street input looks like lon/lat; a projected CRS is required."""


# -- generic argument/data problems ------------------------------------------

class EmptyInput(DataError):
    pass


class NonPositiveValue(DataError):
    pass


class DepthZero(ConfigError):
    pass


class NonPositiveRegionArea(ConfigError):
    pass


# -- calibration ---------------------------------------------------------------

class DegenerateDesign(DataError):
    """Rank-deficient quadratic design (fewer than 3 distinct x values)."""


# -- street network ------------------------------------------------------------

class TooFewSites(DataError):
    pass


class AllCollinear(DataError):
    pass


class NoFiniteEdges(DataError):
    pass


class LevelOutOfRange(ConfigError):
    pass


# -- power law -----------------------------------------------------------------

class TooFewValues(DataError):
    pass


class DegenerateSample(DataError):
    pass


class InvalidBootstrapCount(ConfigError):
    pass


# -- fixtures ------------------------------------------------------------------

class InfeasibleConstraints(UrbanClustersError):
    """A fixture's aggregate constraints cannot be satisfied (transcription bug)."""


# -- pipeline ------------------------------------------------------------------

class NoPlausibleThreshold(UrbanClustersError):
    pass


class NoPlausibleLevel(UrbanClustersError):
    pass


class RunDirLocked(DataError):
    """The run directory is owned by another process (lock file present)."""
