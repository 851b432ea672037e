"""Exception hierarchy.

Every data-level failure derives from :class:`BeatmapsError` so the CLI can
map it to a single exit code.
"""


class BeatmapsError(ValueError):
    """Base class for all data errors raised by the package."""


# archive / data model
class MissingFile(BeatmapsError):
    pass


class MalformedManifest(BeatmapsError):
    pass


class SizeMismatch(BeatmapsError):
    pass


class NonUniformTimeAxis(BeatmapsError):
    pass


class EmptyAxis(BeatmapsError):
    pass


class NonFiniteValue(BeatmapsError):
    pass


class IoFailure(BeatmapsError):
    pass


class OutOfRange(BeatmapsError):
    pass


class EmptySelection(BeatmapsError):
    pass


class Underdetermined(BeatmapsError):
    pass


class NonPositive(BeatmapsError):
    pass


# transforms
class TooShort(BeatmapsError):
    pass


class NonPositiveFrequency(NonPositive):
    pass


class NonPositiveScale(NonPositive):
    pass


# diagnostics
class NonPositiveInput(NonPositive):
    pass


class DegenerateFit(BeatmapsError):
    pass


class DivisionByNegligible(BeatmapsError):
    pass


# simulation
class UnresolvedGrid(BeatmapsError):
    pass


class ConfigError(BeatmapsError):
    pass
