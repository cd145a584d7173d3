"""Exception types shared across the package."""


class SeqQuantError(Exception):
    """Base class for all package-specific errors."""


class NonFiniteDivergenceError(SeqQuantError):
    """A Kullback-Leibler divergence between raw observation models diverges,
    typically because one support is not contained in the other."""


class UnsupportedFamilyError(SeqQuantError):
    """An operation was asked to run on a distribution family it does not support."""


class DegenerateRegionError(SeqQuantError):
    """A coefficient vector produced an empty acceptance region: the quantizer
    is constant and carries no information."""


class AlphabetTooLargeError(SeqQuantError):
    """Exhaustive quantizer enumeration was requested for an alphabet with more
    points than the enumeration limit."""


class ZeroLikelihoodError(SeqQuantError):
    """Every hypothesis assigns probability zero to an observed message, so the
    posterior update is undefined."""


class HorizonExceededError(SeqQuantError):
    """A sequential trial failed to stop within the configured step budget."""


class UninformativeStageOneError(SeqQuantError):
    """The first-stage quantizer fails to separate some pair of hypotheses, so
    the preliminary decision could never be reached."""


class NonIntegerBlockCountsError(SeqQuantError):
    """The block length is not a common denominator of the randomization
    weights, so an exact block schedule does not exist."""


class ZeroInformationError(SeqQuantError):
    """A risk formula was evaluated with a zero information number."""


class MissingConstantError(SeqQuantError):
    """The centralized benchmark requires a scenario-specific leading constant
    that was not supplied."""


class ConfigError(SeqQuantError):
    """A configuration file or command line could not be parsed or validated."""
