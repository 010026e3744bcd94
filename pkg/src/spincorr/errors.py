"""Exception hierarchy shared by all pipeline stages."""


class SpincorrError(Exception):
    """Base class for all package errors."""


class ConfigError(SpincorrError):
    """A configuration value violates its invariants."""


class DomainError(SpincorrError):
    """A numeric argument lies outside its mathematical domain."""


class DegenerateTrack(SpincorrError):
    """Track vectors are (anti)parallel within tolerance; geometry undefined."""


class InvalidState(SpincorrError):
    """A density matrix violates hermiticity, trace or positivity bounds."""


class SchemaMismatch(SpincorrError):
    """An input file does not match the expected schema/version."""


class WeightOverflow(SpincorrError):
    """An event carries an analyzing power below the admitted minimum."""


class BinningError(SpincorrError):
    """A correlation angle falls outside the binnable range [0, 180] deg."""


class MissingBin(SpincorrError):
    """A CHSH argument requires a bin with no populated entry."""


class InsufficientData(SpincorrError):
    """Too few populated bins (or events) for the requested statistic."""
