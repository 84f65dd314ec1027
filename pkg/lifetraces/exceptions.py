"""
Exception hierarchy for lifetraces.

Plain argument-range problems (negative padding, empty targets) raise
ValueError; everything domain specific derives from LifeTracesError.
"""


class LifeTracesError(Exception):
    """Base class for all toolkit errors"""


class CapacityExceeded(LifeTracesError):
    """An automaton or state-space construction hit its configured cap"""

    def __init__(self, what: str, limit: int):
        self.what = what
        self.limit = limit
        super().__init__(f"{what} exceeded the capacity limit of {limit} states")


class BudgetExceeded(LifeTracesError):
    """A search ran out of its node or time budget"""


class AlphabetMismatch(LifeTracesError):
    """Operands are over different alphabets"""


class PatternFormatError(LifeTracesError):
    """A pattern file could not be parsed"""


class EncodingError(LifeTracesError):
    """A binary-encoded configuration is malformed"""


class RuleSpecError(LifeTracesError):
    """A rule specification file is malformed"""


class ProvenanceError(LifeTracesError):
    """Trace constants were not verified for the rule they are used with"""


class StabilityNotEstablished(LifeTracesError):
    """A periodizability check was requested without a stable level"""


class PeriodizationError(LifeTracesError):
    """A stripe could not be continued periodically, or a window is unusable"""
