class MarketError(Exception):
    """Base class for every error raised by scoring_markets"""


class OutcomeSpaceMismatch(MarketError):
    """Contracts or beliefs live on different outcome spaces"""


class InvalidOutcome(MarketError):
    """Outcome is not a member of the outcome space"""


class InvalidReport(MarketError):
    """Report is outside the report space of a rule or market"""


class InvalidRule(MarketError):
    """Rule parameters are out of range or the kernel lacks a required property"""


class InvalidBelief(MarketError):
    """Belief fails validation (negative mass, bad normalisation, atoms)"""


class BeliefMismatch(MarketError):
    """Belief kind does not fit the family or outcome space"""


class UnsupportedContract(MarketError):
    """Payoff cannot be represented exactly as a piecewise contract"""


class ConjugateError(MarketError):
    """Supremum defining a convex conjugate is not safely computable"""


class NondifferentiablePoint(MarketError):

    def __init__(self, point, subgradients):
        super().__init__("Not differentiable at {}".format(point))
        self.point = point
        self.subgradients = subgradients


class LatticeViolation(MarketError):
    """Bundle is not a member of the share space"""


class ExtractionError(MarketError):

    def __init__(self, step, message, witness=None):
        super().__init__("{} step failed: {}".format(step, message))
        self.step = step
        self.witness = witness or {}


class ConfigError(MarketError):
    """Experiment config references something that does not resolve"""


class LedgerMismatch(MarketError):
    """Replayed ledger does not reproduce the stored contracts"""
