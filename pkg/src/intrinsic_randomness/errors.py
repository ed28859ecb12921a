"""Exception hierarchy shared by all modules."""


class RandomnessError(ValueError):
    """Base class for domain errors raised by this package."""


class EvenPartyCount(RandomnessError):
    pass


class PartyCountOutOfRange(RandomnessError):
    pass


class SignallingDetected(RandomnessError):
    pass


class NegativeProbability(RandomnessError):
    pass


class NotNormalized(RandomnessError):
    pass


class WeightSumMismatch(RandomnessError):
    pass


class NotMaximallyViolating(RandomnessError):
    pass


class NonMerminInput(RandomnessError):
    pass


class DimensionMismatch(RandomnessError):
    pass


class IndexOutOfRange(RandomnessError):
    pass


class MerminConditionsNotImposed(RandomnessError):
    pass


class InfeasibleProgram(RandomnessError):
    pass


class UnboundedProgram(RandomnessError):
    pass


class NumericallyUnstable(RandomnessError):
    pass
