"""Exception hierarchy shared by all modules."""


class WeakComoError(ValueError):
    """Base class for input and precondition errors."""


# prob_core
class EmptySpace(WeakComoError):
    pass


class NegativeMass(WeakComoError):
    pass


class ZeroTotalMass(WeakComoError):
    pass


class NullEvent(WeakComoError):
    pass


class NegativeWeight(WeakComoError):
    pass


class DegenerateNormalizer(WeakComoError):
    pass


class SpaceMismatch(WeakComoError):
    pass


# weak_comon
class QuadratureFailure(WeakComoError):
    pass


class DegenerateTail(WeakComoError):
    pass


class DegenerateVariance(WeakComoError):
    pass


class NullConditioningAtom(WeakComoError):
    pass


class ContinuitySurrogateViolated(WeakComoError):
    """Ties in values or an off-grid level where the result needs neither."""


# aggregation
class GridMisaligned(ContinuitySurrogateViolated):
    pass


class TiedValues(ContinuitySurrogateViolated):
    pass


class TooLarge(WeakComoError):
    pass


# risk_sharing
class PartitionInfeasible(WeakComoError):
    pass


class PreconditionViolated(WeakComoError):
    pass


class InvariantViolation(RuntimeError):
    """An identity that must hold by construction failed numerically."""


# io
class InputFormatError(WeakComoError):
    """A scenario, joint or configuration file could not be parsed."""
