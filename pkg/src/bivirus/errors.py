"""Exception hierarchy shared across the package."""


class BivirusError(Exception):
    """Base class for all errors raised by this package."""


# graph ingestion
class GraphError(BivirusError):
    pass


class ParseError(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class Disconnected(GraphError):
    pass


class NegativeWeight(GraphError):
    pass


# numerics
class NumericalError(BivirusError):
    pass


class NotConverged(NumericalError):
    pass


class NotIrreducible(NumericalError):
    pass


class ZeroScale(NumericalError):
    pass


class ShiftInsufficient(NumericalError):
    pass


class NotAnEquilibrium(NumericalError):
    pass


class NewtonDiverged(NumericalError):
    pass


class InternalInconsistency(NumericalError):
    pass


# state space
class StateError(BivirusError):
    pass


class StateOutOfD(StateError):
    pass


class DimensionMismatch(StateError):
    pass


class InvarianceViolated(StateError):
    pass


class LeftStateSpace(StateError):
    pass


class RateAssumptionViolated(BivirusError):
    pass


class ConfigError(BivirusError):
    pass
