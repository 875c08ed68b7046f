"""Exception types shared across the library."""


class AggseekError(Exception):
    """Base class for all library errors."""


class InvalidEdge(AggseekError):
    """Edge list contains a self-loop, duplicate, or out-of-range index."""


class DisconnectedGraph(AggseekError):
    """Communication graph is not connected."""


class DimensionMismatch(AggseekError):
    """Vector or matrix dimensions are inconsistent."""


class IndexOutOfRange(AggseekError):
    """Player index outside 0..N-1."""


class IntervalUndefined(AggseekError):
    """Gain interval does not exist (strong monotonicity margin missing)."""


class NotStronglyMonotone(AggseekError):
    """Per-player admissibility matrix is not positive definite."""


class SingularSystem(AggseekError):
    """Equilibrium linear system is singular or numerically unreliable."""


class NonFiniteState(AggseekError):
    """Simulation state diverged or became non-finite."""


class InfeasibleInitialState(AggseekError):
    """Initial action profile violates the action set of a projected run."""


class PointOutsideSet(AggseekError):
    """Base point of a tangent-cone projection is not in the set."""


class GridMismatch(AggseekError):
    """Two traces do not share the same time grid."""


class NonPositiveScaling(AggseekError):
    """Replica scaling factors must be strictly positive."""


class WeightsNotUnit(AggseekError):
    """Operation requires unit aggregation weights (h_i = 1)."""


class MissingEquilibrium(AggseekError):
    """Equilibrium data required for a deviation computation is missing."""


class CertificateFailure(AggseekError):
    """Stability certificate could not be established (P not positive definite)."""


class InfeasiblePlayer(AggseekError):
    """Randomized player parameters could not be made feasible."""


class ConfigError(AggseekError):
    """Run configuration is malformed or inconsistent."""
