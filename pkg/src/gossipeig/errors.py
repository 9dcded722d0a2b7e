"""Exception types shared across the package."""


class GossipEigError(Exception):
    """Base class for all package errors."""


class InvalidParametersError(GossipEigError):
    """Inputs violate a documented precondition."""


class InvalidInputError(GossipEigError):
    """A matrix or vector argument has the wrong shape or content."""


class NotPositiveDefiniteError(GossipEigError):
    """Cholesky hit a non-positive (or non-finite) pivot.

    Carries the 0-based index of the failing pivot in ``pivot_index``.
    """

    def __init__(self, pivot_index, message=None):
        self.pivot_index = pivot_index
        super().__init__(message or f"matrix not positive definite at pivot {pivot_index}")


class SingularMatrixError(GossipEigError):
    """Triangular solve found a zero diagonal entry."""


class DegenerateGraphError(GossipEigError):
    """A sampled or supplied graph has no edges; no scheduler distribution exists."""


class NoMixingError(GossipEigError):
    """The communication graph does not mix (second eigenvalue of the averaging
    operator is 1, i.e. the graph is disconnected)."""


class InfeasibleCleanupError(GossipEigError):
    """Cleanup-phase parameters violate their feasibility requirement
    (effective intra-cluster rate does not exceed the inter-cluster rate)."""


class StepSizeTooLargeError(GossipEigError):
    """A state entry exceeded the overflow guard during the power iteration."""


class ConvergenceError(GossipEigError):
    """An iterative routine failed to converge within its sweep budget."""
