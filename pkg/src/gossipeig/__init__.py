"""Seed-deterministic simulator for asynchronous gossip eigenvector
computation and spectral community detection, with an in-repo dense
eigensolver oracle."""

from . import community, harness, linalg, model, oja, orth, params, rng
from .errors import (
    ConvergenceError,
    DegenerateGraphError,
    GossipEigError,
    InfeasibleCleanupError,
    InvalidInputError,
    InvalidParametersError,
    NoMixingError,
    NotPositiveDefiniteError,
    SingularMatrixError,
    StepSizeTooLargeError,
)

__version__ = "0.1.0"

__all__ = [
    "community",
    "harness",
    "linalg",
    "model",
    "oja",
    "orth",
    "params",
    "rng",
    "GossipEigError",
    "ConvergenceError",
    "DegenerateGraphError",
    "InfeasibleCleanupError",
    "InvalidInputError",
    "InvalidParametersError",
    "NoMixingError",
    "NotPositiveDefiniteError",
    "SingularMatrixError",
    "StepSizeTooLargeError",
    "__version__",
]
