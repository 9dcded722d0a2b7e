"""Gossip averaging and the distributed Cholesky orthogonalization protocol.

Averaging: when (u, v) interact, both set their estimate to the exact mean
of their two previous estimates.  The node-sum is conserved (up to rounding)
and the squared error to the global mean never increases.

Orthogonalization: every node u keeps running averages r_u[i, j] of the
products q_u[i] * q_u[j] (only i <= j is stored; the table is symmetric by
construction).  After the averaging rounds, each node independently scales
its table by n to estimate the global Gram matrix Q^T Q, Cholesky-factors
it, and solves one row of Q (L^T)^-1 to obtain its own row of the
orthonormalized output.  Nodes whose estimated Gram matrix is not positive
definite are flagged as failed (with a zero output row) rather than
aborting: a failure means the averaging budget was too small for the
conditioning of Q.

The centralized reference computes L = chol(Q^T Q) once and solves every
row; its first i columns depend only on the first i columns of Q, bitwise,
because the Gram entries, the Cholesky columns, and the forward-substitution
prefixes for indices < i never read anything beyond column i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import apply_avg_events, apply_row_avg_events
from .errors import InvalidParametersError, NotPositiveDefiniteError
from .linalg import cholesky, solve_transposed_lower
from .model import CommunicationModel, sample_events
from .rng import SplitMix64


@dataclass
class AvgState:
    """Per-node estimates ``y`` plus the initial values ``x0`` kept for error
    metrics; ``round_sums[t]`` (when recorded) is sum(y) after round t."""

    y: np.ndarray
    x0: np.ndarray
    round_sums: np.ndarray | None = None


def avg_step(y_u: float, y_v: float) -> tuple[float, float]:
    """Both nodes take the arithmetic mean of the two previous values."""
    m = 0.5 * (y_u + y_v)
    return m, m


def run_averaging(
    model: CommunicationModel,
    init_values,
    rounds: int,
    rng: SplitMix64,
    record_sums: bool = False,
) -> AvgState:
    """Apply one pairwise-average per sampled event for ``rounds`` rounds.

    Convergence to the global mean requires a connected communication graph;
    the caller checks connectivity if it matters.
    """
    x0 = np.asarray(init_values, dtype=np.float64).copy()
    if x0.shape != (model.n,):
        raise InvalidParametersError(f"init values must have shape ({model.n},)")
    y = x0.copy()
    us, vs = sample_events(model, rounds, rng)
    sums = np.empty(rounds if record_sums else 0, dtype=np.float64)
    apply_avg_events(y, us, vs, sums)
    return AvgState(y, x0, sums if record_sums else None)


def _tri_pairs(k: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(k) for j in range(i, k)]


@dataclass
class OrthState:
    """Protocol state: per-node input rows ``q``, the running-average table
    ``r`` (upper triangle of the k x k products, row-major pairs i <= j),
    finalized output rows ``vhat`` and per-node failure flags."""

    q: np.ndarray
    r: np.ndarray
    vhat: np.ndarray
    failed: np.ndarray
    pairs: list[tuple[int, int]] = field(repr=False, default_factory=list)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def k(self) -> int:
        return self.q.shape[1]


def init_orth_state(q: np.ndarray) -> OrthState:
    """Start the protocol from state rows ``q``: r_u[i, j] = q_u[i] * q_u[j]."""
    q = np.asarray(q, dtype=np.float64)
    n, k = q.shape
    pairs = _tri_pairs(k)
    r = np.empty((n, len(pairs)), dtype=np.float64)
    for idx, (i, j) in enumerate(pairs):
        r[:, idx] = q[:, i] * q[:, j]
    return OrthState(q.copy(), r, np.zeros((n, k)), np.zeros(n, dtype=bool), pairs)


def orth_avg_step(state: OrthState, u: int, v: int) -> None:
    """Average all stored table entries of nodes u and v pairwise."""
    mean = 0.5 * (state.r[u] + state.r[v])
    state.r[u] = mean
    state.r[v] = mean


def apply_orth_events(state: OrthState, us: np.ndarray, vs: np.ndarray) -> None:
    """Replay an explicit averaging event stream over the table."""
    apply_row_avg_events(state.r, np.ascontiguousarray(us), np.ascontiguousarray(vs))


def run_orth_averaging(
    state: OrthState,
    model: CommunicationModel,
    rounds: int,
    rng: SplitMix64,
    interaction_counts: np.ndarray | None = None,
) -> None:
    """Apply ``rounds`` scheduled averaging interactions to the table."""
    us, vs = sample_events(model, rounds, rng)
    apply_orth_events(state, us, vs)
    if interaction_counts is not None:
        interaction_counts += np.bincount(us, minlength=model.n)
        interaction_counts += np.bincount(vs, minlength=model.n)


def gram_estimate(state: OrthState, u: int, n: int) -> np.ndarray:
    """Node u's k x k estimate of Q^T Q: its averaged table scaled by n."""
    k = state.k
    full = np.empty((k, k), dtype=np.float64)
    for idx, (i, j) in enumerate(state.pairs):
        full[i, j] = full[j, i] = n * state.r[u, idx]
    return full


def finalize_orth(state: OrthState, u: int, n: int):
    """Node u's local finalization: factor its Gram estimate and solve its row.

    Returns the k output values, or None after setting the failure flag when
    the estimate is not positive definite (insufficient averaging rounds).
    """
    try:
        low = cholesky(gram_estimate(state, u, n))
    except NotPositiveDefiniteError:
        state.failed[u] = True
        state.vhat[u] = 0.0
        return None
    row = solve_transposed_lower(state.q[u], low)
    state.failed[u] = False
    state.vhat[u] = row
    return row


def finalize_all(state: OrthState, n: int) -> tuple[np.ndarray, int]:
    """Finalize every node; returns the assembled output matrix and the
    number of failed nodes."""
    for u in range(state.n):
        finalize_orth(state, u, n)
    return state.vhat.copy(), int(np.sum(state.failed))


def run_orth_protocol(
    q: np.ndarray,
    model: CommunicationModel,
    rounds: int,
    rng: SplitMix64,
    interaction_counts: np.ndarray | None = None,
) -> OrthState:
    """Full protocol: initialize from ``q``, average for ``rounds`` rounds,
    then finalize every node."""
    state = init_orth_state(q)
    run_orth_averaging(state, model, rounds, rng, interaction_counts)
    finalize_all(state, model.n)
    return state


def centralized_orth(q: np.ndarray) -> np.ndarray:
    """Orthonormalize the columns of ``q`` via its Gram Cholesky factor.

    Output spans the same columns and satisfies V^T V = I; requires full
    column rank (otherwise the Cholesky raises ``NotPositiveDefiniteError``).
    """
    q = np.asarray(q, dtype=np.float64)
    n, k = q.shape
    gram = np.empty((k, k), dtype=np.float64)
    for i in range(k):
        for j in range(i, k):
            # np.sum over the fresh product array keeps the summation order a
            # function of n alone, which makes the first-i-columns property
            # hold bitwise when k varies.
            gram[i, j] = gram[j, i] = float(np.sum(q[:, i] * q[:, j]))
    low = cholesky(gram)
    out = np.empty_like(q)
    for u in range(n):
        out[u] = solve_transposed_lower(q[u], low)
    return out
