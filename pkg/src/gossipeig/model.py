"""Communication models and the randomized scheduler.

A communication model is a probability distribution over unordered node
pairs; one pair is drawn independently per global round and the two chosen
nodes interact.  The model also carries the per-node interaction
probabilities (degrees), whose total is exactly 2 because two nodes are
chosen each round.

Node indices run 0..n-1.  For the two planted two-community models, the
first n/2 indices form the first community (cluster indicator +1) and the
rest the second (-1).

Pair sampling uses a precomputed cumulative-probability table and binary
search: the pair for a uniform draw ``x`` is the first index ``i`` with
``x < cum[i]``.  Block sampling draws the same uniform stream as repeated
scalar calls, so event streams depend only on the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence, TextIO

import numpy as np

from .errors import DegenerateGraphError, InvalidParametersError
from .rng import SplitMix64


class ScheduleEvent(NamedTuple):
    """One scheduler decision: nodes ``u`` and ``v`` interact in round ``t``."""

    u: int
    v: int
    t: int


@dataclass
class GroundTruth:
    """Planted cluster indicator: chi[u] is +1 or -1."""

    chi: np.ndarray

    def __post_init__(self):
        self.chi = np.asarray(self.chi, dtype=np.int64)
        if not np.all(np.abs(self.chi) == 1):
            raise InvalidParametersError("cluster indicator entries must be +1 or -1")
        self.chi.setflags(write=False)

    @property
    def n(self) -> int:
        return self.chi.shape[0]


@dataclass
class CommunicationModel:
    """Distribution over unordered node pairs, plus its degree vector.

    Immutable after construction (arrays are marked read-only); safe to share
    across threads and trials.
    """

    n: int
    pair_u: np.ndarray
    pair_v: np.ndarray
    pair_prob_table: np.ndarray
    degree: np.ndarray
    cum_prob: np.ndarray
    _index: dict | None = field(default=None, repr=False)

    def pair_prob(self, u: int, v: int) -> float:
        """Probability that the unordered pair (u, v) is scheduled in a round."""
        if u == v:
            raise InvalidParametersError("pair members must differ")
        if self._index is None:
            self._index = {
                (int(a), int(b)): float(p)
                for a, b, p in zip(self.pair_u, self.pair_v, self.pair_prob_table)
            }
        return self._index.get((min(u, v), max(u, v)), 0.0)

    @property
    def num_pairs(self) -> int:
        return self.pair_u.shape[0]


def _build_model(n: int, pair_u, pair_v, weights) -> CommunicationModel:
    pair_u = np.asarray(pair_u, dtype=np.int32)
    pair_v = np.asarray(pair_v, dtype=np.int32)
    weights = np.asarray(weights, dtype=np.float64)
    if pair_u.shape[0] == 0:
        raise DegenerateGraphError("no pairs with positive weight")
    if np.any(weights < 0.0):
        raise InvalidParametersError("pair weights must be nonnegative")
    total = float(np.sum(weights))
    if total <= 0.0:
        raise DegenerateGraphError("total pair weight is zero")
    probs = weights / total
    degree = np.zeros(n, dtype=np.float64)
    np.add.at(degree, pair_u, probs)
    np.add.at(degree, pair_v, probs)
    cum = np.cumsum(probs)
    for arr in (pair_u, pair_v, probs, degree, cum):
        arr.setflags(write=False)
    return CommunicationModel(n, pair_u, pair_v, probs, degree, cum)


def _all_pairs(n: int):
    idx = np.triu_indices(n, k=1)
    return idx[0].astype(np.int32), idx[1].astype(np.int32)


def planted_truth(n: int) -> GroundTruth:
    chi = np.ones(n, dtype=np.int64)
    chi[n // 2:] = -1
    return GroundTruth(chi)


def weighted_model(n: int, p: float, q: float):
    """Two planted communities with pair weight p inside and q across.

    Requires even n >= 4 and p > q > 0.  Returns the model and the planted
    ground truth.
    """
    if n < 4 or n % 2 != 0:
        raise InvalidParametersError(f"n must be even and >= 4, got {n}")
    if not (p > q > 0.0):
        raise InvalidParametersError(f"need p > q > 0, got p={p}, q={q}")
    us, vs = _all_pairs(n)
    half = n // 2
    same = (us < half) == (vs < half)
    weights = np.where(same, p, q)
    return _build_model(n, us, vs, weights), planted_truth(n)


def sbm_model(n: int, p: float, q: float, rng: SplitMix64):
    """Planted-partition random graph; the scheduler is uniform over edges.

    Each intra-community pair is an edge independently with probability p and
    each inter-community pair with probability q (edge iff the pair's uniform
    draw is < its probability; pairs are drawn in lexicographic order).
    Isolated nodes are allowed; a graph with no edges at all raises
    ``DegenerateGraphError``.  Returns (model, truth, edge list).
    """
    if n < 4 or n % 2 != 0:
        raise InvalidParametersError(f"n must be even and >= 4, got {n}")
    if not (0.0 < q < p <= 1.0):
        raise InvalidParametersError(f"need 0 < q < p <= 1, got p={p}, q={q}")
    us, vs = _all_pairs(n)
    half = n // 2
    same = (us < half) == (vs < half)
    probs = np.where(same, p, q)
    draws = rng.uniforms(us.shape[0])
    keep = draws < probs
    if not np.any(keep):
        raise DegenerateGraphError(f"sampled graph G({n},{p},{q}) has no edges")
    eu, ev = us[keep], vs[keep]
    edges = [(int(a), int(b)) for a, b in zip(eu, ev)]
    model = _build_model(n, eu, ev, np.ones(eu.shape[0]))
    return model, planted_truth(n), edges


def population_model(n: int) -> CommunicationModel:
    """Uniform scheduling over all node pairs."""
    if n < 2:
        raise InvalidParametersError(f"n must be >= 2, got {n}")
    us, vs = _all_pairs(n)
    return _build_model(n, us, vs, np.ones(us.shape[0]))


def graph_model(edges: Sequence[tuple[int, int]], n: int | None = None) -> CommunicationModel:
    """Uniform scheduling over the given simple edge list.

    Edges are canonicalized to (min, max) and sorted lexicographically; if
    ``n`` is omitted it is taken as max endpoint + 1.
    """
    canon = []
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise InvalidParametersError(f"self-loop ({u},{v}) is not allowed")
        if u < 0 or v < 0:
            raise InvalidParametersError("node indices must be nonnegative")
        canon.append((min(u, v), max(u, v)))
    if not canon:
        raise DegenerateGraphError("edge list is empty")
    if len(set(canon)) != len(canon):
        raise InvalidParametersError("duplicate edges are not allowed")
    canon.sort()
    us = np.array([e[0] for e in canon], dtype=np.int32)
    vs = np.array([e[1] for e in canon], dtype=np.int32)
    top = int(vs.max()) + 1
    if n is None:
        n = top
    elif n < top:
        raise InvalidParametersError(f"n={n} is smaller than largest endpoint {top - 1}")
    return _build_model(n, us, vs, np.ones(us.shape[0]))


def sample_events(model: CommunicationModel, count: int, rng: SplitMix64):
    """Sample ``count`` scheduler rounds; returns (us, vs) int32 arrays.

    Consumes exactly ``count`` uniforms, identically to ``count`` scalar
    ``sample_event`` calls.
    """
    draws = rng.uniforms(count)
    idx = np.searchsorted(model.cum_prob, draws, side="right")
    np.minimum(idx, model.num_pairs - 1, out=idx)
    return model.pair_u[idx].copy(), model.pair_v[idx].copy()


def sample_event(model: CommunicationModel, t: int, rng: SplitMix64) -> ScheduleEvent:
    """One scheduler decision for global round ``t``."""
    x = rng.uniform()
    idx = int(np.searchsorted(model.cum_prob, x, side="right"))
    if idx >= model.num_pairs:
        idx = model.num_pairs - 1
    return ScheduleEvent(int(model.pair_u[idx]), int(model.pair_v[idx]), t)


def communication_matrix(model: CommunicationModel) -> np.ndarray:
    """Dense n x n matrix with degrees on the diagonal and pair probabilities
    off it; equals the expectation of (e_u + e_v)(e_u + e_v)^T over rounds."""
    m = np.zeros((model.n, model.n), dtype=np.float64)
    m[model.pair_u, model.pair_v] = model.pair_prob_table
    m += m.T
    m[np.diag_indices(model.n)] = model.degree
    return m


def averaging_operator(model: CommunicationModel) -> np.ndarray:
    """The matrix I - D/2 + W/2 whose second eigenvalue controls gossip
    averaging convergence."""
    m = np.zeros((model.n, model.n), dtype=np.float64)
    m[model.pair_u, model.pair_v] = model.pair_prob_table
    m += m.T
    m *= 0.5
    m[np.diag_indices(model.n)] = 1.0 - 0.5 * model.degree
    return m


def is_connected(model: CommunicationModel) -> bool:
    """True if the positive-probability pairs form a connected graph on all n nodes."""
    adj: list[list[int]] = [[] for _ in range(model.n)]
    for u, v in zip(model.pair_u, model.pair_v):
        adj[u].append(int(v))
        adj[v].append(int(u))
    seen = np.zeros(model.n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    return bool(seen.all())


def write_edges(edges: Iterable[tuple[int, int]], fp: TextIO) -> None:
    """Serialize edges as one "u v" line each (0-indexed)."""
    for u, v in edges:
        fp.write(f"{u} {v}\n")


def read_edges(fp: TextIO) -> list[tuple[int, int]]:
    """Parse an edge list written by ``write_edges``."""
    edges = []
    for line in fp:
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2:
            raise InvalidParametersError(f"malformed edge line: {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return edges
