"""Power-style streaming eigenvector iteration, centralized and gossip forms.

The centralized iteration applies Q <- (I + eta * x x^T) Q for a stream of
vectors x.  When the scheduler picks pair (u, v), the update touches only
rows u and v of Q, so the gossip simulation keeps row u as node u's state and
applies the identical two-row arithmetic:

    q_u <- (1 + eta) * q_u + eta * q_v      (and symmetrically for v)

with both new rows computed from both old rows.  The gossip run and a
centralized replay of its logged event stream agree bitwise; the equivalence
is pinned by tests.

A fixed step size is used throughout a run.  If any state entry exceeds
``OVERFLOW_LIMIT`` in magnitude the run aborts with
``StepSizeTooLargeError``: the iterate itself is expected to grow
exponentially (only the orthogonalized output is normalized), so the guard
is set near the largest magnitude whose Gram matrix is still finite in
float64 rather than at some small working range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np

from ._kernels import apply_oja_events
from .errors import InvalidParametersError, StepSizeTooLargeError
from .model import CommunicationModel, ScheduleEvent, sample_events
from .rng import SplitMix64

OVERFLOW_LIMIT = 1e150


@dataclass
class OjaSchedule:
    """Run lengths and step size: rank k, step eta, iteration rounds t_oja,
    orthogonalization rounds t_orth."""

    k: int
    eta: float
    t_oja: int
    t_orth: int

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParametersError(f"k must be >= 1, got {self.k}")
        if not self.eta > 0.0:
            raise InvalidParametersError(f"eta must be > 0, got {self.eta}")
        if self.t_oja < 0 or self.t_orth < 0:
            raise InvalidParametersError("round counts must be >= 0")


@dataclass
class EventLog:
    """Scheduled pairs in round order (round t is index t)."""

    us: np.ndarray
    vs: np.ndarray

    def __len__(self) -> int:
        return self.us.shape[0]

    def __iter__(self) -> Iterator[ScheduleEvent]:
        for t in range(len(self)):
            yield ScheduleEvent(int(self.us[t]), int(self.vs[t]), t)

    def write(self, fp: TextIO) -> None:
        """Serialize as one "t u v" line per round, for replay."""
        for t in range(len(self)):
            fp.write(f"{t} {self.us[t]} {self.vs[t]}\n")

    @classmethod
    def read(cls, fp: TextIO) -> "EventLog":
        ts, us, vs = [], [], []
        for line in fp:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise InvalidParametersError(f"malformed event line: {line!r}")
            ts.append(int(parts[0]))
            us.append(int(parts[1]))
            vs.append(int(parts[2]))
        if ts != list(range(len(ts))):
            raise InvalidParametersError("event log rounds must be 0,1,2,...")
        return cls(np.asarray(us, dtype=np.int32), np.asarray(vs, dtype=np.int32))


def init_states(n: int, k: int, rng: SplitMix64) -> np.ndarray:
    """Fresh n x k state matrix with independent standard normal entries.

    Entries are drawn in row-major order from the documented Box-Muller
    stream, so a seed fixes the matrix exactly.  Full column rank holds with
    probability 1.
    """
    if not 1 <= k <= n:
        raise InvalidParametersError(f"need 1 <= k <= n, got k={k}, n={n}")
    return rng.normals(n * k).reshape(n, k)


def oja_step(q: np.ndarray, ev: ScheduleEvent, eta: float) -> None:
    """Apply one scheduled interaction to state rows ev.u and ev.v in place.

    Reads both old rows, then writes both; all other rows are untouched.
    """
    u, v = ev.u, ev.v
    old_u = q[u].copy()
    old_v = q[v].copy()
    q[u] = (1.0 + eta) * old_u + eta * old_v
    q[v] = (1.0 + eta) * old_v + eta * old_u


def run_asynch_oja(model: CommunicationModel, schedule: OjaSchedule, rng: SplitMix64):
    """Initialize per-node states and apply ``schedule.t_oja`` scheduler rounds.

    Returns the final pre-orthogonalization state matrix and the event log
    (retained so a centralized replay can verify the run).  Raises
    ``StepSizeTooLargeError`` if the overflow guard trips.
    """
    q = init_states(model.n, schedule.k, rng)
    us, vs = sample_events(model, schedule.t_oja, rng)
    run_asynch_oja_on_events(q, us, vs, schedule.eta)
    return q, EventLog(us, vs)


def run_asynch_oja_on_events(q: np.ndarray, us: np.ndarray, vs: np.ndarray, eta: float) -> None:
    """Replay an explicit event stream over ``q`` in place."""
    bad = apply_oja_events(q, np.ascontiguousarray(us), np.ascontiguousarray(vs), eta, OVERFLOW_LIMIT)
    if bad >= 0:
        raise StepSizeTooLargeError(
            f"state entry exceeded {OVERFLOW_LIMIT:g} at round {bad}; reduce eta or t_oja"
        )


def centralized_oja(xs: Iterable[np.ndarray], k: int, eta: float, q0: np.ndarray) -> np.ndarray:
    """Sequential Q <- (I + eta * x x^T) Q over the stream, from Q_0 = q0.

    Returns the pre-orthogonalization Q_T.  Vectors of the form e_u + e_v
    (exactly two entries equal to 1) take the same two-row code path as the
    gossip kernel, so replaying a gossip event log reproduces the gossip
    state bitwise.
    """
    q = np.array(q0, dtype=np.float64, copy=True)
    if q.ndim != 2 or q.shape[1] != k:
        raise InvalidParametersError(f"q0 must be n x k with k={k}, got shape {q.shape}")
    for x in xs:
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise InvalidParametersError("stream vector has non-finite entries")
        nz = np.nonzero(x)[0]
        if nz.shape[0] == 2 and x[nz[0]] == 1.0 and x[nz[1]] == 1.0:
            oja_step(q, ScheduleEvent(int(nz[0]), int(nz[1]), 0), eta)
        else:
            y = x @ q
            q += eta * np.outer(x, y)
        if np.max(np.abs(q)) > OVERFLOW_LIMIT:
            raise StepSizeTooLargeError(
                f"state entry exceeded {OVERFLOW_LIMIT:g}; reduce eta or the stream length"
            )
    return q


def events_as_vectors(log: EventLog, n: int) -> Iterator[np.ndarray]:
    """Dense e_u + e_v vectors for each logged event, for centralized replay."""
    for ev in log:
        x = np.zeros(n, dtype=np.float64)
        x[ev.u] = 1.0
        x[ev.v] = 1.0
        yield x
