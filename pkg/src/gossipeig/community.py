"""Sign-based community labeling, majority-vote cleanup, and error metrics.

Labeling takes the sign of each node's second-eigenvector estimate, with
sign(0) = +1 everywhere in this module.  Misclassification is counted up to
a global label flip, since the eigenvector sign is arbitrary.

Cleanup runs in synchronized phases.  Within a phase every scheduled
interaction lets both endpoints record the other's phase-start label; at the
phase barrier each node that collected at least one sample resets its label
to the sign of its sample sum, and unsampled nodes keep their label (the
literal empty-sum rule would reset them to +1, which is clearly unintended).
Only a running sum and count per node are kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import InfeasibleCleanupError, InvalidParametersError
from .model import CommunicationModel, GroundTruth, sample_events
from .rng import SplitMix64

_PHASE_CHUNK = 1 << 20


def assign_labels(vhat2) -> np.ndarray:
    """Label +1 where the estimate is >= 0, else -1."""
    v = np.asarray(vhat2, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise InvalidParametersError("estimates must be finite")
    return np.where(v >= 0.0, 1, -1).astype(np.int64)


def misclassification(labels, truth: GroundTruth) -> int:
    """Hamming distance to the planted labels, minimized over a global flip."""
    lab = np.asarray(labels, dtype=np.int64)
    if lab.shape != truth.chi.shape:
        raise InvalidParametersError("labels and ground truth differ in length")
    d = int(np.sum(lab != truth.chi))
    return min(d, lab.shape[0] - d)


@dataclass
class CleanupParams:
    """Phase count and per-phase global rounds, plus the effective rates they
    were derived from (weighted model: p', q'; random-graph model: p'', q''
    and the margin delta with its tolerated initial error fraction)."""

    phases: int
    rounds_per_phase: int
    p_eff: float | None = None
    q_eff: float | None = None
    delta: float | None = None
    eps_tolerated: float | None = None

    def __post_init__(self):
        if self.phases < 0:
            raise InvalidParametersError("phase count must be >= 0")
        if self.rounds_per_phase < 1:
            raise InvalidParametersError("rounds per phase must be >= 1")
        if self.p_eff is not None and self.q_eff is not None and not self.p_eff > self.q_eff:
            raise InfeasibleCleanupError(
                f"effective intra rate {self.p_eff} must exceed inter rate {self.q_eff}"
            )


def cleanup_params_weighted(n: int, p: float, q: float, eps: float) -> CleanupParams:
    """One majority phase sized for the weighted model.

    With at most an ``eps`` fraction mislabeled (eps <= 1/64), the effective
    correct-sample rate is p' = (1-eps)p/(p+q) against q' = (q+eps*p)/(p+q);
    the phase needs r = ceil(72 n ln n / (sqrt(p') - sqrt(q'))^2) rounds.
    """
    if n < 4 or n % 2 != 0:
        raise InvalidParametersError(f"n must be even and >= 4, got {n}")
    if not (p > q > 0.0):
        raise InvalidParametersError(f"need p > q > 0, got p={p}, q={q}")
    if not 0.0 <= eps <= 1.0 / 64.0:
        raise InvalidParametersError(f"eps must be in [0, 1/64], got {eps}")
    p_eff = (1.0 - eps) * p / (p + q)
    q_eff = (q + eps * p) / (p + q)
    if not p_eff > q_eff:
        raise InfeasibleCleanupError(
            f"(1-eps)p = {(1.0 - eps) * p} does not exceed q + eps*p = {q + eps * p}"
        )
    r = math.ceil(72.0 * n * math.log(n) / (math.sqrt(p_eff) - math.sqrt(q_eff)) ** 2)
    return CleanupParams(phases=1, rounds_per_phase=r, p_eff=p_eff, q_eff=q_eff)


def cleanup_params_sbm(n: int, p: float, q: float) -> CleanupParams:
    """Phased majority schedule for the random-graph model.

    delta = p/2 - q/2 - sqrt(12 p ln n / n) - sqrt(12 q ln n / n) is the
    concentration margin; the effective rates are
    p'' = p/2 - sqrt(6 p ln n / n) - delta/12 and
    q'' = q/2 + sqrt(6 q ln n / n) + delta/12, the per-phase round count is
    r = ceil(72 p n ln n / (sqrt(p'') - sqrt(q''))^2) with ceil(6 ln n)
    phases, and the schedule tolerates an initial error fraction of
    delta / (24 p).  Small n (or q too close to p) makes delta <= 0 or
    p'' <= q'', in which case no feasible schedule exists.
    """
    if n < 4 or n % 2 != 0:
        raise InvalidParametersError(f"n must be even and >= 4, got {n}")
    if not (0.0 < q <= 1.0 and 0.0 < p <= 1.0):
        raise InvalidParametersError(f"need rates in (0, 1], got p={p}, q={q}")
    ln_n = math.log(n)
    delta = 0.5 * p - 0.5 * q - math.sqrt(12.0 * p * ln_n / n) - math.sqrt(12.0 * q * ln_n / n)
    if not delta > 0.0:
        raise InfeasibleCleanupError(
            f"concentration margin is not positive (delta = {delta:.6g}) at n={n}, p={p}, q={q}"
        )
    p_eff = 0.5 * p - math.sqrt(6.0 * p * ln_n / n) - delta / 12.0
    q_eff = 0.5 * q + math.sqrt(6.0 * q * ln_n / n) + delta / 12.0
    if not p_eff > q_eff:
        raise InfeasibleCleanupError(
            f"effective rates infeasible (p'' = {p_eff:.6g} <= q'' = {q_eff:.6g})"
        )
    r = math.ceil(72.0 * p * n * ln_n / (math.sqrt(p_eff) - math.sqrt(q_eff)) ** 2)
    return CleanupParams(
        phases=math.ceil(6.0 * ln_n),
        rounds_per_phase=r,
        p_eff=p_eff,
        q_eff=q_eff,
        delta=delta,
        eps_tolerated=delta / (24.0 * p),
    )


def _phase_tallies(
    model: CommunicationModel,
    start_labels: np.ndarray,
    rounds: int,
    rng: SplitMix64,
    interaction_counts: np.ndarray | None,
):
    """Sample one phase's events (in chunks) and tally per-node label sums
    and sample counts against the phase-start labels."""
    n = model.n
    sums = np.zeros(n, dtype=np.float64)
    counts = np.zeros(n, dtype=np.int64)
    start = start_labels.astype(np.float64)
    left = rounds
    while left > 0:
        block = min(left, _PHASE_CHUNK)
        us, vs = sample_events(model, block, rng)
        sums += np.bincount(us, weights=start[vs], minlength=n)
        sums += np.bincount(vs, weights=start[us], minlength=n)
        cu = np.bincount(us, minlength=n)
        cv = np.bincount(vs, minlength=n)
        counts += cu
        counts += cv
        if interaction_counts is not None:
            interaction_counts += cu
            interaction_counts += cv
        left -= block
    return sums, counts


def run_cleanup(
    model: CommunicationModel,
    labels,
    params: CleanupParams,
    rng: SplitMix64,
    interaction_counts: np.ndarray | None = None,
) -> np.ndarray:
    """Run the phased majority vote and return the final labels.

    Sample sums are exact (labels are +/-1, so float tallies are integers),
    so the result does not depend on event order within a phase.
    """
    lab = np.asarray(labels, dtype=np.int64).copy()
    if lab.shape != (model.n,):
        raise InvalidParametersError(f"labels must have shape ({model.n},)")
    if not np.all(np.abs(lab) == 1):
        raise InvalidParametersError("labels must be +1 or -1")
    for _ in range(params.phases):
        sums, counts = _phase_tallies(model, lab, params.rounds_per_phase, rng, interaction_counts)
        sampled = counts > 0
        lab[sampled] = np.where(sums[sampled] >= 0.0, 1, -1)
    return lab


def write_labels(labels, fp: TextIO) -> None:
    """Serialize labels as a single line of +/-1 integers."""
    fp.write(" ".join(str(int(x)) for x in labels) + "\n")


def read_labels(fp: TextIO) -> np.ndarray:
    """Parse a label line written by ``write_labels``."""
    values = [int(tok) for tok in fp.read().split()]
    lab = np.asarray(values, dtype=np.int64)
    if lab.size and not np.all(np.abs(lab) == 1):
        raise InvalidParametersError("labels must be +1 or -1")
    return lab
