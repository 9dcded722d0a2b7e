"""Closed-form spectral quantities and round/step-size schedule formulas.

For the weighted two-community model the communication matrix spectrum is
known exactly:

    lambda_1 = 4/n                      (eigenvector: all-ones / sqrt(n))
    lambda_2 = (4/n) * p / (p + (n/(n-2)) q)
                                        (eigenvector: cluster indicator / sqrt(n))
    lambda_i = 2/n - 4p / (n^2 (p+q) - 2 n p)   for i >= 3

The schedule formulas carry unspecified universal constants; they default to
1.0 and are configuration, not derived values.  All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParametersError, NoMixingError
from .linalg import sym_eigen
from .model import CommunicationModel, averaging_operator
from .oja import OjaSchedule

#: Every scheduler vector is e_u + e_v, so the squared-norm bound is exactly 2.
SQUARED_NORM_BOUND = 2.0

_DISCONNECTED_TOL = 1e-12


@dataclass
class WeightedSpectralFacts:
    """Exact spectrum of the weighted model's communication matrix."""

    lambda1: float
    lambda2: float
    lambda_tail: float
    gap12: float
    gap23: float
    rho: float
    v1: np.ndarray
    v2: np.ndarray


@dataclass
class SpectralBounds:
    """Bounds fed to the schedule: Lambda >= sum of the top-k eigenvalues,
    gap <= the smallest top-k eigengap, gamma_mix <= the averaging rate."""

    Lambda: float
    gap: float
    gamma_mix: float

    def __post_init__(self):
        for name in ("Lambda", "gap", "gamma_mix"):
            if not getattr(self, name) > 0.0:
                raise InvalidParametersError(f"{name} must be positive")


@dataclass
class ScheduleConstants:
    """The universal constants of the schedule formulas (config-overridable)."""

    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0

    def __post_init__(self):
        if not (self.c1 > 0.0 and self.c2 > 0.0 and self.c3 > 0.0):
            raise InvalidParametersError("schedule constants must be positive")


def weighted_spectral_facts(n: int, p: float, q: float) -> WeightedSpectralFacts:
    """Closed-form eigenvalues, gaps, balance parameter rho, and the top two
    eigenvectors of the weighted model's communication matrix."""
    if n < 4 or n % 2 != 0:
        raise InvalidParametersError(f"n must be even and >= 4, got {n}")
    if not (p > q > 0.0):
        raise InvalidParametersError(f"need p > q > 0, got p={p}, q={q}")
    lambda1 = 4.0 / n
    lambda2 = (4.0 / n) * p / (p + (n / (n - 2.0)) * q)
    lambda_tail = 2.0 / n - 4.0 * p / (n * n * (p + q) - 2.0 * n * p)
    v1 = np.full(n, 1.0 / math.sqrt(n))
    v2 = np.ones(n) / math.sqrt(n)
    v2[n // 2:] *= -1.0
    return WeightedSpectralFacts(
        lambda1=lambda1,
        lambda2=lambda2,
        lambda_tail=lambda_tail,
        gap12=lambda1 - lambda2,
        gap23=lambda2 - lambda_tail,
        rho=min(q / (p + q), (p - q) / (p + q)),
        v1=v1,
        v2=v2,
    )


def mixing_bound(model: CommunicationModel) -> float:
    """min(1/n, log(1/lambda_2(I - D/2 + W/2))), the averaging-rate bound.

    Raises ``NoMixingError`` when lambda_2 is 1 (within eigensolver
    tolerance), i.e. the communication graph is disconnected.
    """
    lam2 = float(sym_eigen(averaging_operator(model)).values[1])
    if lam2 >= 1.0 - _DISCONNECTED_TOL:
        raise NoMixingError(
            f"averaging operator has second eigenvalue {lam2}; the communication graph does not mix"
        )
    if lam2 <= 0.0:
        return 1.0 / model.n
    return min(1.0 / model.n, math.log(1.0 / lam2))


def oja_schedule_raw(
    bounds: SpectralBounds,
    k: int,
    eps: float,
    delta: float,
    consts: ScheduleConstants,
    lambda1: float,
    n: int,
) -> tuple[float, float, float]:
    """(eta, t_oja, t_orth) before integer ceilings; see ``oja_schedule``."""
    xi = n / (delta * eps * bounds.gap)
    log_xi = math.log(xi)
    eta = consts.c1 * eps * eps * bounds.gap * delta * delta / (bounds.Lambda * k**3 * log_xi**3)
    t_oja = consts.c2 * (log_xi + 1.0 / eps) / (bounds.gap * eta)
    t_orth = consts.c3 * (log_xi + 1.0 / eps) * lambda1 / (bounds.gap * bounds.gamma_mix)
    return eta, t_oja, t_orth


def oja_schedule(
    bounds: SpectralBounds,
    k: int,
    eps: float,
    delta: float,
    consts: ScheduleConstants,
    lambda1: float,
    n: int,
) -> OjaSchedule:
    """Step size and round counts for target accuracy eps and failure
    probability delta, from the configured constants.

    eta   = c1 eps^2 gap delta^2 / (Lambda k^3 log^3 xi)
    T     = c2 (log xi + 1/eps) / (gap eta)
    T'    = c3 (log xi + 1/eps) lambda1 / (gap gamma_mix)

    with xi = n / (delta eps gap); T and T' are rounded up.
    """
    if not (0.0 < eps < 1.0 and 0.0 < delta < 1.0):
        raise InvalidParametersError("eps and delta must lie in (0, 1)")
    if k < 1 or n < 2 or not lambda1 > 0.0:
        raise InvalidParametersError("k, n, and lambda1 must be positive")
    eta, t_oja, t_orth = oja_schedule_raw(bounds, k, eps, delta, consts, lambda1, n)
    return OjaSchedule(k=k, eta=eta, t_oja=math.ceil(t_oja), t_orth=math.ceil(t_orth))


def weighted_spectral_bounds(n: int, p: float, q: float, k: int) -> SpectralBounds:
    """Valid schedule bounds for the weighted model from closed forms.

    k must be 1 or 2: beyond the second eigenvalue the spectrum is flat, so
    no positive gap bound exists.
    """
    if k not in (1, 2):
        raise InvalidParametersError(f"the weighted model has a positive eigengap only for k <= 2, got k={k}")
    facts = weighted_spectral_facts(n, p, q)
    if k == 1:
        lam_sum = facts.lambda1
        gap = facts.gap12
    else:
        lam_sum = facts.lambda1 + facts.lambda2
        gap = min(facts.gap12, facts.gap23)
    gamma = min(1.0 / n, 2.0 * q / (n * (p + q)))
    return SpectralBounds(Lambda=lam_sum, gap=gap, gamma_mix=gamma)


def measured_spectral_bounds(model: CommunicationModel, k: int) -> SpectralBounds:
    """Schedule bounds measured from the realized communication matrix via the
    eigensolver (used for sampled graphs, where no closed form exists)."""
    from .model import communication_matrix  # local import to avoid cycle at module load

    values = sym_eigen(communication_matrix(model)).values
    if k < 1 or k >= model.n:
        raise InvalidParametersError(f"need 1 <= k < n, got k={k}")
    gap = float(min(values[j] - values[j + 1] for j in range(k)))
    if not gap > 0.0:
        raise InvalidParametersError(f"measured top-{k} eigengap is not positive")
    return SpectralBounds(
        Lambda=float(np.sum(values[:k])),
        gap=gap,
        gamma_mix=mixing_bound(model),
    )
