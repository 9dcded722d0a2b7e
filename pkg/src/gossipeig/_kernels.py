"""Compiled inner loops.

Everything here is called through thin wrappers in the public modules; the
kernels own no policy, only tight sequential arithmetic.  All kernels run
with default (strict IEEE-754) floating point so results are bit-identical
to the equivalent pure-Python/NumPy expressions, which the test suite pins.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def jacobi_sweeps(a, v, threshold, max_sweeps):
    """Cyclic Jacobi rotations on symmetric ``a`` (in place), accumulating
    eigenvectors into ``v`` (started as identity).

    Sweeps row-cyclically until the off-diagonal Frobenius norm drops to
    ``threshold``.  Returns the number of sweeps used, or -1 if the budget
    ``max_sweeps`` was exhausted before convergence.
    """
    n = a.shape[0]
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if math.sqrt(2.0 * off) <= threshold:
            return sweep
        if sweep == max_sweeps:
            return -1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + math.sqrt(1.0 + theta * theta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                a[p, p] = a[p, p] - t * apq
                a[q, q] = a[q, q] + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    if k != p and k != q:
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * akq
                        a[p, k] = a[k, p]
                        a[k, q] = s * akp + c * akq
                        a[q, k] = a[k, q]
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return -1


@njit(cache=True, nogil=True)
def apply_oja_events(q, us, vs, eta, limit):
    """Apply the two-row power update for each scheduled pair, in order.

    Both new rows are computed from both old rows before either write.
    Returns the index of the first event that pushed any entry beyond
    ``limit`` in magnitude (the caller aborts), or -1 if all applied.
    """
    k = q.shape[1]
    a = 1.0 + eta
    for t in range(us.shape[0]):
        u = us[t]
        v = vs[t]
        bad = False
        for i in range(k):
            qu = q[u, i]
            qv = q[v, i]
            nu = a * qu + eta * qv
            nv = a * qv + eta * qu
            q[u, i] = nu
            q[v, i] = nv
            if abs(nu) > limit or abs(nv) > limit:
                bad = True
        if bad:
            return t
    return -1


@njit(cache=True, nogil=True)
def apply_avg_events(y, us, vs, sums_out):
    """Pairwise averaging for each scheduled pair, in order.

    If ``sums_out`` has one slot per event, the post-round sum of ``y`` is
    recorded there (used by conservation checks); pass a length-0 array to
    skip recording.
    """
    record = sums_out.shape[0] == us.shape[0]
    n = y.shape[0]
    for t in range(us.shape[0]):
        u = us[t]
        v = vs[t]
        m = 0.5 * (y[u] + y[v])
        y[u] = m
        y[v] = m
        if record:
            s = 0.0
            for i in range(n):
                s += y[i]
            sums_out[t] = s


@njit(cache=True, nogil=True)
def apply_row_avg_events(r, us, vs):
    """Pairwise averaging of whole state rows for each scheduled pair."""
    m = r.shape[1]
    for t in range(us.shape[0]):
        u = us[t]
        v = vs[t]
        for i in range(m):
            avg = 0.5 * (r[u, i] + r[v, i])
            r[u, i] = avg
            r[v, i] = avg
