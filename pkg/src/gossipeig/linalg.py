"""Self-contained dense linear algebra.

Implements the symmetric eigensolver used as the ground-truth oracle, plus
Cholesky factorization and the triangular solve the orthogonalization
protocol needs.  No LAPACK/BLAS factorizations are used anywhere, so the
results are bit-reproducible across platforms: the eigensolver is cyclic
Jacobi run to an off-diagonal Frobenius norm below 1e-12 * ||m||_F, and all
arithmetic is plain 64-bit IEEE floating point.

Matrices are dense 2-D float64 ``numpy`` arrays in row-major order
throughout the package.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from ._kernels import jacobi_sweeps
from .errors import ConvergenceError, InvalidInputError, NotPositiveDefiniteError, SingularMatrixError

SYMMETRY_RTOL = 1e-12
JACOBI_RTOL = 1e-12
_MAX_SWEEPS = 60


class SymEigen(NamedTuple):
    """Full spectrum of a symmetric matrix.

    ``values`` are sorted descending; column ``i`` of ``vectors`` is the unit
    eigenvector for ``values[i]``, sign-normalized so its largest-magnitude
    entry is positive.
    """

    values: np.ndarray
    vectors: np.ndarray


def as_matrix(m, *, square: bool = False) -> np.ndarray:
    """Validate and return ``m`` as a float64 2-D array with finite entries."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidInputError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    if square and a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    return a


def _require_symmetric(a: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    skew = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if skew > SYMMETRY_RTOL * scale:
        raise InvalidInputError(f"matrix is not symmetric (max |a - a^T| = {skew:g})")


def sym_eigen(m) -> SymEigen:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Deterministic for a fixed input: the rotation schedule is fixed, ties in
    the descending value sort keep rotation-output order, and each
    eigenvector's sign is normalized.  Raises ``InvalidInputError`` for
    non-square or asymmetric input and ``ConvergenceError`` if the sweep
    budget is exhausted (which does not happen for finite symmetric input).
    """
    a = as_matrix(m, square=True)
    _require_symmetric(a)
    n = a.shape[0]
    work = np.array(a, dtype=np.float64, order="C", copy=True)
    vecs = np.eye(n, dtype=np.float64)
    threshold = JACOBI_RTOL * math.sqrt(float(np.sum(a * a)))
    sweeps = jacobi_sweeps(work, vecs, threshold, _MAX_SWEEPS)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi did not converge in {_MAX_SWEEPS} sweeps")
    values = np.diagonal(work).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vecs = vecs[:, order]
    for j in range(n):
        col = vecs[:, j]
        if col[int(np.argmax(np.abs(col)))] < 0.0:
            np.negative(col, out=col)
    values.setflags(write=False)
    vecs.setflags(write=False)
    return SymEigen(values, vecs)


def cholesky(r) -> np.ndarray:
    """Lower-triangular L with L L^T = r, positive diagonal.

    Raises ``NotPositiveDefiniteError`` (carrying the failing pivot index)
    when a pivot is <= 0 or non-finite.
    """
    a = as_matrix(r, square=True)
    _require_symmetric(a)
    n = a.shape[0]
    low = np.zeros((n, n), dtype=np.float64)
    for j in range(n):
        s = a[j, j]
        for t in range(j):
            s -= low[j, t] * low[j, t]
        if not (s > 0.0) or not math.isfinite(s):
            raise NotPositiveDefiniteError(j)
        low[j, j] = math.sqrt(s)
        for i in range(j + 1, n):
            s = a[i, j]
            for t in range(j):
                s -= low[i, t] * low[j, t]
            low[i, j] = s / low[j, j]
    return low


def solve_transposed_lower(row, low) -> np.ndarray:
    """Solve x L^T = row for x, with L lower triangular.

    Equivalent to forward substitution on L x^T = row^T; entry ``i`` of the
    result depends only on the leading i+1 entries of ``row`` and the leading
    (i+1) x (i+1) block of L.  Raises ``SingularMatrixError`` on a zero
    diagonal.
    """
    b = np.asarray(row, dtype=np.float64)
    if b.ndim != 1:
        raise InvalidInputError("row must be a 1-D vector")
    l = as_matrix(low, square=True)
    k = l.shape[0]
    if b.shape[0] != k:
        raise InvalidInputError(f"length mismatch: row has {b.shape[0]}, L is {k}x{k}")
    x = np.zeros(k, dtype=np.float64)
    for i in range(k):
        if l[i, i] == 0.0:
            raise SingularMatrixError(f"zero diagonal at index {i}")
        s = b[i]
        for j in range(i):
            s -= l[i, j] * x[j]
        x[i] = s / l[i, i]
    return x
