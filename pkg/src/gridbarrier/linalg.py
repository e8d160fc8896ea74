"""Dense linear algebra for small systems.

Everything here operates on plain numpy arrays. Factorizations are written
out explicitly so that singularity is reported against a fixed relative
pivot threshold instead of whatever the underlying LAPACK build decides.
Complex matrices are supported (the admittance reduction needs them).
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, SingularMatrix

#: A pivot smaller than this fraction of the largest input entry is singular.
PIVOT_RTOL = 1e-12


def _as_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def lu_factor(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """LU-factor ``a`` with partial (row) pivoting.

    Returns ``(lu, perm)`` where ``lu`` packs the unit-lower and upper
    factors and ``perm`` maps factored rows back to input rows. Raises
    :class:`SingularMatrix` when the best available pivot is below
    ``PIVOT_RTOL`` relative to the largest entry of ``a``.
    """
    a = _as_square(a)
    n = a.shape[0]
    dtype = complex if np.iscomplexobj(a) else float
    lu = a.astype(dtype, copy=True)
    perm = np.arange(n)
    scale = float(np.max(np.abs(lu))) if n else 0.0
    if n and scale == 0.0:
        raise SingularMatrix("matrix is identically zero")
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) < PIVOT_RTOL * scale:
            raise SingularMatrix(
                f"pivot {abs(lu[p, k]):.3e} below {PIVOT_RTOL:g} * {scale:.3e} "
                f"at elimination column {k}"
            )
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm


def lu_solve(lu: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve with factors from :func:`lu_factor`. ``b`` may be 1-D or 2-D."""
    n = lu.shape[0]
    b = np.asarray(b)
    if b.shape[0] != n:
        raise DimensionMismatch(f"right-hand side has {b.shape[0]} rows, expected {n}")
    dtype = complex if (np.iscomplexobj(lu) or np.iscomplexobj(b)) else float
    x = b.astype(dtype, copy=True)[perm]
    for k in range(1, n):
        x[k] -= lu[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):
        if k + 1 < n:
            x[k] -= lu[k, k + 1:] @ x[k + 1:]
        x[k] /= lu[k, k]
    return x


def solve_linear(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` for square ``a``."""
    lu, perm = lu_factor(a)
    return lu_solve(lu, perm, b)


def invert(a: np.ndarray) -> np.ndarray:
    """Return the inverse of square ``a``."""
    a = _as_square(a)
    lu, perm = lu_factor(a)
    eye = np.eye(a.shape[0], dtype=lu.dtype)
    return lu_solve(lu, perm, eye)


def is_spd(a: np.ndarray, sym_tol: float = 1e-9) -> bool:
    """True when ``a`` is symmetric (within ``sym_tol``) positive definite.

    Definiteness is decided by running a Cholesky factorization and
    checking that every pivot stays strictly positive.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    if not np.all(np.isfinite(a)):
        return False
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 0.0)
    if float(np.max(np.abs(a - a.T))) > sym_tol * scale:
        return False
    n = a.shape[0]
    chol = np.zeros_like(a)
    for k in range(n):
        d = a[k, k] - chol[k, :k] @ chol[k, :k]
        if d <= 0.0:
            return False
        chol[k, k] = np.sqrt(d)
        chol[k + 1:, k] = (a[k + 1:, k] - chol[k + 1:, :k] @ chol[k, :k]) / chol[k, k]
    return True
