"""Small dense numeric kernel: solve, discrete Lyapunov, Jacobi, bisection.

Everything here is written out rather than delegated so the error
contracts (pivot collapse, non-contraction, sweep budget) are explicit
and testable.  Matrices are numpy arrays; symmetric inputs are validated
with `require_symmetric`.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DimensionMismatch,
    Infeasible,
    NoConvergence,
    PreconditionViolated,
    SingularMatrix,
    Unstable,
    ValueOutOfRange,
)

PIVOT_RTOL = 1e-13
DLYAP_RESIDUAL = 1e-10
DLYAP_MAX_ITER = 10_000
JACOBI_MAX_SWEEPS = 100
BISECT_TOL = 1e-9
BISECT_MAX_ITER = 64


def require_symmetric(m, tol: float = 1e-9, what: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch("%s must be square, got shape %s" % (what, m.shape))
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.T)) > tol * scale:
        raise PreconditionViolated("%s is not symmetric" % what)
    return 0.5 * (m + m.T)


def linear_solve(a, b) -> np.ndarray:
    """Solve a x = b by Gaussian elimination with partial pivoting.

    Raises SingularMatrix when the best available pivot falls below
    PIVOT_RTOL * ||a||_inf.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("coefficient matrix must be square, got %s" % (a.shape,))
    n = a.shape[0]
    vector_rhs = b.ndim == 1
    if vector_rhs:
        b = b.reshape(-1, 1)
    if b.shape[0] != n:
        raise DimensionMismatch(
            "rhs has %d rows, expected %d" % (b.shape[0], n)
        )
    norm = float(np.max(np.sum(np.abs(a), axis=1))) if n else 0.0
    threshold = PIVOT_RTOL * max(norm, 1e-300)
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) < threshold:
            raise SingularMatrix(
                "pivot %.3e below %.3e at column %d" % (abs(a[piv, col]), threshold, col)
            )
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        factors = a[col + 1 :, col] / a[col, col]
        a[col + 1 :, col:] -= np.outer(factors, a[col, col:])
        b[col + 1 :] -= np.outer(factors, b[col])
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x[:, 0] if vector_rhs else x


def solve_dlyap(a, c) -> np.ndarray:
    """Solve a' Q a - Q + c = 0 for symmetric Q, by fixed-point iteration.

    Q_{j+1} = a' Q_j a + c contracts iff the spectral radius of a is
    below one; non-contraction within DLYAP_MAX_ITER raises Unstable.
    The result satisfies ||a' Q a - Q + c||_max <= DLYAP_RESIDUAL.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("state matrix must be square, got %s" % (a.shape,))
    c = require_symmetric(c, what="constant term")
    if c.shape != a.shape:
        raise DimensionMismatch(
            "constant term shape %s != state matrix shape %s" % (c.shape, a.shape)
        )
    q = c.copy()
    at = a.T
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is caught below
        for _ in range(DLYAP_MAX_ITER):
            residual = at @ q @ a - q + c
            err = float(np.max(np.abs(residual))) if residual.size else 0.0
            if err <= DLYAP_RESIDUAL:
                return 0.5 * (q + q.T)
            if not np.isfinite(err):
                raise Unstable("iteration diverged (residual not finite)")
            q = q + residual
    raise Unstable(
        "residual %.3e after %d iterations; spectral radius likely >= 1"
        % (err, DLYAP_MAX_ITER)
    )


def _jacobi(m: np.ndarray):
    """Cyclic Jacobi sweeps; returns (eigenvalues ascending, rotations V)."""
    a = m.copy()
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    scale = max(float(np.max(np.abs(a))), 1e-300)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.max(np.abs(a - np.diag(a.diagonal())))
        if off <= 1e-14 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-16 * scale:
                    continue
                # classic 2x2 rotation annihilating a[p,q]
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    else:
        raise NoConvergence(
            "off-diagonal %.3e after %d sweeps" % (off, JACOBI_MAX_SWEEPS)
        )
    order = np.argsort(a.diagonal(), kind="stable")
    return a.diagonal()[order].copy(), v[:, order]


def sym_eigenvalues(m) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi."""
    m = require_symmetric(m)
    vals, _ = _jacobi(m)
    return vals


def sym_eigen(m):
    """Eigenvalues (ascending) and orthonormal eigenvectors as columns."""
    m = require_symmetric(m)
    return _jacobi(m)


def bisect_threshold(predicate, tol: float = BISECT_TOL) -> float:
    """Smallest theta in [0, 1] with predicate(theta) true, to within tol.

    The predicate must be monotone (false below the threshold, true
    above).  predicate(1) false raises Infeasible; predicate(0) true
    returns 0.
    """
    if not 0.0 < tol < 1.0:
        raise ValueOutOfRange("tolerance %g outside (0, 1)" % tol)
    if not predicate(1.0):
        raise Infeasible("predicate false at theta = 1")
    if predicate(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return hi


def chol_semidefinite(m, tol: float = 1e-10) -> np.ndarray:
    """Lower Cholesky factor of a PSD matrix, zero rows where rank drops.

    Standard algorithm with the pivot clamped at zero; a diagonal entry
    below -tol*scale means the matrix is not PSD.
    """
    m = require_symmetric(m, what="covariance")
    n = m.shape[0]
    scale = max(1.0, float(np.max(np.abs(m))))
    l = np.zeros_like(m)
    for j in range(n):
        d = m[j, j] - l[j, :j] @ l[j, :j]
        if d < -tol * scale:
            raise PreconditionViolated(
                "covariance not positive semidefinite (pivot %.3e)" % d
            )
        if d <= tol * scale:
            continue  # rank-deficient direction: leave the row zero
        l[j, j] = np.sqrt(d)
        for i in range(j + 1, n):
            l[i, j] = (m[i, j] - l[i, :j] @ l[j, :j]) / l[j, j]
    return l
