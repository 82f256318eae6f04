"""Dense real linear algebra kernel for small plant dimensions (d <= 30).

Thin, contract-checked wrappers around LAPACK-backed routines, plus a
Kronecker-based continuous Lyapunov solver. All functions are pure and
operate on plain numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

MAX_DIM = 30

_SINGULAR_PIVOT_RTOL = 1e-13
_SYMMETRY_RTOL = 1e-10


class LinalgError(Exception):
    pass


class SingularMatrix(LinalgError):
    pass


class NotPositiveDefinite(LinalgError):
    pass


class NoConvergence(LinalgError):
    pass


class DimensionError(LinalgError):
    pass


def as_matrix(a) -> np.ndarray:
    """Validate and return a 2-D float array with finite entries."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def _require_square(a: np.ndarray, what: str = "matrix") -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {a.shape}")


def _require_symmetric(s: np.ndarray) -> None:
    scale = max(np.linalg.norm(s), 1.0)
    if np.linalg.norm(s - s.T) > _SYMMETRY_RTOL * scale:
        raise DimensionError("matrix is not symmetric")


def solve_linear(a, b) -> np.ndarray:
    """Solve a X = b by LU with partial pivoting.

    Raises SingularMatrix when a pivot magnitude drops below
    1e-13 * ||a||.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    _require_square(a)
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"rhs has {b.shape[0]} rows, expected {a.shape[0]}")
    lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots, initial=np.inf) < _SINGULAR_PIVOT_RTOL * max(np.linalg.norm(a), 1e-300):
        raise SingularMatrix("pivot below singularity threshold")
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def cholesky(s) -> np.ndarray:
    """Lower-triangular L with L L^T = s.

    Doubles as the positive-definiteness oracle: raises
    NotPositiveDefinite when any pivot is <= 0.
    """
    s = as_matrix(s)
    _require_square(s)
    _require_symmetric(s)
    d = s.shape[0]
    l = np.zeros((d, d))
    for j in range(d):
        pivot = s[j, j] - np.dot(l[j, :j], l[j, :j])
        if pivot <= 0.0:
            raise NotPositiveDefinite(f"pivot {pivot:g} at column {j}")
        l[j, j] = np.sqrt(pivot)
        for i in range(j + 1, d):
            l[i, j] = (s[i, j] - np.dot(l[i, :j], l[j, :j])) / l[j, j]
    return l


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns; orthogonal


def sym_eig(s) -> SymEig:
    s = as_matrix(s)
    _require_square(s)
    _require_symmetric(s)
    try:
        w, v = np.linalg.eigh(0.5 * (s + s.T))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return SymEig(eigenvalues=w, eigenvectors=v)


def spectral_abscissa(a) -> float:
    """Maximum real part of the eigenvalues of a general square matrix."""
    a = as_matrix(a)
    _require_square(a)
    try:
        return float(np.max(np.linalg.eigvals(a).real))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc


def expm(a, t: float = 1.0) -> np.ndarray:
    """Matrix exponential e^{a t} (scaling-and-squaring Pade)."""
    a = as_matrix(a)
    _require_square(a)
    if not np.isfinite(t):
        raise ValueError("duration must be finite")
    return scipy.linalg.expm(a * t)


def lyap_solve(a, q) -> np.ndarray:
    """Solve a^T P + P a + q = 0 for symmetric P.

    Uses the d^2 x d^2 Kronecker linearization; intended for d <= 30.
    Raises SingularMatrix when some pair of eigenvalues of a sums to ~0.
    """
    a = as_matrix(a)
    q = as_matrix(q)
    _require_square(a)
    _require_symmetric(q)
    d = a.shape[0]
    if q.shape[0] != d:
        raise DimensionError("a and q must have the same dimension")
    if d > MAX_DIM:
        raise DimensionError(f"dimension {d} exceeds supported maximum {MAX_DIM}")
    eye = np.eye(d)
    # Row-major vec: vec(a^T P) = (a^T (x) I) vec(P), vec(P a) = (I (x) a^T) vec(P).
    m = np.kron(a.T, eye) + np.kron(eye, a.T)
    p = solve_linear(m, -q.reshape(d * d, 1)).reshape(d, d)
    return 0.5 * (p + p.T)
