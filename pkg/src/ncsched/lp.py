"""Small dense two-phase simplex solver.

Solves  minimize c^T x  subject to  A x <= b,  x >= lb  using a tableau
simplex with Bland's anti-cycling rule. Sized for the T-factor problems
(tens of variables); determinism matters more than speed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LpError(Exception):
    pass


@dataclass(frozen=True)
class LpProblem:
    objective: np.ndarray          # minimize objective . x
    constraints: np.ndarray        # rows: coeffs with relation <=
    rhs: np.ndarray
    lower_bounds: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.objective, dtype=float))
        a = np.atleast_2d(np.asarray(self.constraints, dtype=float))
        b = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        lb = self.lower_bounds
        lb = np.zeros_like(c) if lb is None else np.atleast_1d(np.asarray(lb, dtype=float))
        if a.shape != (b.size, c.size) or lb.size != c.size:
            raise LpError(
                f"inconsistent LP dimensions: c{c.shape} A{a.shape} b{b.shape} lb{lb.shape}"
            )
        for arr in (c, a, b, lb):
            if not np.all(np.isfinite(arr)):
                raise LpError("LP data must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraints", a)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "lower_bounds", lb)


@dataclass(frozen=True)
class LpResult:
    status: str                    # optimal | infeasible | unbounded
    x: np.ndarray | None = None
    objective: float | None = None


def _pivot(tab: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    for i in range(tab.shape[0]):
        if i != row and abs(tab[i, col]) > 0.0:
            tab[i] -= tab[i, col] * tab[row]
    basis[row] = col


def _simplex(tab: np.ndarray, basis: list[int], n_cols: int) -> str:
    """Run Bland-rule simplex on a tableau whose last row is the reduced
    objective and last column the rhs. Returns OPTIMAL or UNBOUNDED."""
    m = tab.shape[0] - 1
    while True:
        obj = tab[-1, :n_cols]
        entering = -1
        for j in range(n_cols):
            if obj[j] < -_TOL:
                entering = j
                break
        if entering < 0:
            return OPTIMAL
        leaving = -1
        best_ratio = np.inf
        for i in range(m):
            coef = tab[i, entering]
            if coef > _TOL:
                ratio = tab[i, -1] / coef
                if ratio < best_ratio - _TOL or (
                    abs(ratio - best_ratio) <= _TOL
                    and (leaving < 0 or basis[i] < basis[leaving])
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving < 0:
            return UNBOUNDED
        _pivot(tab, basis, leaving, entering)


def lp_feasible(problem: LpProblem) -> LpResult:
    """Two-phase simplex; returns a vertex solution, or an infeasibility or
    unboundedness verdict."""
    c = problem.objective
    a = problem.constraints
    lb = problem.lower_bounds
    b = problem.rhs - a @ lb  # substitute y = x - lb >= 0
    m, n = a.shape

    # Standard form A y + s = b with slack per row; flip rows with b < 0 and
    # give them artificial variables.
    neg = b < 0
    n_art = int(np.count_nonzero(neg))
    n_cols = n + m + n_art
    tab = np.zeros((m + 1, n_cols + 1))
    basis: list[int] = [0] * m
    art_col = n + m
    for i in range(m):
        sign = -1.0 if neg[i] else 1.0
        tab[i, :n] = sign * a[i]
        tab[i, n + i] = sign
        tab[i, -1] = sign * b[i]
        if neg[i]:
            tab[i, art_col] = 1.0
            basis[i] = art_col
            art_col += 1
        else:
            basis[i] = n + i

    if n_art:
        # Phase 1: minimize the sum of artificials.
        tab[-1, n + m:n_cols] = 1.0
        for i in range(m):
            if basis[i] >= n + m:
                tab[-1] -= tab[i]
        status = _simplex(tab, basis, n_cols)
        if status != OPTIMAL:
            raise LpError("phase-1 simplex failed to terminate at an optimum")
        if -tab[-1, -1] > _TOL:
            return LpResult(status=INFEASIBLE)
        # Drive remaining artificials out of the basis where possible.
        for i in range(m):
            if basis[i] >= n + m:
                for j in range(n + m):
                    if abs(tab[i, j]) > _TOL:
                        _pivot(tab, basis, i, j)
                        break

    # Phase 2 on the original objective, artificial columns frozen.
    tab[-1, :] = 0.0
    tab[-1, :n] = c
    tab[:, n + m:n_cols] = 0.0
    for i in range(m):
        if basis[i] < n + m and abs(tab[-1, basis[i]]) > 0.0:
            tab[-1] -= tab[-1, basis[i]] * tab[i]
    status = _simplex(tab, basis, n + m)
    if status == UNBOUNDED:
        return LpResult(status=UNBOUNDED)

    y = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            y[basis[i]] = tab[i, -1]
    x = y + lb
    return LpResult(status=OPTIMAL, x=x, objective=float(c @ y + c @ lb))
