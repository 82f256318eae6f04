"""Candidate-cycle generation and T-contractive cycle design.

A cycle is worth testing only if every plant is closed-loop at some vertex
(candidate contractive). Generation is deterministic: the greedy set-cover
cycle first, then covering vertex sequences of increasing length,
deduplicated up to rotation. T-factors for a given cycle come from a linear
program; the full driver couples a line search over certificate rates with
the cycle stream and returns the first T-contractive design.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import lp
from .certificates import (
    AssumptionViolation,
    Infeasible,
    LambdaGrid,
    PlantCertificate,
    PlantSpec,
    certify_plant,
)
from .graph import NcsGraph, VertexLabel, validate_cycle
from .linalg import spectral_abscissa


class CycleSearchError(Exception):
    pass


class CapacityInvalid(CycleSearchError):
    pass


class NotCandidateContractive(CycleSearchError):
    def __init__(self, plants):
        super().__init__(f"plants never closed-loop in cycle: {sorted(plants)}")
        self.plants = sorted(plants)


class SearchExhausted(CycleSearchError):
    def __init__(self, grid_points: int, cycles_tested: int):
        super().__init__(
            "no T-contractive cycle found "
            f"({grid_points} rate grid points, {cycles_tested} cycle LPs); "
            "this does not prove that none exists"
        )
        self.grid_points = grid_points
        self.cycles_tested = cycles_tested


@dataclass(frozen=True)
class SearchBudget:
    max_cycle_len: int = 12
    max_cycles: int = 200
    delta: float = 1e-6
    t_min: float = 1e-3

    def __post_init__(self):
        if self.max_cycle_len < 2 or self.max_cycles < 1:
            raise ValueError("cycle budget must allow at least one length-2 cycle")
        if self.delta <= 0 or self.t_min <= 0:
            raise ValueError("delta and t_min must be positive")


@dataclass(frozen=True)
class CycleDesign:
    vertices: list[VertexLabel]
    t_factors: np.ndarray
    xi_margins: np.ndarray
    lambda_s: float
    lambda_u: float
    certificates: list[PlantCertificate]

    @property
    def period(self) -> float:
        return float(np.sum(self.t_factors))


def _canonical_rotation(cycle: tuple[VertexLabel, ...]) -> tuple[VertexLabel, ...]:
    n = len(cycle)
    return min(tuple(cycle[(j + k) % n] for j in range(n)) for k in range(n))


def _greedy_cover_cycle(n: int, m: int) -> list[VertexLabel]:
    """Repeatedly pick the M-subset covering the most uncovered plants,
    breaking ties by the lexicographically smallest subset."""
    uncovered = set(range(1, n + 1))
    cycle: list[VertexLabel] = []
    while uncovered:
        gain = sorted(uncovered)[:m]
        fill = [i for i in range(1, n + 1) if i not in gain]
        vertex = tuple(sorted(gain + fill[: m - len(gain)]))
        cycle.append(vertex)
        uncovered -= set(vertex)
    return cycle


def covering_cycles(g: NcsGraph, max_count: int, max_len: int):
    """Deterministic stream of candidate contractive cycles.

    Yields the greedy set-cover cycle first, then enumerates covering vertex
    sequences of increasing length up to max_len, deduplicated up to
    rotation. Consecutive vertices (wraparound included) are distinct.
    """
    n, m = g.n_plants, g.capacity
    min_len = max(2, math.ceil(n / m))
    if min_len > max_len:
        raise CapacityInvalid(
            f"covering a cycle needs length >= {min_len}, budget allows {max_len}"
        )

    seen: set[tuple[VertexLabel, ...]] = set()
    yielded = 0

    greedy = _greedy_cover_cycle(n, m)
    seen.add(_canonical_rotation(tuple(greedy)))
    yield list(greedy)
    yielded += 1
    if yielded >= max_count:
        return

    all_plants = frozenset(range(1, n + 1))
    vertices = [tuple(c) for c in combinations(range(1, n + 1), m)]

    def extend(seq: list[VertexLabel], covered: frozenset, length: int):
        nonlocal yielded
        if yielded >= max_count:
            return
        if len(seq) == length:
            if covered != all_plants or seq[-1] == seq[0]:
                return
            canon = _canonical_rotation(tuple(seq))
            if canon != tuple(seq) or canon in seen:
                return
            seen.add(canon)
            yield list(seq)
            yielded += 1
            return
        remaining = length - len(seq)
        if len(all_plants - covered) > remaining * m:
            return
        for v in vertices:
            if seq and v == seq[-1]:
                continue
            yield from extend(seq + [v], covered | frozenset(v), length)
            if yielded >= max_count:
                return

    for length in range(min_len, max_len + 1):
        yield from extend([], frozenset(), length)
        if yielded >= max_count:
            return


def t_contractive_factors(g: NcsGraph, cycle: list[VertexLabel],
                          delta: float = 1e-6, t_min: float = 1e-3):
    """Dwell durations making the cycle T-contractive, or None.

    Builds the LP: minimize sum T_j subject to, per plant i,
    sum_j vertex_weight_i(v_j) T_j <= -(total edge weight)_i - delta,
    with T_j >= t_min.
    """
    validate_cycle(cycle)
    covered = set().union(*cycle)
    missing = set(range(1, g.n_plants + 1)) - covered
    if missing:
        raise NotCandidateContractive(missing)

    n = len(cycle)
    rows = np.stack([g.vertex_weight(v) for v in cycle], axis=1)  # N x n
    edge_total = g.cycle_edge_weight(cycle)
    problem = lp.LpProblem(
        objective=np.ones(n),
        constraints=rows,
        rhs=-edge_total - delta,
        lower_bounds=np.full(n, t_min),
    )
    result = lp.lp_feasible(problem)
    if result.status != lp.OPTIMAL:
        return None
    t = result.x
    if np.any(g.xi(cycle, t) >= 0):
        return None
    return t


def _check_assumptions(plants: list[PlantSpec]) -> None:
    for plant in plants:
        if spectral_abscissa(plant.a) < 0:
            raise AssumptionViolation(
                f"plant {plant.index} is open-loop Hurwitz; scheduling is moot"
            )
        if spectral_abscissa(plant.closed_loop) >= 0:
            raise AssumptionViolation(
                f"plant {plant.index} closed loop is not Hurwitz"
            )


def design_cycle(plants: list[PlantSpec], m: int, grid: LambdaGrid,
                 search: SearchBudget = SearchBudget(),
                 kappa: float = 0.01) -> CycleDesign:
    """Line search over certificate rates coupled with cycle search.

    Iterates the rate grid in order (shared rates across plants); for each
    grid point with feasible certificates, streams candidate cycles through
    the T-factor LP and returns the first T-contractive design found.
    """
    n = len(plants)
    if not 0 < m < n:
        raise CapacityInvalid(f"capacity must satisfy 0 < M < N, got M={m}, N={n}")
    _check_assumptions(plants)

    caps_s = np.array([-2.0 * spectral_abscissa(p.closed_loop) for p in plants])
    caps_u = np.array([-2.0 * spectral_abscissa(p.a) for p in plants])

    grid_points = 0
    cycles_tested = 0
    for lam_s, lam_u in grid.points():
        grid_points += 1
        if np.any(lam_s >= caps_s) or np.any(lam_u >= caps_u):
            continue
        # Necessary for any cycle: each plant's stable share g/(g+lam) of the
        # period must fit into the capacity M in aggregate.
        growth = abs(lam_u)
        if n * growth / (growth + lam_s) > m:
            continue
        try:
            certs = [certify_plant(p, lam_s, lam_u, kappa=kappa) for p in plants]
        except Infeasible:
            continue
        g = NcsGraph(n_plants=n, capacity=m, certificates=certs)
        for cycle in covering_cycles(g, search.max_cycles, search.max_cycle_len):
            cycles_tested += 1
            t = t_contractive_factors(g, cycle, delta=search.delta, t_min=search.t_min)
            if t is not None:
                return CycleDesign(
                    vertices=cycle,
                    t_factors=t,
                    xi_margins=g.xi(cycle, t),
                    lambda_s=lam_s,
                    lambda_u=lam_u,
                    certificates=certs,
                )
    raise SearchExhausted(grid_points, cycles_tested)
