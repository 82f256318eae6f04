"""Weighted digraph of the NCS, kept lazy.

Vertices are the M-subsets of plants that hold the network (sorted id
tuples); the graph is complete minus self-loops, so neither vertices nor
edges are materialized. Weights are derived on demand from the plant
certificates: vertex weights carry per-plant decay/growth rates, edge
weights carry the log jump factors of plants whose access status changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certificates import PlantCertificate

VertexLabel = tuple[int, ...]  # sorted, distinct plant ids; len == capacity


class GraphError(Exception):
    pass


class InvalidCapacity(GraphError):
    pass


class InvalidVertex(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DegenerateCycle(GraphError):
    pass


def vertex_count(n: int, m: int) -> int:
    """Exact number of vertices C(n, m); arbitrary precision."""
    if m <= 0 or m >= n:
        raise InvalidCapacity(f"capacity must satisfy 0 < M < N, got M={m}, N={n}")
    return math.comb(n, m)


def make_vertex(ids, n_plants: int, capacity: int) -> VertexLabel:
    v = tuple(sorted(int(i) for i in ids))
    if len(v) != capacity or len(set(v)) != capacity:
        raise InvalidVertex(f"vertex must hold exactly {capacity} distinct plants: {ids}")
    if v and (v[0] < 1 or v[-1] > n_plants):
        raise InvalidVertex(f"plant ids must lie in 1..{n_plants}: {ids}")
    return v


def validate_cycle(cycle: list[VertexLabel]) -> None:
    """A cycle needs >= 2 vertices and distinct consecutive vertices
    including the wraparound."""
    n = len(cycle)
    if n < 2:
        raise DegenerateCycle(f"cycle length {n} < 2")
    for j in range(n):
        if cycle[j] == cycle[(j + 1) % n]:
            raise DegenerateCycle(f"consecutive duplicate vertex at position {j}")


@dataclass(frozen=True)
class NcsGraph:
    n_plants: int
    capacity: int
    certificates: list[PlantCertificate]

    def __post_init__(self):
        if not 0 < self.capacity < self.n_plants:
            raise InvalidCapacity(
                f"capacity must satisfy 0 < M < N, got M={self.capacity}, N={self.n_plants}"
            )
        if len(self.certificates) != self.n_plants:
            raise GraphError("one certificate per plant required")

    def _check_vertex(self, v: VertexLabel) -> None:
        make_vertex(v, self.n_plants, self.capacity)

    def vertex_weight(self, v: VertexLabel) -> np.ndarray:
        """Entry i: -|lambda_s| if plant i has access at v, else +|lambda_u|."""
        self._check_vertex(v)
        access = set(v)
        w = np.empty(self.n_plants)
        for idx, cert in enumerate(self.certificates):
            plant = idx + 1
            w[idx] = -cert.decay_rate if plant in access else cert.growth_rate
        return w

    def edge_weight(self, u: VertexLabel, v: VertexLabel) -> np.ndarray:
        """Entry i: ln mu_su if plant i loses access on (u, v), ln mu_us if it
        gains access, 0 if unchanged."""
        self._check_vertex(u)
        self._check_vertex(v)
        if tuple(u) == tuple(v):
            raise SelfLoop(f"no self-loop at {u}")
        in_u, in_v = set(u), set(v)
        w = np.zeros(self.n_plants)
        for idx, cert in enumerate(self.certificates):
            plant = idx + 1
            if plant in in_u and plant not in in_v:
                w[idx] = cert.log_mu_su
            elif plant not in in_u and plant in in_v:
                w[idx] = cert.log_mu_us
        return w

    def cycle_edge_weight(self, cycle: list[VertexLabel]) -> np.ndarray:
        """Total edge weight of a cycle, including the wraparound edge."""
        validate_cycle(cycle)
        n = len(cycle)
        total = np.zeros(self.n_plants)
        for j in range(n):
            total += self.edge_weight(cycle[j], cycle[(j + 1) % n])
        return total

    def xi(self, cycle: list[VertexLabel], t_factors) -> np.ndarray:
        """Per-plant net log-rate of one cycle period.

        The cycle is T-contractive iff every entry is negative.
        """
        validate_cycle(cycle)
        t = np.asarray(t_factors, dtype=float)
        if t.shape != (len(cycle),):
            raise DegenerateCycle("one T-factor per cycle vertex required")
        if np.any(t <= 0):
            raise DegenerateCycle("T-factors must be positive")
        total = self.cycle_edge_weight(cycle)
        for v, tv in zip(cycle, t):
            total = total + self.vertex_weight(v) * tv
        return total
