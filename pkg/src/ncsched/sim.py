"""Exact piecewise-LTI simulation of all plants under a schedule.

Dynamics are linear within every schedule segment, so states are propagated
with matrix exponentials (no ODE stepping); propagators are cached per
(mode, duration) and reused across periods. Also computes the Lyapunov
traces, the switching-bound psi, and the per-period contraction report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .certificates import PlantCertificate, PlantSpec
from .schedule import (
    STABLE,
    UNSTABLE,
    InsufficientHorizon,
    ScheduleLogic,
    SwitchStats,
    switch_stats,
    switching_signal,
)

OVERFLOW_LIMIT = 1e300


class SimulationError(Exception):
    pass


class DimensionMismatch(SimulationError):
    pass


@dataclass(frozen=True)
class Sample:
    t: float
    state: np.ndarray
    norm: float
    v_value: float
    mode: str


@dataclass(frozen=True)
class Trajectory:
    plant: int
    samples: list[Sample]
    overflow: bool = False


@dataclass(frozen=True)
class GasReport:
    plant: int
    period: float
    n_periods: int
    ratios: list[float]
    bound: float            # exp(Xi_i), per-period contraction bound
    norm_constant: float    # c = sqrt(max lambda_max(P) / min lambda_min(P))
    passed: bool
    trivially_converged: bool = False


def _mode_matrix(plant: PlantSpec, mode: str) -> np.ndarray:
    return plant.closed_loop if mode == STABLE else plant.a


def _v_value(cert: PlantCertificate, mode: str, x: np.ndarray) -> float:
    p = cert.stable.p if mode == STABLE else cert.unstable.p
    return float(x @ p @ x)


def simulate(plants: list[PlantSpec], certs: list[PlantCertificate],
             schedule: ScheduleLogic, x0: list[np.ndarray], horizon: float,
             sample_dt: float) -> list[Trajectory]:
    """Propagate every plant exactly across the schedule's segments.

    Samples are taken at sample_dt spacing within each segment plus at every
    switching instant (carrying the new mode, per right-open semantics).
    Trajectories whose norm exceeds 1e300 are truncated and flagged.
    """
    if horizon <= 0 or sample_dt <= 0:
        raise SimulationError("horizon and sample_dt must be positive")
    if len(x0) != len(plants) or len(certs) != len(plants):
        raise DimensionMismatch("one initial state and certificate per plant required")
    if schedule.n_plants != len(plants):
        raise DimensionMismatch(
            f"schedule is for {schedule.n_plants} plants, got {len(plants)}"
        )

    out = []
    for plant, cert, x_init in zip(plants, certs, x0):
        x_init = np.asarray(x_init, dtype=float).reshape(-1)
        if x_init.size != plant.dim:
            raise DimensionMismatch(
                f"plant {plant.index}: initial state has dim {x_init.size}, "
                f"expected {plant.dim}"
            )
        cache: dict[tuple[str, float], np.ndarray] = {}

        def propagator(mode: str, dt: float) -> np.ndarray:
            key = (mode, dt)
            if key not in cache:
                cache[key] = linalg.expm(_mode_matrix(plant, mode), dt)
            return cache[key]

        samples: list[Sample] = []
        overflow = False
        x = x_init
        t = 0.0
        seg_idx = 0
        n_seg = len(schedule.segments)
        first_mode = STABLE if plant.index in schedule.segments[0][0] else UNSTABLE
        samples.append(Sample(0.0, x.copy(), float(np.linalg.norm(x)),
                              _v_value(cert, first_mode, x), first_mode))
        while t < horizon and not overflow:
            access, dur = schedule.segments[seg_idx % n_seg]
            mode = STABLE if plant.index in access else UNSTABLE
            seg_len = min(dur, horizon - t)
            # interior samples
            n_steps = int(math.floor(seg_len / sample_dt - 1e-12))
            for k in range(1, n_steps + 1):
                if k * sample_dt >= seg_len:
                    break
                xk = propagator(mode, k * sample_dt) @ x
                nk = float(np.linalg.norm(xk))
                if nk > OVERFLOW_LIMIT:
                    overflow = True
                    break
                samples.append(Sample(t + k * sample_dt, xk, nk,
                                      _v_value(cert, mode, xk), mode))
            if overflow:
                break
            x = propagator(mode, seg_len) @ x
            t += seg_len
            nx = float(np.linalg.norm(x))
            if nx > OVERFLOW_LIMIT:
                overflow = True
                break
            if t < horizon:
                next_access = schedule.segments[(seg_idx + 1) % n_seg][0]
                end_mode = STABLE if plant.index in next_access else UNSTABLE
            else:
                end_mode = mode
            samples.append(Sample(t, x.copy(), nx, _v_value(cert, end_mode, x),
                                  end_mode))
            seg_idx += 1
        out.append(Trajectory(plant=plant.index, samples=samples, overflow=overflow))
    return out


def psi_bound(cert: PlantCertificate, stats: SwitchStats) -> float:
    """exp(-|lambda_s| D_s + |lambda_u| D_u + ln(mu_su) N_su + ln(mu_us) N_us)."""
    exponent = (
        -cert.decay_rate * stats.d_stable
        + cert.growth_rate * stats.d_unstable
        + cert.log_mu_su * stats.n_su
        + cert.log_mu_us * stats.n_us
    )
    return math.exp(exponent)


def xi_from_schedule(cert: PlantCertificate, schedule: ScheduleLogic) -> float:
    """Net log-rate of one schedule period for this plant (log of psi over
    one full period)."""
    sig = switching_signal(schedule, cert.plant)
    stats = switch_stats(sig, 0.0, schedule.period)
    return math.log(psi_bound(cert, stats))


def gas_report(traj: Trajectory, cert: PlantCertificate,
               schedule: ScheduleLogic) -> GasReport:
    """Per-period Lyapunov contraction check against exp(Xi_i)."""
    period = schedule.period
    horizon = traj.samples[-1].t if traj.samples else 0.0
    n_periods = int(math.floor(horizon / period + 1e-9))
    if n_periods < 2:
        raise InsufficientHorizon(
            f"horizon {horizon:g} covers {n_periods} full periods; need >= 2"
        )
    tol = 1e-9 * max(1.0, period)
    boundary_v = []
    for m in range(n_periods + 1):
        target = m * period
        candidates = [s for s in traj.samples if abs(s.t - target) <= tol]
        if not candidates:
            raise SimulationError(f"no sample at period boundary t={target:g}")
        boundary_v.append(candidates[0].v_value)

    trivially_converged = all(v == 0.0 for v in boundary_v)
    ratios = []
    for m in range(n_periods):
        if boundary_v[m] == 0.0:
            ratios.append(0.0 if boundary_v[m + 1] == 0.0 else math.inf)
        else:
            ratios.append(boundary_v[m + 1] / boundary_v[m])

    bound = math.exp(xi_from_schedule(cert, schedule))
    eigs = [linalg.sym_eig(p).eigenvalues for p in (cert.stable.p, cert.unstable.p)]
    c = math.sqrt(max(e[-1] for e in eigs) / min(e[0] for e in eigs))
    passed = trivially_converged or all(
        r <= bound * (1.0 + 1e-6) for r in ratios
    )
    return GasReport(
        plant=traj.plant,
        period=period,
        n_periods=n_periods,
        ratios=ratios,
        bound=bound,
        norm_constant=c,
        passed=passed,
        trivially_converged=trivially_converged,
    )
