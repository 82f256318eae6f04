"""Stability-preserving periodic network scheduling for bandwidth-limited
networked control systems.

Given N unstable plants of which only M can be stabilized over the network
at a time, the package certifies per-plant quadratic stability rates,
searches a weighted digraph of access sets for a T-contractive cycle, turns
it into a periodic scheduling logic, and verifies global asymptotic
stability by exact piecewise-linear simulation.
"""

from .certificates import (
    AssumptionViolation,
    CertificateError,
    Infeasible,
    LambdaGrid,
    ModeCertificate,
    NoFeasibleRate,
    PlantCertificate,
    PlantSpec,
    certify_all,
    certify_plant,
    jump_factor,
    lqr_gain,
    stable_certificate,
    unstable_certificate,
)
from .cycles import (
    CycleDesign,
    CycleSearchError,
    SearchBudget,
    SearchExhausted,
    covering_cycles,
    design_cycle,
    t_contractive_factors,
)
from .graph import NcsGraph, validate_cycle, vertex_count
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, LpResult, lp_feasible
from .schedule import (
    ScheduleLogic,
    SwitchingSignal,
    SwitchStats,
    build_schedule,
    gamma_at,
    switch_stats,
    switching_signal,
)
from .sim import GasReport, Trajectory, gas_report, psi_bound, simulate, xi_from_schedule

__all__ = [
    "AssumptionViolation",
    "CertificateError",
    "CycleDesign",
    "CycleSearchError",
    "GasReport",
    "Infeasible",
    "INFEASIBLE",
    "LambdaGrid",
    "LpProblem",
    "LpResult",
    "ModeCertificate",
    "NcsGraph",
    "NoFeasibleRate",
    "OPTIMAL",
    "PlantCertificate",
    "PlantSpec",
    "ScheduleLogic",
    "SearchBudget",
    "SearchExhausted",
    "SwitchStats",
    "SwitchingSignal",
    "Trajectory",
    "UNBOUNDED",
    "build_schedule",
    "certify_all",
    "certify_plant",
    "covering_cycles",
    "design_cycle",
    "gamma_at",
    "gas_report",
    "jump_factor",
    "lp_feasible",
    "lqr_gain",
    "psi_bound",
    "simulate",
    "stable_certificate",
    "switch_stats",
    "switching_signal",
    "t_contractive_factors",
    "unstable_certificate",
    "validate_cycle",
    "vertex_count",
    "xi_from_schedule",
]

__version__ = "0.1.0"
