"""Per-plant quadratic stability certificates.

For each plant we build a pair of Lyapunov-like functions V_p(x) = x^T P_p x,
one for the closed-loop (stable) mode and one for the open-loop (unstable)
mode, together with decay/growth rates and the jump factors relating the two
functions at a mode switch. Also provides LQR gain synthesis for generated
plant ensembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .linalg import NotPositiveDefinite, SingularMatrix  # re-exported errors

STABLE = "stable"
UNSTABLE = "unstable"

_NEWTON_MAX_STEPS = 50
_CARE_TOL = 1e-8


class CertificateError(Exception):
    pass


class Infeasible(CertificateError):
    """Requested rate is outside the exactly-characterized feasible range."""

    def __init__(self, rate_limit: float):
        super().__init__(f"rate infeasible; limit is {rate_limit:g}")
        self.rate_limit = rate_limit


class NoFeasibleRate(CertificateError):
    def __init__(self, plant: int):
        super().__init__(f"no feasible rate grid point for plant {plant}")
        self.plant = plant


class NotStabilizable(CertificateError):
    pass


class AssumptionViolation(CertificateError):
    """The NCS assumptions (open-loop unstable, closed-loop Hurwitz) fail."""


class InternalInconsistency(CertificateError):
    pass


@dataclass(frozen=True)
class PlantSpec:
    """One plant: open-loop A, input map B and state-feedback gain K."""

    index: int
    a: np.ndarray
    b: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        a = linalg.as_matrix(self.a)
        b = linalg.as_matrix(self.b)
        k = linalg.as_matrix(self.k)
        d = a.shape[0]
        if a.shape != (d, d):
            raise linalg.DimensionError("A must be square")
        if b.shape[0] != d or k.shape[1] != d or k.shape[0] != b.shape[1]:
            raise linalg.DimensionError(
                f"inconsistent plant dimensions: A{a.shape} B{b.shape} K{k.shape}"
            )
        if linalg.spectral_abscissa(a + b @ k) >= 0:
            raise AssumptionViolation(
                f"plant {self.index}: closed loop A + BK is not Hurwitz"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "k", k)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @property
    def closed_loop(self) -> np.ndarray:
        return self.a + self.b @ self.k


@dataclass(frozen=True)
class ModeCertificate:
    """Pair (P, rate) with A^T P + P A <= -rate * P and lambda_max(P) = 1."""

    mode: str
    p: np.ndarray
    rate: float


@dataclass(frozen=True)
class PlantCertificate:
    plant: int
    stable: ModeCertificate
    unstable: ModeCertificate
    mu_su: float
    mu_us: float

    @property
    def decay_rate(self) -> float:
        return abs(self.stable.rate)

    @property
    def growth_rate(self) -> float:
        return abs(self.unstable.rate)

    @property
    def log_mu_su(self) -> float:
        return math.log(self.mu_su)

    @property
    def log_mu_us(self) -> float:
        return math.log(self.mu_us)


@dataclass(frozen=True)
class LambdaGrid:
    """Line-search grid over candidate decay/growth rates.

    Stable rates ascend from s_min by h_s; unstable rates (<= 0) ascend
    from u_min by h_u. The loop order is (s outer, u inner).
    """

    s_min: float
    s_max: float
    h_s: float
    u_min: float
    u_max: float = 0.0
    h_u: float = field(default=0.01)

    def __post_init__(self):
        if self.s_min <= 0 or self.s_max < self.s_min:
            raise ValueError("stable-rate bounds must satisfy 0 < s_min <= s_max")
        if self.u_max > 0 or self.u_min > self.u_max:
            raise ValueError("unstable-rate bounds must satisfy u_min <= u_max <= 0")
        if self.h_s <= 0 or self.h_u <= 0:
            raise ValueError("grid steps must be positive")

    def stable_rates(self):
        k = 0
        while (rate := self.s_min + k * self.h_s) <= self.s_max + 1e-12:
            yield rate
            k += 1

    def unstable_rates(self):
        k = 0
        while (rate := self.u_min + k * self.h_u) <= self.u_max + 1e-12:
            yield min(rate, 0.0)
            k += 1

    def points(self):
        for lam_s in self.stable_rates():
            for lam_u in self.unstable_rates():
                yield lam_s, lam_u


def _shifted_certificate(a: np.ndarray, rate: float, mode: str) -> ModeCertificate:
    d = a.shape[0]
    p = linalg.lyap_solve(a + 0.5 * rate * np.eye(d), np.eye(d))
    p = p / linalg.sym_eig(p).eigenvalues[-1]
    return ModeCertificate(mode=mode, p=p, rate=rate)


def stable_certificate(a_s, lambda_target: float) -> ModeCertificate:
    """Certificate for a Hurwitz closed-loop matrix at decay rate lambda_target.

    Feasibility is decided exactly: lambda is feasible iff
    lambda < -2 * spectral_abscissa(a_s).
    """
    a_s = linalg.as_matrix(a_s)
    if lambda_target <= 0:
        raise ValueError("stable-mode rate must be positive")
    limit = -2.0 * linalg.spectral_abscissa(a_s)
    if lambda_target >= limit:
        raise Infeasible(limit)
    return _shifted_certificate(a_s, lambda_target, STABLE)


def unstable_certificate(a_u, lambda_target: float) -> ModeCertificate:
    """Certificate bounding V-growth of the open-loop mode at rate |lambda_target|.

    lambda_target <= 0 is feasible iff |lambda_target| > 2 * spectral_abscissa(a_u).
    """
    a_u = linalg.as_matrix(a_u)
    if lambda_target > 0:
        raise ValueError("unstable-mode rate must be <= 0")
    alpha = linalg.spectral_abscissa(a_u)
    if abs(lambda_target) <= 2.0 * alpha:
        raise Infeasible(-2.0 * alpha)
    return _shifted_certificate(a_u, lambda_target, UNSTABLE)


def jump_factor(p_from, p_to) -> float:
    """Tight jump factor lambda_max(p_to p_from^{-1}) between quadratic forms.

    Computed stably as lambda_max(L^{-1} p_to L^{-T}) with L = cholesky(p_from).
    """
    import scipy.linalg as sla

    l_from = linalg.cholesky(p_from)
    linalg.cholesky(p_to)  # positive-definiteness check of the target
    z = sla.solve_triangular(l_from, linalg.as_matrix(p_to), lower=True)
    y = sla.solve_triangular(l_from, z.T, lower=True).T
    mu = float(linalg.sym_eig(0.5 * (y + y.T)).eigenvalues[-1])
    if mu < 1.0 - 1e-6:
        raise InternalInconsistency(f"jump factor {mu:.12g} below 1")
    if 1.0 - 1e-10 <= mu < 1.0:
        mu = 1.0
    return mu


def certify_plant(plant: PlantSpec, lam_s: float, lam_u: float,
                  kappa: float = 0.01) -> PlantCertificate:
    """Build both mode certificates for one plant at the given rates.

    Raises Infeasible when a rate is outside the feasible range or a
    certificate is ill-conditioned (lambda_min(P) < kappa).
    """
    cs = stable_certificate(plant.closed_loop, lam_s)
    cu = unstable_certificate(plant.a, lam_u)
    for cert in (cs, cu):
        if linalg.sym_eig(cert.p).eigenvalues[0] < kappa:
            raise Infeasible(cert.rate)
    return PlantCertificate(
        plant=plant.index,
        stable=cs,
        unstable=cu,
        mu_su=jump_factor(cs.p, cu.p),
        mu_us=jump_factor(cu.p, cs.p),
    )


def certify_all(plants: list[PlantSpec], grid: LambdaGrid,
                kappa: float = 0.01) -> list[PlantCertificate]:
    """First feasible grid point per plant, in the grid's loop order."""
    out = []
    for plant in plants:
        cap_s = -2.0 * linalg.spectral_abscissa(plant.closed_loop)
        cap_u = -2.0 * linalg.spectral_abscissa(plant.a)
        cert = None
        for lam_s, lam_u in grid.points():
            if lam_s >= cap_s or lam_u >= cap_u:
                continue
            try:
                cert = certify_plant(plant, lam_s, lam_u, kappa=kappa)
                break
            except Infeasible:
                continue
        if cert is None:
            raise NoFeasibleRate(plant.index)
        out.append(cert)
    return out


def lqr_gain(a, b, q, r) -> np.ndarray:
    """Continuous-time LQR gain K = R^{-1} B^T P with a - b K Hurwitz.

    Solves the algebraic Riccati equation by Newton-Kleinman iteration,
    started from a Bass-type stabilizing gain built with a shifted
    Lyapunov solve.
    """
    a = linalg.as_matrix(a)
    b = linalg.as_matrix(b)
    q = linalg.as_matrix(q)
    r = linalg.as_matrix(r)
    d = a.shape[0]
    linalg.cholesky(q)
    linalg.cholesky(r)

    # Positive shift making a + eta*I anti-stable; both are needed for the
    # Bass gain k0 = b^T X^{-1} to render a - b k0 Hurwitz.
    eta = max(linalg.spectral_abscissa(-a), 0.0) + 1.0
    try:
        x = linalg.lyap_solve(-(a + eta * np.eye(d)).T, 2.0 * b @ b.T)
        k0 = linalg.solve_linear(x, b).T
    except (SingularMatrix, linalg.DimensionError) as exc:
        raise NotStabilizable(str(exc)) from exc
    if linalg.spectral_abscissa(a - b @ k0) >= 0:
        raise NotStabilizable("Bass construction did not stabilize the pair (a, b)")

    k = k0
    for _ in range(_NEWTON_MAX_STEPS):
        p = linalg.lyap_solve(a - b @ k, q + k.T @ r @ k)
        k = linalg.solve_linear(r, b.T @ p)
        residual = a.T @ p + p @ a - p @ b @ linalg.solve_linear(r, b.T @ p) + q
        if np.linalg.norm(residual) <= _CARE_TOL:
            return k
    raise linalg.NoConvergence(
        f"Newton iteration did not reach tolerance in {_NEWTON_MAX_STEPS} steps"
    )
