"""Tests for quadratic stability certificates and LQR synthesis."""

import math

import numpy as np
import pytest

from ncsched import (
    Infeasible,
    LambdaGrid,
    NoFeasibleRate,
    PlantSpec,
    certify_all,
    certify_plant,
    jump_factor,
    linalg,
    lqr_gain,
    stable_certificate,
    unstable_certificate,
)
from ncsched.certificates import AssumptionViolation, InternalInconsistency, NotStabilizable
from conftest import A1, B1, K1, random_hurwitz, random_spd


class TestPlantSpec:
    def test_non_hurwitz_closed_loop_rejected(self):
        with pytest.raises(AssumptionViolation):
            PlantSpec(index=1, a=np.eye(2), b=np.zeros((2, 1)), k=np.zeros((1, 2)))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(linalg.DimensionError):
            PlantSpec(index=1, a=np.eye(2), b=np.zeros((3, 1)), k=np.zeros((1, 2)))

    def test_closed_loop_property(self):
        p = PlantSpec(index=1, a=np.array([[0.5]]), b=np.array([[1.0]]),
                      k=np.array([[-1.5]]))
        assert p.closed_loop == pytest.approx(-1.0)
        assert p.dim == 1


class TestStableCertificate:
    def test_identity_near_boundary(self):
        cert = stable_certificate(-np.eye(2), 2.0 - 1e-6)
        assert np.allclose(cert.p, np.eye(2), atol=1e-6)

    def test_identity_infeasible_beyond_boundary(self):
        with pytest.raises(Infeasible) as exc:
            stable_certificate(-np.eye(2), 2.5)
        assert exc.value.rate_limit == pytest.approx(2.0)

    def test_reference_closed_loop_feasible(self):
        cert = stable_certificate(A1 + B1 @ K1, 0.1)
        assert cert.rate == 0.1
        linalg.cholesky(cert.p)

    def test_normalization(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            a = random_hurwitz(rng, 3)
            lam = -2.0 * linalg.spectral_abscissa(a) * 0.5
            cert = stable_certificate(a, lam)
            assert linalg.sym_eig(cert.p).eigenvalues[-1] == pytest.approx(1.0, abs=1e-10)

    def test_certificate_inequality_holds(self):
        # a^T P + P a + lambda P must be negative semidefinite.
        rng = np.random.default_rng(11)
        for _ in range(30):
            a = random_hurwitz(rng, 3)
            lam = -linalg.spectral_abscissa(a)  # half the feasible limit
            cert = stable_certificate(a, lam)
            m = a.T @ cert.p + cert.p @ a + lam * cert.p
            assert linalg.sym_eig(m).eigenvalues[-1] <= 1e-8

    def test_exact_feasibility_frontier(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            a = random_hurwitz(rng, 3)
            limit = -2.0 * linalg.spectral_abscissa(a)
            stable_certificate(a, limit - 1e-3)
            with pytest.raises(Infeasible):
                stable_certificate(a, limit + 1e-3)

    def test_nonpositive_rate_rejected(self):
        with pytest.raises(ValueError):
            stable_certificate(-np.eye(2), 0.0)


class TestUnstableCertificate:
    def test_reference_open_loop_feasible(self):
        cert = unstable_certificate(A1, -2.4 - 1e-6)
        linalg.cholesky(cert.p)

    def test_reference_open_loop_infeasible(self):
        with pytest.raises(Infeasible) as exc:
            unstable_certificate(A1, -1.0)
        assert exc.value.rate_limit == pytest.approx(-2.4)

    def test_scalar_growth_bound(self):
        cert = unstable_certificate(np.array([[0.5]]), -1.5)
        assert cert.p == pytest.approx(1.0)
        # V grows no faster than exp(1.5 t) along xdot = 0.5 x.
        for t in (0.1, 1.0, 5.0):
            assert math.exp(2 * 0.5 * t) <= math.exp(1.5 * t) + 1e-12

    def test_hurwitz_matrix_any_rate_feasible(self):
        cert = unstable_certificate(-np.eye(3), 0.0)
        linalg.cholesky(cert.p)

    def test_positive_rate_rejected(self):
        with pytest.raises(ValueError):
            unstable_certificate(np.eye(2), 0.5)

    def test_growth_inequality_holds(self):
        # a^T P + P a - |lambda| P negative semidefinite for feasible lambda.
        rng = np.random.default_rng(13)
        for _ in range(30):
            a = rng.standard_normal((3, 3))
            lam = -(2.0 * abs(linalg.spectral_abscissa(a)) + 1.0)
            cert = unstable_certificate(a, lam)
            m = a.T @ cert.p + cert.p @ a + lam * cert.p
            assert linalg.sym_eig(m).eigenvalues[-1] <= 1e-8


class TestJumpFactor:
    def test_identity_pair(self):
        assert jump_factor(np.eye(3), np.eye(3)) == pytest.approx(1.0)

    def test_diagonal_example(self):
        assert jump_factor(np.eye(2), np.diag([2.0, 0.5])) == pytest.approx(2.0)

    @staticmethod
    def _normalized_spd(rng, d):
        # Certificate-style normalization: largest eigenvalue exactly 1.
        p = random_spd(rng, d)
        return p / linalg.sym_eig(p).eigenvalues[-1]

    def test_product_at_least_one(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            p = self._normalized_spd(rng, 3)
            q = self._normalized_spd(rng, 3)
            assert jump_factor(p, q) * jump_factor(q, p) >= 1.0 - 1e-9

    def test_matches_direct_eigenvalue(self):
        rng = np.random.default_rng(15)
        for _ in range(50):
            p = self._normalized_spd(rng, 4)
            q = self._normalized_spd(rng, 4)
            direct = float(np.max(np.linalg.eigvals(q @ np.linalg.inv(p)).real))
            got = jump_factor(p, q)
            if got > 1.0:
                assert got == pytest.approx(direct, rel=1e-8)

    def test_not_positive_definite_rejected(self):
        with pytest.raises(linalg.NotPositiveDefinite):
            jump_factor(np.diag([1.0, -1.0]), np.eye(2))

    def test_bound_holds_pointwise(self):
        # V_q(xi) <= mu_pq V_p(xi) for all xi, both directions.
        rng = np.random.default_rng(16)
        p, q = random_spd(rng, 3), random_spd(rng, 3)
        mu_pq, mu_qp = jump_factor(p, q), jump_factor(q, p)
        for _ in range(100):
            xi = rng.standard_normal(3)
            assert xi @ q @ xi <= mu_pq * (xi @ p @ xi) * (1 + 1e-10)
            assert xi @ p @ xi <= mu_qp * (xi @ q @ xi) * (1 + 1e-10)


class TestCertifyPlant:
    def _plant(self):
        return PlantSpec(index=1, a=np.array([[0.3, 1.0], [0.0, 0.1]]),
                         b=np.array([[0.0], [1.0]]),
                         k=np.array([[-3.0, -4.0]]))

    def test_rates_recorded(self):
        cert = certify_plant(self._plant(), 0.5, -1.0)
        assert cert.decay_rate == 0.5
        assert cert.growth_rate == 1.0
        assert cert.mu_su >= 1.0 and cert.mu_us >= 1.0

    def test_kappa_floor_rejects_ill_conditioned(self):
        plant = self._plant()
        cert = certify_plant(plant, 0.5, -1.0, kappa=0.01)
        floor = min(linalg.sym_eig(cert.stable.p).eigenvalues[0],
                    linalg.sym_eig(cert.unstable.p).eigenvalues[0])
        with pytest.raises(Infeasible):
            certify_plant(plant, 0.5, -1.0, kappa=floor * 1.01)

    def test_log_mu_scale_invariance(self):
        # ln mu_su + ln mu_us is invariant under rescaling one P. Scales are
        # kept inside (1/mu_us, mu_su) so both rescaled factors stay >= 1.
        cert = certify_plant(self._plant(), 0.5, -1.0)
        lo, hi = 1.0 / cert.mu_us, cert.mu_su
        for frac in (0.1, 0.5, 0.9):
            c = lo + frac * (hi - lo)
            mu_su = jump_factor(c * cert.stable.p, cert.unstable.p)
            mu_us = jump_factor(cert.unstable.p, c * cert.stable.p)
            assert math.log(mu_su) + math.log(mu_us) == pytest.approx(
                cert.log_mu_su + cert.log_mu_us, abs=1e-9
            )

    def test_decay_bound_along_flow(self):
        # V_s(x(t)) <= exp(-lambda_s t) V_s(x(0)) along the closed loop.
        plant = self._plant()
        cert = certify_plant(plant, 0.5, -1.0)
        rng = np.random.default_rng(17)
        for t in (0.1, 1.0, 5.0):
            prop = linalg.expm(plant.closed_loop, t)
            for _ in range(100):
                x0 = rng.standard_normal(2)
                xt = prop @ x0
                v0 = x0 @ cert.stable.p @ x0
                vt = xt @ cert.stable.p @ xt
                assert vt <= math.exp(-0.5 * t) * v0 * (1 + 1e-8)

    def test_growth_bound_along_flow(self):
        plant = self._plant()
        cert = certify_plant(plant, 0.5, -1.0)
        rng = np.random.default_rng(18)
        for t in (0.1, 1.0, 5.0):
            prop = linalg.expm(plant.a, t)
            for _ in range(100):
                x0 = rng.standard_normal(2)
                xt = prop @ x0
                v0 = x0 @ cert.unstable.p @ x0
                vt = xt @ cert.unstable.p @ xt
                assert vt <= math.exp(1.0 * t) * v0 * (1 + 1e-8)


class TestLambdaGrid:
    def test_loop_order(self):
        grid = LambdaGrid(s_min=1.0, s_max=1.2, h_s=0.1, u_min=-0.1, u_max=0.0, h_u=0.1)
        pts = list(grid.points())
        assert pts == pytest.approx([(1.0, -0.1), (1.0, 0.0), (1.1, -0.1), (1.1, 0.0),
                                     (1.2, -0.1), (1.2, 0.0)])

    def test_invalid_bounds_rejected(self):
        with pytest.raises(ValueError):
            LambdaGrid(s_min=-1.0, s_max=1.0, h_s=0.1, u_min=-1.0)
        with pytest.raises(ValueError):
            LambdaGrid(s_min=0.1, s_max=1.0, h_s=0.1, u_min=-1.0, u_max=0.5)
        with pytest.raises(ValueError):
            LambdaGrid(s_min=0.1, s_max=1.0, h_s=0.0, u_min=-1.0)


class TestCertifyAll:
    def test_simple_plant_first_feasible_point(self):
        plant = PlantSpec(index=1, a=np.array([[0.05]]), b=np.array([[1.0]]),
                          k=np.array([[-1.05]]))  # closed loop -1
        grid = LambdaGrid(s_min=0.1, s_max=2.0, h_s=0.1, u_min=-0.5, u_max=0.0, h_u=0.1)
        certs = certify_all([plant], grid)
        assert certs[0].stable.rate == pytest.approx(0.1)
        assert certs[0].unstable.rate == pytest.approx(-0.5)

    def test_no_feasible_rate(self):
        plant = PlantSpec(index=3, a=np.array([[0.05]]), b=np.array([[1.0]]),
                          k=np.array([[-1.05]]))
        grid = LambdaGrid(s_min=100.0, s_max=101.0, h_s=0.5, u_min=-1.0)
        with pytest.raises(NoFeasibleRate) as exc:
            certify_all([plant], grid)
        assert exc.value.plant == 3


class TestLqrGain:
    def test_scalar_unstable_closed_form(self):
        # a=1, b=1, q=5, r=1: p = 1 + sqrt(6), k = p, closed loop -sqrt(6).
        k = lqr_gain(np.array([[1.0]]), np.array([[1.0]]),
                     np.array([[5.0]]), np.array([[1.0]]))
        assert k[0, 0] == pytest.approx(1.0 + math.sqrt(6.0), rel=1e-8)

    def test_scalar_stable_closed_form(self):
        k = lqr_gain(np.array([[-1.0]]), np.array([[1.0]]),
                     np.array([[5.0]]), np.array([[1.0]]))
        assert k[0, 0] == pytest.approx(-1.0 + math.sqrt(6.0), rel=1e-8)

    def test_uncontrollable_unstable_rejected(self):
        with pytest.raises((NotStabilizable, linalg.LinalgError)):
            lqr_gain(np.diag([1.0, 2.0]), np.zeros((2, 1)), np.eye(2), np.eye(1))

    def test_random_pairs_stabilized(self):
        rng = np.random.default_rng(19)
        count = 0
        while count < 25:
            a = rng.uniform(-2, 2, (2, 2))
            b = rng.integers(0, 2, (2, 1)).astype(float)
            if not b.any():
                continue
            try:
                k = lqr_gain(a, b, 5 * np.eye(2), np.eye(1))
            except (NotStabilizable, linalg.LinalgError):
                continue
            assert linalg.spectral_abscissa(a - b @ k) < 0
            # CARE residual check through the certificate identity.
            p = linalg.lyap_solve(a - b @ k, 5 * np.eye(2) + k.T @ k)
            res = a.T @ p + p @ a - p @ b @ b.T @ p + 5 * np.eye(2)
            assert np.linalg.norm(res) <= 1e-7
            count += 1
