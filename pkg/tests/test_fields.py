import numpy as np
import pytest

from affine_flow import fields
from affine_flow.dynamics import PhaseState, comp_rhs, incomp_lambda
from affine_flow.errors import DomainError, NotOnBoundary, OutsideDomain
from affine_flow.mat3 import basis, outer
from affine_flow.swirl import SwirlState, embed


def _boundary_points(A, n, rng):
    y = rng.normal(size=(n, 3))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    return y @ np.asarray(A).T


class TestIsentropic:
    def test_gamma_two(self):
        p = fields.isentropic_profile(2.0)
        s = np.linspace(0, 1, 11)
        np.testing.assert_allclose(p.rho0(s), (1 - s**2) / 4, atol=1e-16)
        np.testing.assert_allclose(p.eps0(s), (1 - s**2) / 4, atol=1e-16)
        assert p.delta == 1.0
        assert p.eps0_prime_at_boundary == pytest.approx(-0.5)

    @pytest.mark.parametrize("g", [1.2, 1.4, 5 / 3, 2.0, 3.0])
    def test_endpoints_and_pressure_law(self, g):
        p = fields.isentropic_profile(g)
        assert p.rho0(1.0) == 0.0
        assert p.eps0(0.0) == pytest.approx(1 / (2 * g))
        s = np.linspace(0, 1, 1000)
        np.testing.assert_allclose(p.p0_prime(s) + s * p.rho0(s), 0, atol=1e-15)
        # finite-difference check of p0' against p0
        h = 1e-6
        mid = s[1:-1]
        fd = (p.p0(mid + h) - p.p0(mid - h)) / (2 * h)
        np.testing.assert_allclose(fd, p.p0_prime(mid), atol=1e-8)

    def test_rejects_gamma(self):
        with pytest.raises(DomainError):
            fields.isentropic_profile(1.0)


class TestQuadrature:
    def test_isentropic_cross_check(self):
        g = 2.0
        closed = fields.isentropic_profile(g)
        eps = fields.eps0_from_rho0(closed.rho0, closed.delta, g)
        assert eps(0.5) == pytest.approx(0.1875, abs=1e-12)

    def test_parabolic_density(self):
        eps = fields.eps0_from_rho0(lambda s: 1 - s * s, 1.0, 2.0)
        s = np.linspace(0, 1, 101)
        np.testing.assert_allclose(eps(s), (1 - s**2) / 4, atol=1e-9)
        assert eps(1.0) == 0.0

    def test_boundary_slope(self):
        for name, (rho0, delta) in fields.BUILTIN_DENSITIES.items():
            g = 1.7
            eps = fields.eps0_from_rho0(rho0, delta, g)
            h = 1e-4
            slope = (eps(1.0) - eps(1.0 - h)) / h
            assert slope == pytest.approx(-1 / ((g - 1) * (1 + delta)), rel=2e-3), name

    def test_rejects_bad_delta(self):
        with pytest.raises(DomainError):
            fields.eps0_from_rho0(lambda s: 1 - s * s, 0.0, 2.0)


class TestDensityClass:
    def test_accepts_builtins(self):
        for rho0, delta in fields.BUILTIN_DENSITIES.values():
            fields.check_density_class(rho0, delta)

    def test_rejects(self):
        with pytest.raises(DomainError, match="vanish"):
            fields.check_density_class(lambda s: 2 - s, 1.0)
        with pytest.raises(DomainError, match="slope"):
            fields.check_density_class(lambda s: 1 - s, 1.0)
        with pytest.raises(DomainError):
            fields.check_density_class(lambda s: 1 - s * s, 2.0)
        with pytest.raises(DomainError, match="positive"):
            fields.check_density_class(lambda s: (1 - s * s) * (s - 0.5), 1.0)


class TestTabulatedProfiles:
    @pytest.mark.parametrize("name", sorted(fields.BUILTIN_DENSITIES))
    def test_pressure_identity(self, name):
        p = fields.builtin_profile(name, 1.8)
        s = np.linspace(0, 1, 1000)
        resid = p.p0_prime(s) + s * p.rho0(s)
        assert np.max(np.abs(resid)) < 1e-8

    def test_profile_config(self):
        assert fields.profile_from_config({"isentropic": {"gamma": 2}}).closed_form
        assert fields.profile_from_config({"name": "quartic", "gamma": 2}).delta == 2.0
        with pytest.raises(DomainError):
            fields.profile_from_config({"name": "nope", "gamma": 2})
        with pytest.raises(DomainError):
            fields.profile_from_config([1, 2])


class TestCompressibleSamples:
    def test_center_sample(self):
        s = PhaseState.compressible(np.eye(3), np.zeros((3, 3)), 2.0)
        f = fields.sample_compressible(s, fields.isentropic_profile(2.0), np.zeros(3))
        np.testing.assert_array_equal(f.u, 0)
        assert (f.rho, f.eps, f.p) == pytest.approx((0.25, 0.25, 1 / 16))

    def test_scalar_matrices(self):
        prof = fields.isentropic_profile(2.0)
        s = PhaseState.compressible(2 * np.eye(3), np.eye(3), 2.0)
        f = fields.sample_compressible(s, prof, [1.0, 0, 0])
        np.testing.assert_allclose(f.u, [0.5, 0, 0])
        assert f.rho == pytest.approx(prof.rho0(0.5) / 8)
        assert f.p == pytest.approx((2.0 - 1) * f.rho * f.eps)

    def test_boundary_vanishing(self):
        rng = np.random.default_rng(0)
        A = np.array([[1.5, 0.2, 0.0], [0.0, 0.8, 0.3], [0.1, 0.0, 1.1]])
        s = PhaseState.compressible(A, rng.normal(size=(3, 3)), 1.6)
        for name in ("isentropic", "parabolic"):
            prof = fields.builtin_profile(name, 1.6)
            for x in _boundary_points(A, 100, rng):
                f = fields.sample_compressible(s, prof, x)
                assert max(f.rho, f.eps, f.p) < 1e-12

    def test_outside(self):
        s = PhaseState.compressible(np.eye(3), np.zeros((3, 3)), 2.0)
        with pytest.raises(OutsideDomain):
            fields.sample_compressible(s, fields.isentropic_profile(2.0), [1.1, 0, 0])

    def test_gamma_mismatch(self):
        s = PhaseState.compressible(np.eye(3), np.zeros((3, 3)), 2.0)
        with pytest.raises(DomainError):
            fields.sample_compressible(s, fields.isentropic_profile(1.5), [0, 0, 0])

    def test_normal_derivative_of_eps(self):
        A = np.diag([2.0, 1.0, 0.5])
        g = 1.5
        s = PhaseState.compressible(A, np.zeros((3, 3)), g)
        prof = fields.isentropic_profile(g)
        x = np.array([0.0, 1.0, 0.0])
        n = np.array([0.0, 1.0, 0.0])
        exact = fields.boundary_normal_eps_derivative(s, prof, x)
        assert exact < 0
        hs = np.array([1e-3, 5e-4, 2.5e-4])
        vals = [fields.sample_compressible(s, prof, x - h * n).eps for h in hs]
        slopes = -np.array(vals) / hs  # outward derivative estimate
        assert np.all(np.diff(vals) < 0)
        assert slopes[-1] == pytest.approx(exact, rel=1e-3)
        with pytest.raises(NotOnBoundary):
            fields.boundary_normal_eps_derivative(s, prof, 0.5 * x)


class TestIncompressiblePressure:
    def test_examples(self):
        s = PhaseState.incompressible_state(np.eye(3), np.diag([1.0, 1, -2]))
        assert fields.sample_incompressible_pressure(s, [0, 0, 0]) == pytest.approx(1.0)
        assert fields.sample_incompressible_pressure(s, [0, 1, 0]) == 0.0
        assert fields.boundary_normal_pressure_derivative(s, [1, 0, 0]) == pytest.approx(-2.0)

    def test_shear_pressure_vanishes(self):
        M = outer(basis(2), basis(1))
        s = PhaseState.incompressible_state(np.eye(3) + 2 * M, M)
        rng = np.random.default_rng(1)
        for x in rng.uniform(-0.3, 0.3, (20, 3)):
            assert fields.sample_incompressible_pressure(s, x) == 0.0
        assert fields.boundary_normal_pressure_derivative(s, s.A @ basis(1)) == 0.0

    def test_negative_curvature_breaks_vacuum_condition(self):
        s = embed(SwirlState(1.0, 1.0, 0.0, 2.0))
        assert incomp_lambda(s.A, s.Adot) < 0
        assert fields.boundary_normal_pressure_derivative(s, s.A @ basis(3)) > 0

    def test_normal_derivative_matches_gradient(self):
        rng = np.random.default_rng(2)
        from oracles import random_incompressible_data

        a, v = random_incompressible_data(rng)
        s = PhaseState.incompressible_state(a, v)
        y = rng.normal(size=3)
        y /= np.linalg.norm(y)
        x = a @ y
        ainv = np.linalg.inv(a)
        normal = ainv.T @ y
        normal /= np.linalg.norm(normal)
        h = 1e-6
        fd = (
            fields.sample_incompressible_pressure(s, x - h * normal)
            - fields.sample_incompressible_pressure(s, x - 2 * h * normal)
        ) / h
        assert fields.boundary_normal_pressure_derivative(s, x) == pytest.approx(fd, rel=1e-4)

    def test_not_on_boundary(self):
        s = PhaseState.incompressible_state(np.eye(3), np.diag([1.0, 1, -2]))
        with pytest.raises(NotOnBoundary):
            fields.boundary_normal_pressure_derivative(s, [0.5, 0, 0])


class TestPdeResidual:
    def _state(self):
        A = np.array([[1.3, 0.2, 0.0], [0.0, 0.9, 0.1], [0.05, 0.0, 1.1]])
        return PhaseState.compressible(A, 0.2 * np.eye(3), 1.8)

    def test_exact_acceleration(self):
        s = self._state()
        rng = np.random.default_rng(3)
        for prof in (fields.isentropic_profile(1.8), fields.builtin_profile("parabolic", 1.8)):
            for y in rng.uniform(-0.55, 0.55, (20, 3)):
                x = s.A @ y
                r = fields.pde_residual(s, comp_rhs(s.A, 1.8), prof, x)
                rho = fields.sample_compressible(s, prof, x).rho
                tol = 1e-13 if prof.closed_form else 1e-8
                assert np.linalg.norm(r) <= tol * (1 + rho * np.linalg.norm(x))

    def test_perturbed_acceleration(self):
        s = self._state()
        prof = fields.isentropic_profile(1.8)
        x = s.A @ np.array([0.2, -0.1, 0.3])
        r = fields.pde_residual(s, comp_rhs(s.A, 1.8) + 0.1 * np.eye(3), prof, x)
        rho = fields.sample_compressible(s, prof, x).rho
        y = np.linalg.solve(s.A, x)
        assert np.linalg.norm(r) == pytest.approx(0.1 * rho * np.linalg.norm(y), rel=1e-10)

    def test_boundary_and_center(self):
        s = self._state()
        prof = fields.isentropic_profile(1.8)
        x = s.A @ np.array([0.0, 0.6, 0.8])
        np.testing.assert_array_equal(fields.pde_residual(s, np.eye(3), prof, x), 0)
        np.testing.assert_allclose(fields.pde_residual(s, comp_rhs(s.A, 1.8), prof, np.zeros(3)), 0, atol=1e-16)
