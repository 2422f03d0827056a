import math

import numpy as np
import pytest

from koopmanpf.dynsys import (
    NonFinite,
    SingularPoint,
    UnknownIndex,
    VectorField,
    analytic_pf,
    ep_system,
    evaluate_eigenfunction,
    jacobian_fd,
    lc_system,
    linear_bundle,
    prolong,
    rk4_integrate,
)

SQRT2 = math.sqrt(2.0)
C_EP = (1.0 + 2.0 * SQRT2) / 7.0


class TestRk4Integrate:
    def test_sample_count_and_initial_state(self):
        field = VectorField(n=1, rhs=lambda x: -x)
        traj = rk4_integrate(field, [1.0], h=0.1, steps=10)
        assert len(traj) == 11
        assert traj.samples[0, 0] == 1.0

    def test_linear_accuracy(self):
        scipy_linalg = pytest.importorskip("scipy.linalg")
        a = np.array([[0.0, 1.0], [-2.0, -0.5]])
        field = VectorField(n=2, rhs=lambda x: a @ x)
        traj = rk4_integrate(field, [1.0, -1.0], h=0.1, steps=20, substeps=20)
        expected = scipy_linalg.expm(a * 2.0) @ np.array([1.0, -1.0])
        np.testing.assert_allclose(traj.samples[-1], expected, atol=1e-10)

    def test_divergence_detected(self):
        field = VectorField(n=1, rhs=lambda x: x**3)
        with pytest.raises(NonFinite):
            rk4_integrate(field, [3.0], h=0.5, steps=50)

    def test_rejects_bad_parameters(self):
        field = VectorField(n=1, rhs=lambda x: -x)
        with pytest.raises(ValueError):
            rk4_integrate(field, [1.0], h=0.0, steps=1)
        with pytest.raises(ValueError):
            rk4_integrate(field, [1.0], h=0.1, steps=1, substeps=0)
        with pytest.raises(NonFinite):
            rk4_integrate(field, [np.nan], h=0.1, steps=1)


class TestJacobian:
    @pytest.mark.parametrize("bundle_factory", [ep_system, lc_system])
    def test_finite_difference_matches_analytic(self, bundle_factory):
        bundle = bundle_factory()
        rng = np.random.default_rng(2)
        for _ in range(10):
            x = rng.uniform(-2.0, 2.0, size=2)
            fd = jacobian_fd(bundle.field, x)
            np.testing.assert_allclose(fd, bundle.field.jac(x), atol=1e-7)

    def test_fd_used_when_jacobian_absent(self):
        field = VectorField(n=2, rhs=lambda x: np.array([x[1], -np.sin(x[0])]))
        x = np.array([0.3, -0.2])
        expected = np.array([[0.0, 1.0], [-np.cos(0.3), 0.0]])
        np.testing.assert_allclose(field.jac(x), expected, atol=1e-8)


class TestProlong:
    def test_dimension_doubles(self):
        assert prolong(ep_system().field).n == 4

    def test_variation_tracks_trajectory_difference(self):
        bundle = lc_system()
        x0 = np.array([1.2, 0.4])
        eps = 1e-7
        pro = prolong(bundle.field)
        traj = rk4_integrate(
            pro, np.concatenate([x0, [eps, 0.0]]), h=0.1, steps=20, substeps=10
        )
        base = rk4_integrate(bundle.field, x0, h=0.1, steps=20, substeps=10)
        bumped = rk4_integrate(
            bundle.field, x0 + [eps, 0.0], h=0.1, steps=20, substeps=10
        )
        np.testing.assert_allclose(
            traj.samples[:, 2:], bumped.samples - base.samples, atol=1e-11
        )

    def test_fast_path_matches_generic(self):
        for bundle in (ep_system(), lc_system()):
            x0 = np.array([0.9, -0.7])
            xi0 = np.array([0.0, 1e-6])
            fast = bundle.field.fast_prolonged(x0, xi0, 0.1, 12, 10)
            generic = rk4_integrate(
                prolong(bundle.field),
                np.concatenate([x0, xi0]),
                h=0.1,
                steps=11,
                substeps=10,
            )
            np.testing.assert_allclose(fast, generic.samples, atol=1e-12)


class TestEpBundle:
    def test_eigenvalues(self):
        bundle = ep_system()
        values = {t.index: t.eigenvalue for t in bundle.triples}
        assert values[(1, 0)] == -1.0
        assert values[(0, 1)] == pytest.approx(-SQRT2)
        assert values[(0, 2)] == pytest.approx(-2.0 * SQRT2)

    def test_mode_decomposition_reconstructs_state(self):
        bundle = ep_system()
        rng = np.random.default_rng(4)
        for _ in range(10):
            x = rng.uniform(-3.0, 3.0, size=2)
            total = sum(t.phi(x) * t.mode for t in bundle.triples)
            np.testing.assert_allclose(total.real, x, atol=1e-12)
            np.testing.assert_allclose(total.imag, 0.0, atol=1e-12)

    def test_gradients_match_finite_differences(self):
        bundle = ep_system()
        x = np.array([0.7, -1.3])
        eps = 1e-6
        for t in bundle.triples:
            for k in range(2):
                step = np.zeros(2)
                step[k] = eps
                fd = (t.phi(x + step) - t.phi(x - step)) / (2 * eps)
                assert abs(fd - t.grad(x)[k]) < 1e-8

    def test_equivariance_along_flow(self):
        bundle = ep_system()
        x0 = np.array([1.5, -0.8])
        traj = rk4_integrate(bundle.field, x0, h=0.05, steps=40, substeps=20)
        for t in bundle.triples:
            for step in (10, 40):
                lhs = t.phi(traj.samples[step])
                rhs = np.exp(t.eigenvalue * step * 0.05) * t.phi(x0)
                assert abs(lhs - rhs) < 1e-9


class TestLcBundle:
    def test_eigenvalues(self):
        bundle = lc_system()
        values = {t.index: t.eigenvalue for t in bundle.triples}
        assert values[(1, 0)] == 1j
        assert values[(0, 1)] == -2.0
        assert values[(1, 1)] == -2.0 + 1j

    def test_eigenfunction_values_on_cycle(self):
        bundle = lc_system()
        theta = 0.9
        x = np.array([math.cos(theta), math.sin(theta)])
        assert evaluate_eigenfunction(bundle, (1, 0), x) == pytest.approx(
            complex(math.cos(theta), math.sin(theta))
        )
        # the decaying eigenfunction vanishes on the cycle itself
        assert abs(evaluate_eigenfunction(bundle, (0, 1), x)) < 1e-14
        assert abs(evaluate_eigenfunction(bundle, (1, 1), x)) < 1e-14

    def test_gradients_match_finite_differences(self):
        bundle = lc_system()
        x = np.array([1.1, 0.6])
        eps = 1e-6
        for t in bundle.triples:
            for k in range(2):
                step = np.zeros(2)
                step[k] = eps
                fd = (t.phi(x + step) - t.phi(x - step)) / (2 * eps)
                assert abs(fd - t.grad(x)[k]) < 1e-7

    def test_equivariance_along_flow(self):
        bundle = lc_system()
        x0 = np.array([1.4, -0.3])
        h = 0.05
        traj = rk4_integrate(bundle.field, x0, h=h, steps=40, substeps=40)
        for t in bundle.triples:
            lhs = t.phi(traj.samples[-1])
            rhs = np.exp(t.eigenvalue * 40 * h) * t.phi(x0)
            assert abs(lhs - rhs) < 1e-9

    def test_origin_is_singular(self):
        bundle = lc_system()
        with pytest.raises(SingularPoint):
            evaluate_eigenfunction(bundle, (1, 0), [0.0, 0.0])

    def test_warning_inside_convergence_radius(self):
        bundle = lc_system()
        with pytest.warns(RuntimeWarning):
            evaluate_eigenfunction(bundle, (1, 0), [0.3, 0.0])


class TestAnalyticPf:
    def test_ep_values(self):
        bundle = ep_system()
        x = np.array([2.0, 1.5])
        # plain participation factors
        assert analytic_pf(bundle, "pf", (1, 0), 0, x) == 1.0
        assert analytic_pf(bundle, "pf", (0, 1), 1, x) == 1.0
        # mode-in-state generalized participations, perturbing state 2
        assert analytic_pf(
            bundle, "gp_mode_in_state", (1, 0), 0, x, aux_index=1
        ) == pytest.approx(2.0 * C_EP * x[1])
        assert analytic_pf(
            bundle, "gp_mode_in_state", (0, 2), 0, x, aux_index=1
        ) == pytest.approx(-2.0 * C_EP * x[1])
        # state-in-mode generalized participations
        assert analytic_pf(
            bundle, "gp_state_in_mode", (1, 0), 0, x, aux_index=(0, 2)
        ) == pytest.approx(-C_EP)
        assert analytic_pf(
            bundle, "gp_state_in_mode", (0, 2), 1, x, aux_index=(0, 1)
        ) == pytest.approx(2.0 * x[1])

    def test_lc_pf_closed_form(self):
        bundle = lc_system()
        r, theta = 1.5, 1.0
        x = np.array([r * math.cos(theta), r * math.sin(theta)])
        expected = -1j * math.sin(theta) / (2.0 * r) * np.exp(1j * theta)
        got = analytic_pf(bundle, "pf", (1, 0), 0, x)
        assert abs(got - expected) < 1e-12

    def test_rejects_bad_arguments(self):
        bundle = ep_system()
        with pytest.raises(ValueError):
            analytic_pf(bundle, "nope", (1, 0), 0, [1.0, 1.0])
        with pytest.raises(ValueError):
            analytic_pf(bundle, "gp_mode_in_state", (1, 0), 0, [1.0, 1.0])
        with pytest.raises(UnknownIndex):
            analytic_pf(bundle, "pf", (9, 9), 0, [1.0, 1.0])

    def test_unknown_index(self):
        with pytest.raises(UnknownIndex):
            ep_system().triple((3, 3))


class TestLinearBundle:
    def test_reduces_to_classical_pf(self):
        from koopmanpf.lti import biorthogonal_eig, mode_in_state_pf

        a = np.array([[0.0, 1.0], [-2.0, -3.0]])
        bundle = linear_bundle(a)
        pf = mode_in_state_pf(biorthogonal_eig(a))
        rng = np.random.default_rng(8)
        x = rng.normal(size=2)
        for j, triple in enumerate(bundle.triples):
            for k in range(2):
                got = analytic_pf(bundle, "pf", triple.index, k, x)
                assert abs(got - pf[j, k]) < 1e-12

    def test_eigenfunctions_linear_in_state(self):
        bundle = linear_bundle(np.diag([-1.0, -2.0]))
        x = np.array([3.0, -4.0])
        assert evaluate_eigenfunction(bundle, (1, 0), x) == pytest.approx(3.0)
        assert evaluate_eigenfunction(bundle, (0, 1), x) == pytest.approx(-4.0)
