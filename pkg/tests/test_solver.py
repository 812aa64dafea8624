"""
Tests for assembly, rhs projection and the linear solve
"""

from types import SimpleNamespace

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import roots_jacobi

from app.core.exceptions import ExponentRangeError, ParameterDomainError, SingularSystemError
from app.schemas.solution import Method, SolutionRecord
from app.services.operator import OperatorParams, eigenvalue, eigenvalues, stability_bound
from app.services.rhs import resolve_rhs
from app.services.solver import (
    DENSE,
    STIFFNESS_DIAGONAL,
    AssembledSystem,
    SpectralSolution,
    assemble,
    assemble_galerkin,
    assemble_petrov_galerkin,
    default_quad_points,
    dual_weight,
    evaluate,
    project_rhs,
    solve,
    solve_system,
    system_residual,
)
from app.services.special import jacobi_eval, jacobi_norms, jacobi_table


def _reference_rule(gamma, beta, points=200):
    return roots_jacobi(points, gamma, beta)


class TestAssembly:
    def test_symmetric_case_is_diagonal(self, symmetric_params):
        for method in Method:
            sys = assemble(12, symmetric_params, method)
            assert sys.structure == STIFFNESS_DIAGONAL
            assert sys.stiffness.shape == (13,)

    def test_schemes_coincide_for_symmetric_operator(self, symmetric_params):
        galerkin = assemble_galerkin(16, symmetric_params)
        petrov = assemble_petrov_galerkin(16, symmetric_params)
        np.testing.assert_allclose(galerkin.stiffness, petrov.stiffness, rtol=1e-13)
        np.testing.assert_allclose(galerkin.mass, petrov.mass, rtol=1e-12, atol=1e-14)

    def test_galerkin_stiffness_upper_triangular(self, skewed_params):
        sys = assemble_galerkin(10, skewed_params)
        assert sys.structure == DENSE
        np.testing.assert_array_equal(np.tril(sys.stiffness, -1), 0.0)
        assert np.all(np.diag(sys.stiffness) > 0.0)

    def test_galerkin_rows_carry_test_mode_eigenvalue(self, skewed_params):
        p = skewed_params
        N = 6
        sys = assemble_galerkin(N, p)
        x, w = _reference_rule(p.sigma, p.sigma_star)
        inner = np.triu((jacobi_table(N, p.trial_weight, x) * w) @ jacobi_table(N, p.image_weight, x).T)
        lam = eigenvalues(N, p)
        np.testing.assert_allclose(sys.stiffness[0], lam[0] * inner[0], atol=1e-11 * np.abs(inner[0]).max())
        np.testing.assert_allclose(sys.stiffness[:, N], lam * inner[:, N], atol=1e-11 * lam[N] * np.abs(inner).max())
        assert not np.allclose(sys.stiffness[0, 1:], inner[0, 1:] * lam[1:])

    def test_galerkin_matrices_against_fine_rule(self, skewed_params):
        p = skewed_params
        N = 8
        sys = assemble_galerkin(N, p)

        x, w = _reference_rule(p.sigma, p.sigma_star)
        test = jacobi_table(N, p.trial_weight, x)
        images = jacobi_table(N, p.image_weight, x)
        stiffness = eigenvalues(N, p)[:, np.newaxis] * ((test * w) @ images.T)
        np.testing.assert_allclose(sys.stiffness, np.triu(stiffness), atol=1e-11 * np.abs(stiffness).max())

        x, w = _reference_rule(2.0 * p.sigma, 2.0 * p.sigma_star)
        basis = jacobi_table(N, p.trial_weight, x)
        mass = (basis * w) @ basis.T
        np.testing.assert_allclose(sys.mass, mass, atol=1e-11 * np.abs(mass).max())
        np.testing.assert_allclose(sys.mass, sys.mass.T, atol=1e-13)
        assert np.all(np.diag(sys.mass) > 0.0)

    def test_petrov_galerkin_against_fine_rule(self, skewed_params):
        p = skewed_params
        N = 8
        sys = assemble_petrov_galerkin(N, p)
        np.testing.assert_allclose(sys.stiffness, eigenvalues(N, p) * jacobi_norms(N, p.image_weight))

        x, w = _reference_rule(p.alpha, p.alpha)
        mass = (jacobi_table(N, p.image_weight, x) * w) @ jacobi_table(N, p.trial_weight, x).T
        np.testing.assert_allclose(sys.mass, mass, atol=1e-11 * np.abs(mass).max())

    def test_degree_zero(self, skewed_params):
        for method in Method:
            sys = assemble(0, skewed_params, method)
            assert sys.size == 1

    def test_negative_degree(self, skewed_params):
        with pytest.raises(ParameterDomainError):
            assemble_galerkin(-1, skewed_params)

    def test_dual_weight(self, skewed_params):
        assert dual_weight(skewed_params, Method.GALERKIN) == skewed_params.trial_weight
        assert dual_weight(skewed_params, Method.PETROV_GALERKIN) == skewed_params.image_weight


class TestProjection:
    def test_default_points(self):
        assert default_quad_points(8) == 128
        assert default_quad_points(512) == 1024

    def test_zero_rhs(self, skewed_params):
        zero = SimpleNamespace(
            name="zero", smooth_part=np.zeros_like, left_exponent=0.0, right_exponent=0.0, interior_kinks=()
        )
        np.testing.assert_array_equal(project_rhs(zero, 6, skewed_params, Method.GALERKIN), np.zeros(7))

    def test_eigen_rhs_projects_onto_single_mode(self, skewed_params):
        m = 3
        f = resolve_rhs(f"eigen:{m}", skewed_params)
        projected = project_rhs(f, 8, skewed_params, Method.PETROV_GALERKIN)
        expected = np.zeros(9)
        expected[m] = eigenvalue(m, skewed_params) * jacobi_norms(m, skewed_params.image_weight)[m]
        np.testing.assert_allclose(projected, expected, atol=1e-12 * expected[m])

    @pytest.mark.parametrize("method", list(Method))
    def test_odd_rhs_has_zero_mean_mode(self, symmetric_params, method):
        projected = project_rhs(resolve_rhs("sin"), 8, symmetric_params, method)
        assert abs(projected[0]) < 1e-14
        assert abs(projected[1]) > 0.1

    def test_boundary_powers_are_folded_in(self, symmetric_params):
        f = resolve_rhs("jacobi-weighted:0.5")
        projected = project_rhs(f, 6, symmetric_params, Method.PETROV_GALERKIN)
        w = dual_weight(symmetric_params, Method.PETROV_GALERKIN)
        x, wq = _reference_rule(w.gamma + 0.5, w.beta + 0.5)
        expected = jacobi_table(6, w, x) @ (np.sin(x) * wq)
        np.testing.assert_allclose(projected, expected, atol=1e-13)

    def test_kinked_rhs(self, skewed_params):
        projected = project_rhs(resolve_rhs("abs-sin"), 4, skewed_params, Method.GALERKIN, quad_points=40)
        w = skewed_params.trial_weight
        expected = []
        for k in range(5):
            def smooth(x, k=k):
                return np.abs(np.sin(x)) * jacobi_eval(k, w, x)

            left = quad(lambda x: (1.0 - x) ** w.gamma * smooth(x), -1.0, 0.0, weight="alg", wvar=(w.beta, 0.0))[0]
            right = quad(lambda x: (1.0 + x) ** w.beta * smooth(x), 0.0, 1.0, weight="alg", wvar=(0.0, w.gamma))[0]
            expected.append(left + right)
        np.testing.assert_allclose(projected, expected, atol=1e-12)

    def test_non_integrable_rhs(self, skewed_params):
        singular = SimpleNamespace(
            name="singular", smooth_part=np.ones_like, left_exponent=-1.9, right_exponent=0.0, interior_kinks=()
        )
        with pytest.raises(ExponentRangeError):
            project_rhs(singular, 4, skewed_params, Method.GALERKIN)

    def test_too_few_points(self, skewed_params):
        with pytest.raises(ParameterDomainError):
            project_rhs(resolve_rhs("sin"), 16, skewed_params, Method.GALERKIN, quad_points=8)


class TestLinearSolve:
    def test_random_dense_system(self):
        rng = np.random.default_rng(7)
        stiffness = np.triu(rng.normal(size=(10, 10))) + 10.0 * np.eye(10)
        mass = rng.normal(size=(10, 10))
        rhs = rng.normal(size=10)
        sys = AssembledSystem(stiffness=stiffness, mass=mass, structure=DENSE, mu=0.5, rhs=rhs)
        coefficients = solve_system(sys)
        assert system_residual(sys, coefficients) < 1e-12

    def test_diagonal_without_reaction(self):
        sys = AssembledSystem(
            stiffness=np.array([2.0, 4.0]), mass=np.eye(2), structure=STIFFNESS_DIAGONAL, mu=0.0,
            rhs=np.array([1.0, 1.0]),
        )
        np.testing.assert_array_equal(solve_system(sys), [0.5, 0.25])

    def test_singular_system(self):
        sys = AssembledSystem(
            stiffness=np.array([1.0, 2.0]), mass=np.eye(2), structure=STIFFNESS_DIAGONAL, mu=-1.0,
            rhs=np.array([1.0, 1.0]),
        )
        with pytest.raises(SingularSystemError):
            solve_system(sys)

    def test_missing_rhs(self, skewed_params):
        with pytest.raises(ParameterDomainError):
            solve_system(assemble_galerkin(3, skewed_params))


class TestSolve:
    @pytest.mark.parametrize("method, theta", [(Method.PETROV_GALERKIN, 0.7), (Method.GALERKIN, 0.5)])
    def test_manufactured_solution(self, method, theta):
        p = OperatorParams.from_alpha_theta(1.4, theta, 0.0)
        sol = solve(8, p, resolve_rhs("eigen:3", p), method)
        expected = np.zeros(9)
        expected[3] = 1.0
        np.testing.assert_allclose(sol.coefficients, expected, atol=1e-10)

    def test_schemes_coincide_for_symmetric_operator(self, symmetric_params):
        f = resolve_rhs("sin")
        galerkin = solve(32, symmetric_params, f, Method.GALERKIN)
        petrov = solve(32, symmetric_params, f, Method.PETROV_GALERKIN)
        np.testing.assert_allclose(galerkin.coefficients, petrov.coefficients, atol=1e-10)

    def test_degree_zero(self, skewed_params):
        sol = solve(0, skewed_params, resolve_rhs("sin"))
        assert sol.coefficients.shape == (1,)

    def test_residual_small(self, skewed_params):
        sol = solve(64, skewed_params, resolve_rhs("sin"), Method.GALERKIN)
        assert sol.residual <= 1e-10
        assert sol.quad_points == 128

    def test_stable_at_bound(self):
        p = OperatorParams.from_alpha_theta(1.4, 0.7, 0.0)
        bounded = OperatorParams.from_alpha_theta(1.4, 0.7, stability_bound(p))
        sol = solve(32, bounded, resolve_rhs("sin"))
        assert np.all(np.isfinite(sol.coefficients))

    def test_coefficients_read_only(self, skewed_params):
        sol = solve(4, skewed_params, resolve_rhs("sin"))
        with pytest.raises(ValueError):
            sol.coefficients[0] = 1.0

    def test_evaluate_vanishes_at_boundary(self, skewed_params):
        sol = solve(16, skewed_params, resolve_rhs("sin"))
        assert evaluate(sol, -1.0) == 0.0
        assert evaluate(sol, 1.0) == 0.0
        values = evaluate(sol, np.linspace(-0.9, 0.9, 7))
        assert values.shape == (7,)

    def test_evaluate_single_mode(self, skewed_params):
        sol = SpectralSolution(params=skewed_params, N=2, coefficients=np.array([0.0, 0.0, 1.0]),
                               method=Method.GALERKIN)
        x = np.array([-0.5, 0.0, 0.5])
        w = skewed_params.trial_weight
        np.testing.assert_allclose(evaluate(sol, x), w.weight(x) * jacobi_table(2, w, x)[2])


class TestSolutionRecord:
    def test_round_trip(self, skewed_params):
        sol = solve(16, skewed_params, resolve_rhs("sin"), Method.GALERKIN)
        record = SolutionRecord.model_validate_json(sol.to_record().model_dump_json())
        restored = SpectralSolution.from_record(record)
        assert restored.params == sol.params
        assert restored.method == Method.GALERKIN
        np.testing.assert_array_equal(restored.coefficients, sol.coefficients)

    def test_length_mismatch(self, skewed_params):
        record = SolutionRecord(
            method=Method.PETROV_GALERKIN,
            alpha=skewed_params.alpha,
            theta=skewed_params.theta,
            mu=1.0,
            sigma=skewed_params.sigma,
            sigma_star=skewed_params.sigma_star,
            N=3,
            coefficients=[0.0, 1.0],
        )
        with pytest.raises(ParameterDomainError):
            SpectralSolution.from_record(record)
