"""
Self-checks behind the `verify` command
"""

import time
from typing import Callable, List, Optional, Tuple

import numpy as np
import structlog
from scipy.special import roots_jacobi

from app.schemas.solution import Method
from app.schemas.verification import CheckResult, VerificationSummary
from app.services import convergence, operator, quadrature, solver, special
from app.services.operator import OperatorParams
from app.services.rhs import resolve_rhs
from app.services.special import WeightExponents

logger = structlog.get_logger(__name__)

# (alpha, theta) -> (sigma, sigma*) to four decimals
EXPONENT_TABLE = {
    (1.2, 0.5): (0.6, 0.6),
    (1.4, 0.5): (0.7, 0.7),
    (1.6, 0.5): (0.8, 0.8),
    (1.8, 0.5): (0.9, 0.9),
    (1.2, 0.7): (0.8829, 0.3171),
    (1.4, 0.7): (0.8602, 0.5398),
    (1.6, 0.7): (0.8900, 0.7100),
    (1.8, 0.7): (0.9411, 0.8589),
    (1.2, 1.0): (1.0, 0.2),
    (1.4, 1.0): (1.0, 0.4),
    (1.6, 1.0): (1.0, 0.6),
    (1.8, 1.0): (1.0, 0.8),
}

SAMPLE_EXPONENTS = [
    WeightExponents(0.0, 0.0),
    WeightExponents(0.8, 0.8),
    WeightExponents(0.8602, 0.5398),
    WeightExponents(0.3, -0.5),
]

ORACLE_ALPHAS = [1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9]
ORACLE_POINTS = np.linspace(-0.98, 0.98, 50)

Check = Tuple[str, str, Callable[[], CheckResult]]


def _result(name: str, group: str, measured: float, tolerance: float, detail: str = "") -> CheckResult:
    return CheckResult(
        name=name,
        group=group,
        passed=bool(measured < tolerance),
        measured=float(measured),
        tolerance=tolerance,
        detail=detail,
    )


class VerificationSuite:
    """Grouped numerical checks; eigenvalue_scale perturbs lambda inside the operator checks"""

    def __init__(self, eigenvalue_scale: float = 1.0, seed: int = 20240613):
        self.eigenvalue_scale = eigenvalue_scale
        self.rng = np.random.default_rng(seed)

    def checks(self) -> List[Check]:
        return [
            ("special", "jacobi_orthogonality", self.check_orthogonality),
            ("special", "jacobi_symmetry", self.check_symmetry),
            ("special", "jacobi_derivative", self.check_derivative),
            ("special", "connection_identity", self.check_connection),
            ("special", "derivative_relation", self.check_derivative_relation),
            ("special", "xkn_bounded", self.check_xkn),
            ("quadrature", "gauss_legendre_two_point", self.check_two_point),
            ("quadrature", "degree_of_exactness", self.check_exactness),
            ("quadrature", "node_symmetry", self.check_node_symmetry),
            ("quadrature", "interlacing", self.check_interlacing),
            ("operator", "exponent_table", self.check_exponent_table),
            ("operator", "exponent_residual_grid", self.check_sigma_grid),
            ("operator", "pseudo_eigen_left", lambda: self.check_pseudo_eigen(1.0)),
            ("operator", "pseudo_eigen_right", lambda: self.check_pseudo_eigen(0.0)),
            ("operator", "kernel_functions", self.check_kernel),
            ("solver", "galerkin_pg_coincidence", self.check_coincidence),
            ("solver", "manufactured_solution", self.check_manufactured),
            ("convergence", "e2_independent_path", self.check_e2_paths),
            ("convergence", "e2_below_e1", self.check_e2_below_e1),
        ]

    def run(self, only: Optional[str] = None) -> VerificationSummary:
        results = []
        for group, name, check in self.checks():
            if only and only != group and only not in name:
                continue
            start_time = time.time()
            try:
                result = check()
            except Exception as e:
                logger.error("check_crashed", check=name, error=str(e))
                result = CheckResult(name=name, group=group, passed=False, detail=f"{type(e).__name__}: {e}")
            logger.info(
                "check_finished",
                check=name,
                passed=result.passed,
                execution_time=int((time.time() - start_time) * 1000),
            )
            results.append(result)

        failed = sum(not r.passed for r in results)
        return VerificationSummary(checks=results, passed=len(results) - failed, failed=failed)

    # -- special -----------------------------------------------------------

    def check_orthogonality(self) -> CheckResult:
        worst = 0.0
        for w in SAMPLE_EXPONENTS[:3]:
            rule = quadrature.gauss_jacobi(14, w)
            table = special.jacobi_table(12, w, rule.nodes)
            gram = (table * rule.weights) @ table.T
            norms = special.jacobi_norms(12, w)
            off = np.abs(gram - np.diag(np.diag(gram))).max()
            diag = np.abs(np.diag(gram) / norms - 1.0).max()
            worst = max(worst, off, diag)
        return _result("jacobi_orthogonality", "special", worst, 1e-11)

    def check_symmetry(self) -> CheckResult:
        x = self.rng.uniform(-1.0, 1.0, 40)
        worst = 0.0
        for w in SAMPLE_EXPONENTS:
            if np.any(special.jacobi_norms(50, w) != special.jacobi_norms(50, w.swapped())):
                return CheckResult(name="jacobi_symmetry", group="special", passed=False,
                                   detail=f"h_n not symmetric for {w}")
            for n in range(21):
                left = special.jacobi_eval(n, w, -x)
                right = (-1) ** n * special.jacobi_eval(n, w.swapped(), x)
                worst = max(worst, np.abs(left - right).max())
        return _result("jacobi_symmetry", "special", worst, 1e-12)

    def check_derivative(self) -> CheckResult:
        x = np.linspace(-0.9, 0.9, 19)
        step = 1e-6
        worst = 0.0
        for w in SAMPLE_EXPONENTS:
            for n in range(11):
                exact = special.jacobi_deriv(n, w, x, 1)
                fd = (special.jacobi_eval(n, w, x + step) - special.jacobi_eval(n, w, x - step)) / (2 * step)
                worst = max(worst, np.abs(exact - fd).max() / max(1.0, np.abs(exact).max()))
        return _result("jacobi_derivative", "special", worst, 1e-6)

    def check_connection(self) -> CheckResult:
        x = self.rng.uniform(-1.0, 1.0, 100)
        worst = 0.0
        for w in SAMPLE_EXPONENTS:
            up = w.shifted(1.0)
            table = special.jacobi_table(30, up, x)
            for n in range(31):
                c = special.connection_coeffs(n, w)
                rebuilt = c.c_n * table[n]
                if n >= 1:
                    rebuilt = rebuilt + c.b_n * table[n - 1]
                if n >= 2:
                    rebuilt = rebuilt + c.a_n * table[n - 2]
                worst = max(worst, np.abs(special.jacobi_eval(n, w, x) - rebuilt).max())
        return _result("connection_identity", "special", worst, 1e-11)

    def check_derivative_relation(self) -> CheckResult:
        x = self.rng.uniform(-1.0, 1.0, 100)
        worst = 0.0
        for w in SAMPLE_EXPONENTS:
            for n in range(31):
                a_hat, b_hat, c_hat = special.derivative_relation_coeffs(n, w)
                rebuilt = b_hat * special.jacobi_deriv(n, w, x) + c_hat * special.jacobi_deriv(n + 1, w, x)
                if n >= 1:
                    rebuilt = rebuilt + a_hat * special.jacobi_deriv(n - 1, w, x)
                worst = max(worst, np.abs(special.jacobi_eval(n, w, x) - rebuilt).max())
        return _result("derivative_relation", "special", worst, 1e-11)

    def check_xkn(self) -> CheckResult:
        worst = 0.0
        for w in SAMPLE_EXPONENTS:
            for n in (0, 1, 5, 20):
                seq = special.xkn_sequence(n, w, 2000)
                bound = max(abs(seq[0]), abs(seq[1]))
                worst = max(worst, np.abs(seq).max() / bound - 1.0)
        return _result("xkn_bounded", "special", worst, 1e-12, "max |X_k^n| relative to its first two terms")

    # -- quadrature --------------------------------------------------------

    def check_two_point(self) -> CheckResult:
        rule = quadrature.gauss_legendre(2)
        expected = np.array([-1.0, 1.0]) / np.sqrt(3.0)
        defect = max(np.abs(rule.nodes - expected).max(), np.abs(rule.weights - 1.0).max())
        return _result("gauss_legendre_two_point", "quadrature", defect, 1e-14)

    def check_exactness(self) -> CheckResult:
        worst = 0.0
        for w in SAMPLE_EXPONENTS:
            ref_x, ref_w = roots_jacobi(40, w.gamma, w.beta)
            for m in range(1, 17):
                coeffs = self.rng.uniform(-1.0, 1.0, 2 * m)
                rule = quadrature.gauss_jacobi(m, w)
                value = quadrature.integrate(rule, lambda t: np.polynomial.polynomial.polyval(t, coeffs))
                reference = float(np.dot(ref_w, np.polynomial.polynomial.polyval(ref_x, coeffs)))
                scale = np.abs(coeffs).sum() * special.jacobi_norm(0, w)
                worst = max(worst, abs(value - reference) / scale)
                worst = max(worst, abs(rule.weights.sum() / special.jacobi_norm(0, w) - 1.0))
        return _result("degree_of_exactness", "quadrature", worst, 1e-11)

    def check_node_symmetry(self) -> CheckResult:
        worst = 0.0
        for g in (0.0, 0.5, 0.8, 1.5):
            for m in (5, 16, 64):
                nodes = quadrature.gauss_jacobi(m, WeightExponents(g, g)).nodes
                worst = max(worst, np.abs(nodes + nodes[::-1]).max())
        return _result("node_symmetry", "quadrature", worst, 1e-13)

    def check_interlacing(self) -> CheckResult:
        for w in SAMPLE_EXPONENTS:
            for m in range(1, 33):
                inner = quadrature.gauss_jacobi(m, w).nodes
                outer = quadrature.gauss_jacobi(m + 1, w).nodes
                if not (np.all(outer[:-1] < inner) and np.all(inner < outer[1:])):
                    return CheckResult(name="interlacing", group="quadrature", passed=False,
                                       detail=f"{m} and {m + 1} point rules for {w}")
        return CheckResult(name="interlacing", group="quadrature", passed=True)

    # -- operator ----------------------------------------------------------

    def check_exponent_table(self) -> CheckResult:
        worst = 0.0
        for (alpha, theta), expected in EXPONENT_TABLE.items():
            sigma, sigma_star = operator.solve_sigma(alpha, theta)
            worst = max(worst, abs(round(sigma, 4) - expected[0]), abs(round(sigma_star, 4) - expected[1]))
        return _result("exponent_table", "operator", worst, 1e-12, "12 (alpha, theta) pairs to 4 decimals")

    def check_sigma_grid(self) -> CheckResult:
        worst = 0.0
        for alpha in np.linspace(1.05, 1.95, 19):
            for theta in np.linspace(0.0, 1.0, 11):
                sigma, sigma_star = operator.solve_sigma(float(alpha), float(theta))
                residual = theta * (np.sin(np.pi * sigma_star) + np.sin(np.pi * sigma)) - np.sin(np.pi * sigma_star)
                worst = max(worst, abs(residual))
        return _result("exponent_residual_grid", "operator", worst, 1e-14)

    def check_pseudo_eigen(self, theta: float) -> CheckResult:
        worst = 0.0
        for alpha in ORACLE_ALPHAS:
            p = OperatorParams.from_alpha_theta(alpha, theta, 0.0)
            for n in range(21):
                worst = max(worst, operator.pseudo_eigen_defect(n, p, ORACLE_POINTS, self.eigenvalue_scale))
        name = "pseudo_eigen_left" if theta == 1.0 else "pseudo_eigen_right"
        return _result(name, "operator", worst, 1e-9, f"theta={theta}, n <= 20, 50 interior points")

    def check_kernel(self) -> CheckResult:
        worst = 0.0
        for alpha in ORACLE_ALPHAS:
            for theta in (0.0, 1.0):
                p = OperatorParams.from_alpha_theta(alpha, theta, 0.0)
                worst = max(worst, operator.kernel_defect(p, ORACLE_POINTS))
        return _result("kernel_functions", "operator", worst, 1e-10)

    # -- solver ------------------------------------------------------------

    def check_coincidence(self) -> CheckResult:
        p = OperatorParams.from_alpha_theta(1.6, 0.5, 1.0)
        f = resolve_rhs("sin")
        galerkin = solver.solve(32, p, f, Method.GALERKIN)
        petrov = solver.solve(32, p, f, Method.PETROV_GALERKIN)
        gap = np.abs(galerkin.coefficients - petrov.coefficients).max()
        return _result("galerkin_pg_coincidence", "solver", gap, 1e-10)

    def check_manufactured(self) -> CheckResult:
        p = OperatorParams.from_alpha_theta(1.4, 0.7, 0.0)
        sol = solver.solve(8, p, resolve_rhs("eigen:3", p), Method.PETROV_GALERKIN)
        expected = np.zeros(9)
        expected[3] = 1.0
        return _result("manufactured_solution", "solver", np.abs(sol.coefficients - expected).max(), 1e-12)

    # -- convergence -------------------------------------------------------

    def check_e2_paths(self) -> CheckResult:
        p = OperatorParams.from_alpha_theta(1.4, 0.7, 1.0)
        f = resolve_rhs("sin")
        ref = solver.solve(64, p, f, Method.PETROV_GALERKIN)
        sol = solver.solve(16, p, f, Method.PETROV_GALERKIN)
        by_coefficients = convergence.error_E2(sol, ref)
        by_sampling = convergence.error_E2_direct(sol, ref)
        return _result("e2_independent_path", "convergence", abs(by_coefficients / by_sampling - 1.0), 1e-9)

    def check_e2_below_e1(self) -> CheckResult:
        worst = -np.inf
        for rhs_id in ("sin", "abs-sin"):
            for method in Method:
                p = OperatorParams.from_alpha_theta(1.6, 0.7, 1.0)
                f = resolve_rhs(rhs_id)
                ref = solver.solve(128, p, f, method)
                for N in (8, 16, 32):
                    sol = solver.solve(N, p, f, method)
                    worst = max(worst, convergence.error_E2(sol, ref) - convergence.error_E1(sol, ref))
        return CheckResult(
            name="e2_below_e1",
            group="convergence",
            passed=bool(worst <= 0.0),
            measured=float(worst),
            tolerance=0.0,
            detail="max of E2 - E1",
        )
