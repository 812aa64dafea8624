"""
Spectral Galerkin and Petrov-Galerkin schemes

Both schemes expand u_N = sum_n u_n (1-x)^sigma (1+x)^sigma* P_n^{sigma,sigma*}.
The Galerkin scheme tests against the same functions; the Petrov-Galerkin
scheme tests against (1-x)^sigma* (1+x)^sigma P_k^{sigma*,sigma}, which makes
the fractional stiffness diagonal.
"""

import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import structlog
from scipy.linalg import lu_factor, lu_solve

from app.core.config import settings
from app.core.exceptions import ExponentRangeError, ParameterDomainError, SingularSystemError
from app.schemas.solution import Method, SolutionRecord
from app.services.operator import OperatorParams, eigenvalues, stability_bound
from app.services.quadrature import gauss_jacobi, segment_rule
from app.services.rhs import RhsSpec
from app.services.special import ArrayLike, WeightExponents, jacobi_norms, jacobi_table

logger = structlog.get_logger(__name__)

DENSE = "dense"
STIFFNESS_DIAGONAL = "stiffness-diagonal"


@dataclass(frozen=True)
class AssembledSystem:
    """(S + mu M) u = f; S is a vector of diagonal entries when structure is stiffness-diagonal"""

    stiffness: np.ndarray
    mass: np.ndarray
    structure: str
    mu: float
    rhs: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.mass.shape[0])

    def stiffness_matrix(self) -> np.ndarray:
        if self.structure == STIFFNESS_DIAGONAL:
            return np.diag(self.stiffness)
        return self.stiffness

    def operator_matrix(self) -> np.ndarray:
        return self.stiffness_matrix() + self.mu * self.mass

    def with_rhs(self, rhs: np.ndarray) -> "AssembledSystem":
        return replace(self, rhs=np.asarray(rhs, dtype=float))


@dataclass(frozen=True)
class SpectralSolution:
    """Coefficients of u_N in the pseudo-eigenfunction basis"""

    params: OperatorParams
    N: int
    coefficients: np.ndarray
    method: Method
    quad_points: Optional[int] = None
    residual: float = float("nan")

    def to_record(self) -> SolutionRecord:
        return SolutionRecord(
            method=self.method,
            alpha=self.params.alpha,
            theta=self.params.theta,
            mu=self.params.mu,
            sigma=self.params.sigma,
            sigma_star=self.params.sigma_star,
            N=self.N,
            coefficients=[float(c) for c in self.coefficients],
        )

    @classmethod
    def from_record(cls, record: SolutionRecord) -> "SpectralSolution":
        if len(record.coefficients) != record.N + 1:
            raise ParameterDomainError(
                f"record holds {len(record.coefficients)} coefficients for N={record.N}"
            )
        params = OperatorParams(
            alpha=record.alpha,
            theta=record.theta,
            mu=record.mu,
            sigma=record.sigma,
            sigma_star=record.sigma_star,
        )
        coefficients = np.array(record.coefficients, dtype=float)
        coefficients.setflags(write=False)
        return cls(params=params, N=record.N, coefficients=coefficients, method=record.method)


def _check_degree(N: int) -> None:
    if N < 0:
        raise ParameterDomainError(f"N must be nonnegative, got {N}")


def assemble_galerkin(N: int, p: OperatorParams) -> AssembledSystem:
    """
    S[k, n] = lambda_k (P_n^{sigma*,sigma}, P_k^{sigma,sigma*}) under weight (sigma, sigma*)
    M[k, n] = (P_n, P_k) under weight (2 sigma, 2 sigma*)

    Both by (N+1)-point Gauss-Jacobi rules, exact for degree n + k <= 2N.
    S is upper triangular, and diagonal when sigma = sigma*.
    """
    _check_degree(N)
    trial, image = p.trial_weight, p.image_weight
    lam = eigenvalues(N, p)

    mass_rule = gauss_jacobi(N + 1, WeightExponents(2.0 * p.sigma, 2.0 * p.sigma_star))
    basis = jacobi_table(N, trial, mass_rule.nodes)
    mass = (basis * mass_rule.weights) @ basis.T

    if p.sigma == p.sigma_star:
        stiffness = lam * jacobi_norms(N, trial)
        return AssembledSystem(stiffness=stiffness, mass=mass, structure=STIFFNESS_DIAGONAL, mu=p.mu)

    rule = gauss_jacobi(N + 1, trial)
    test = jacobi_table(N, trial, rule.nodes)
    images = jacobi_table(N, image, rule.nodes)
    stiffness = lam[:, np.newaxis] * np.triu((test * rule.weights) @ images.T)
    return AssembledSystem(stiffness=stiffness, mass=mass, structure=DENSE, mu=p.mu)


def assemble_petrov_galerkin(N: int, p: OperatorParams) -> AssembledSystem:
    """
    S diagonal with S_kk = lambda_k h_k^{sigma*,sigma};
    M[k, n] = integral of (1-x^2)^alpha P_n^{sigma,sigma*} P_k^{sigma*,sigma}
    """
    _check_degree(N)
    trial, image = p.trial_weight, p.image_weight
    stiffness = eigenvalues(N, p) * jacobi_norms(N, image)

    rule = gauss_jacobi(N + 1, WeightExponents(p.alpha, p.alpha))
    test = jacobi_table(N, image, rule.nodes)
    basis = jacobi_table(N, trial, rule.nodes)
    mass = (test * rule.weights) @ basis.T
    return AssembledSystem(stiffness=stiffness, mass=mass, structure=STIFFNESS_DIAGONAL, mu=p.mu)


def assemble(N: int, p: OperatorParams, method: Method) -> AssembledSystem:
    if method == Method.GALERKIN:
        return assemble_galerkin(N, p)
    return assemble_petrov_galerkin(N, p)


def dual_weight(p: OperatorParams, method: Method) -> WeightExponents:
    """Weight exponents of the test functions"""
    return p.trial_weight if method == Method.GALERKIN else p.image_weight


def default_quad_points(N: int) -> int:
    return max(2 * N, settings.MIN_RHS_QUAD_POINTS)


def project_rhs(
    f: RhsSpec,
    N: int,
    p: OperatorParams,
    method: Method,
    quad_points: Optional[int] = None,
) -> np.ndarray:
    """
    f_k = (f, test_k) with the boundary powers of f folded into the rule.

    The rule carries exponents (a + p, b + q) for test weight (a, b), so only
    the smooth factor g is sampled. Interior kinks split the interval.
    """
    _check_degree(N)
    n_quad = default_quad_points(N) if quad_points is None else int(quad_points)
    if n_quad < N:
        raise ParameterDomainError(f"rhs quadrature needs at least N={N} points, got {n_quad}")

    w = dual_weight(p, method)
    combined_gamma = w.gamma + f.left_exponent
    combined_beta = w.beta + f.right_exponent
    if combined_gamma <= -1.0 or combined_beta <= -1.0:
        raise ExponentRangeError(
            f"rhs '{f.name}' with test weight ({w.gamma:.6g}, {w.beta:.6g}) gives "
            f"non-integrable exponents ({combined_gamma:.6g}, {combined_beta:.6g})"
        )
    combined = WeightExponents(combined_gamma, combined_beta)

    if not f.interior_kinks:
        rule = gauss_jacobi(n_quad + 1, combined)
        nodes, weights = rule.nodes, rule.weights
    else:
        breaks = [-1.0, *f.interior_kinks, 1.0]
        pieces = [segment_rule(a, b, combined, n_quad + 1) for a, b in zip(breaks, breaks[1:])]
        nodes = np.concatenate([piece[0] for piece in pieces])
        weights = np.concatenate([piece[1] for piece in pieces])

    sampled = np.asarray(f.smooth_part(nodes), dtype=float) * weights
    return jacobi_table(N, w, nodes) @ sampled


def system_residual(sys: AssembledSystem, coefficients: np.ndarray) -> float:
    """||(S + mu M) u - f||_inf / ||f||_inf (absolute when f = 0)"""
    if sys.structure == STIFFNESS_DIAGONAL:
        applied = sys.stiffness * coefficients + sys.mu * (sys.mass @ coefficients)
    else:
        applied = sys.stiffness @ coefficients + sys.mu * (sys.mass @ coefficients)
    scale = float(np.max(np.abs(sys.rhs))) if sys.rhs.size else 0.0
    defect = float(np.max(np.abs(applied - sys.rhs))) if sys.rhs.size else 0.0
    return defect / scale if scale > 0.0 else defect


def solve_system(sys: AssembledSystem) -> np.ndarray:
    """Solve (S + mu M) u = f by LU with partial pivoting, or by division when diagonal and mu = 0"""
    if sys.rhs is None:
        raise ParameterDomainError("assembled system has no right-hand side")

    if sys.structure == STIFFNESS_DIAGONAL and sys.mu == 0.0:
        if np.any(sys.stiffness == 0.0):
            raise SingularSystemError("zero diagonal stiffness entry")
        coefficients = sys.rhs / sys.stiffness
    else:
        matrix = sys.operator_matrix()
        lu, piv = lu_factor(matrix, check_finite=True)
        if np.any(np.diag(lu) == 0.0):
            raise SingularSystemError(
                f"(S + mu M) is singular for mu={sys.mu}; mu sits on a discrete eigenvalue"
            )
        coefficients = lu_solve((lu, piv), sys.rhs)

    if not np.all(np.isfinite(coefficients)):
        raise SingularSystemError("linear solve produced non-finite coefficients")

    residual = system_residual(sys, coefficients)
    if residual > settings.SOLVE_RESIDUAL_TOLERANCE:
        logger.warning("solve_residual_high", residual=residual, size=sys.size, mu=sys.mu)
    return coefficients


def solve(
    N: int,
    p: OperatorParams,
    f: RhsSpec,
    method: Method = Method.PETROV_GALERKIN,
    quad_points: Optional[int] = None,
) -> SpectralSolution:
    """Assemble, project the rhs and solve"""
    start_time = time.time()
    method = Method(method)

    if method == Method.PETROV_GALERKIN and abs(p.mu) > stability_bound(p):
        logger.warning(
            "mu_above_stability_bound", mu=p.mu, bound=stability_bound(p), alpha=p.alpha, theta=p.theta
        )

    n_quad = default_quad_points(N) if quad_points is None else int(quad_points)
    sys = assemble(N, p, method).with_rhs(project_rhs(f, N, p, method, n_quad))
    coefficients = solve_system(sys)
    coefficients.setflags(write=False)
    residual = system_residual(sys, coefficients)

    logger.info(
        "solve_completed",
        method=method.value,
        N=N,
        alpha=p.alpha,
        theta=p.theta,
        rhs=f.name,
        residual=residual,
        execution_time=int((time.time() - start_time) * 1000),
    )
    return SpectralSolution(
        params=p,
        N=N,
        coefficients=coefficients,
        method=method,
        quad_points=n_quad,
        residual=residual,
    )


def evaluate(sol: SpectralSolution, x: ArrayLike) -> ArrayLike:
    """u_N(x) = sum_n u_n (1-x)^sigma (1+x)^sigma* P_n^{sigma,sigma*}(x); zero at x = +-1"""
    xs = np.asarray(x, dtype=float)
    flat = np.atleast_1d(xs)
    w = sol.params.trial_weight
    values = w.weight(flat) * (sol.coefficients @ jacobi_table(sol.N, w, flat))
    values[np.abs(flat) == 1.0] = 0.0
    return float(values[0]) if xs.ndim == 0 else values.reshape(xs.shape)
