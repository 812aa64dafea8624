"""
Spectral data of the two-sided fractional operator

L u = -[theta * left RL derivative + (1 - theta) * right RL derivative] of order
alpha in (1, 2). Functions (1-x)^sigma (1+x)^sigma* P_n^{sigma,sigma*} are mapped
to lambda_n P_n^{sigma*,sigma}, with sigma + sigma* = alpha tied to theta.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from mpmath import mp
import numpy as np
import structlog

from app.core.config import settings
from app.core.exceptions import ConvergenceFailure, ParameterDomainError
from app.services.special import (
    ArrayLike,
    WeightExponents,
    jacobi_endpoint_coeffs,
    jacobi_eval,
    ln_gamma,
)

logger = structlog.get_logger(__name__)

# the exponent equation is solved to this residual or better
SIGMA_RESIDUAL = 1e-14

# gamma poles closer than this to a nonpositive integer are treated as exact
POLE_SNAP = 1e-12


def _check_alpha_theta(alpha: float, theta: float) -> None:
    if not 1.0 < alpha < 2.0:
        raise ParameterDomainError(f"alpha must lie in (1, 2), got {alpha}")
    if not 0.0 <= theta <= 1.0:
        raise ParameterDomainError(f"theta must lie in [0, 1], got {theta}")


def _sigma_residual(sigma: float, alpha: float, theta: float) -> float:
    sigma_star = alpha - sigma
    s, s_star = math.sin(math.pi * sigma), math.sin(math.pi * sigma_star)
    return theta * (s_star + s) - s_star


def solve_sigma(alpha: float, theta: float) -> Tuple[float, float]:
    """
    Solve theta (sin(pi sigma*) + sin(pi sigma)) = sin(pi sigma*) with
    sigma* = alpha - sigma, sigma in (alpha - 1, 1].

    Newton from alpha/2, falling back to bisection whenever a step leaves
    the bracket. theta in {0, 1/2, 1} is answered in closed form.
    """
    _check_alpha_theta(alpha, theta)
    if theta == 1.0:
        return 1.0, alpha - 1.0
    if theta == 0.0:
        return alpha - 1.0, 1.0
    if theta == 0.5:
        return alpha / 2.0, alpha / 2.0

    # g(alpha - 1) >= 0 >= g(1)
    lo, hi = alpha - 1.0, 1.0
    sigma = alpha / 2.0
    for iteration in range(settings.SIGMA_MAX_ITERATIONS):
        g = _sigma_residual(sigma, alpha, theta)
        if g == 0.0:
            break
        if g > 0.0:
            lo = sigma
        else:
            hi = sigma

        sigma_star = alpha - sigma
        dg = math.pi * (
            theta * (math.cos(math.pi * sigma) - math.cos(math.pi * sigma_star))
            + math.cos(math.pi * sigma_star)
        )
        candidate = sigma - g / dg if dg != 0.0 else math.nan
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)

        step = abs(candidate - sigma)
        sigma = candidate
        if step <= settings.SIGMA_TOLERANCE * max(1.0, abs(sigma)) or hi - lo <= 4e-16:
            break

    residual = abs(_sigma_residual(sigma, alpha, theta))
    if residual >= SIGMA_RESIDUAL:
        raise ConvergenceFailure(
            f"exponent equation for alpha={alpha}, theta={theta} stalled at residual {residual:.3e}"
        )
    logger.debug("sigma_solved", alpha=alpha, theta=theta, sigma=sigma, iterations=iteration + 1)
    return sigma, alpha - sigma


@dataclass(frozen=True)
class OperatorParams:
    """Order alpha, skewness theta, reaction mu and the derived exponents"""

    alpha: float
    theta: float
    mu: float
    sigma: float
    sigma_star: float

    def __post_init__(self):
        _check_alpha_theta(self.alpha, self.theta)

    @classmethod
    def from_alpha_theta(cls, alpha: float, theta: float, mu: float = None) -> "OperatorParams":
        sigma, sigma_star = solve_sigma(alpha, theta)
        return cls(
            alpha=float(alpha),
            theta=float(theta),
            mu=settings.DEFAULT_MU if mu is None else float(mu),
            sigma=sigma,
            sigma_star=sigma_star,
        )

    @property
    def trial_weight(self) -> WeightExponents:
        """(sigma, sigma*): weight of the trial basis"""
        return WeightExponents(self.sigma, self.sigma_star)

    @property
    def image_weight(self) -> WeightExponents:
        """(sigma*, sigma): family the operator maps the trial basis onto"""
        return WeightExponents(self.sigma_star, self.sigma)

    @property
    def min_sigma(self) -> float:
        return min(self.sigma, self.sigma_star)


def eigenvalue_prefactor(p: OperatorParams) -> float:
    if p.theta in (0.0, 1.0):
        return 1.0
    return -math.sin(math.pi * p.alpha) / (
        math.sin(math.pi * p.sigma) + math.sin(math.pi * p.sigma_star)
    )


def eigenvalues(N: int, p: OperatorParams) -> np.ndarray:
    """lambda_0, ..., lambda_N"""
    n = np.arange(N + 1, dtype=float)
    return eigenvalue_prefactor(p) * np.exp(ln_gamma(p.alpha + n + 1.0) - ln_gamma(n + 1.0))


def eigenvalue(n: int, p: OperatorParams) -> float:
    """lambda_n = -sin(pi alpha)/(sin(pi sigma)+sin(pi sigma*)) Gamma(alpha+n+1)/n!"""
    if n < 0:
        raise ParameterDomainError(f"eigenvalue index must be nonnegative, got {n}")
    return float(eigenvalues(n, p)[n])


def stability_bound(p: OperatorParams) -> float:
    """|mu| up to which the Petrov-Galerkin scheme is provably stable"""
    return 0.5 * eigenvalue(0, p)


def pseudo_eigenfunction(n: int, p: OperatorParams, x: ArrayLike) -> ArrayLike:
    """(1-x)^sigma (1+x)^sigma* P_n^{sigma,sigma*}(x)"""
    w = p.trial_weight
    return w.weight(x) * jacobi_eval(n, w, x)


# ---------------------------------------------------------------------------
# Exact Riemann-Liouville derivatives of endpoint power series
# ---------------------------------------------------------------------------
#
# Series sums run in mpmath at settings.ORACLE_PRECISION digits; only the
# final values are rounded to double.

def _monomial_factors(p_exponent: float, n_terms: int, alpha: float) -> List[mp.mpf]:
    """Gamma(q+1)/Gamma(q+1-alpha) for q = p_exponent + k, zero at poles"""
    if p_exponent <= -1.0:
        raise ParameterDomainError(f"power exponents must exceed -1, got {p_exponent}")
    factors = []
    for k in range(n_terms):
        q = mp.mpf(p_exponent) + k
        shifted = q + 1 - mp.mpf(alpha)
        nearest = mp.nint(shifted)
        if nearest <= 0 and abs(shifted - nearest) < POLE_SNAP:
            factors.append(mp.zero)
        else:
            factors.append(mp.gamma(q + 1) * mp.rgamma(shifted))
    return factors


def _power_series_derivative(
    p_exponent: float, poly: Sequence, alpha: float, xs: np.ndarray, endpoint: int
) -> np.ndarray:
    """
    sum_k c_k Gamma(q+1)/Gamma(q+1-alpha) t^(q-alpha) with q = p + k and
    t = 1 - endpoint * x, evaluated as t^(p-alpha) times a Horner sum in t.
    """
    if np.any(np.abs(xs) >= 1.0):
        raise ParameterDomainError("the derivative oracle is evaluated inside (-1, 1) only")
    with mp.workdps(settings.ORACLE_PRECISION):
        factors = _monomial_factors(p_exponent, len(poly), alpha)
        scaled = [mp.mpf(c) * f for c, f in zip(poly, factors)]
        lead = mp.mpf(p_exponent) - mp.mpf(alpha)
        values = []
        for x in xs.flat:
            t = 1 - endpoint * mp.mpf(float(x))
            acc = mp.zero
            for a in reversed(scaled):
                acc = acc * t + a
            values.append(float(acc * mp.power(t, lead)))
    return np.array(values).reshape(xs.shape)


def rl_left_derivative_oracle(p_exponent: float, poly: Sequence, alpha: float, x: ArrayLike) -> ArrayLike:
    """Left RL derivative from -1 of sum_k c_k (1+x)^(p+k), term by term"""
    result = _power_series_derivative(p_exponent, poly, alpha, np.asarray(x, dtype=float), -1)
    return float(result) if result.ndim == 0 else result


def rl_right_derivative_oracle(p_exponent: float, poly: Sequence, alpha: float, x: ArrayLike) -> ArrayLike:
    """Right RL derivative from +1 of sum_k c_k (1-x)^(p+k), term by term"""
    result = _power_series_derivative(p_exponent, poly, alpha, np.asarray(x, dtype=float), 1)
    return float(result) if result.ndim == 0 else result


def _times_complement(coeffs: Sequence) -> List:
    """Multiply a series in t = 1 +- x by 2 - t"""
    out = [2 * c for c in coeffs] + [mp.zero]
    for k, c in enumerate(coeffs):
        out[k + 1] -= c
    return out


def apply_operator_one_sided(n: int, p: OperatorParams, x: ArrayLike) -> np.ndarray:
    """
    Exact L applied to the n-th pseudo-eigenfunction for theta in {0, 1}.

    At theta = 1 the basis function is (1+x)^(alpha-1) times a polynomial in
    (1+x); at theta = 0 it mirrors to powers of (1-x).
    """
    if p.theta not in (0.0, 1.0):
        raise ParameterDomainError(f"no exact operator oracle for theta={p.theta}")
    with mp.workdps(settings.ORACLE_PRECISION):
        if p.theta == 1.0:
            poly = _times_complement(jacobi_endpoint_coeffs(n, p.trial_weight, -1))
            return -np.asarray(rl_left_derivative_oracle(p.sigma_star, poly, p.alpha, x))
        poly = _times_complement(jacobi_endpoint_coeffs(n, p.trial_weight, 1))
        return -np.asarray(rl_right_derivative_oracle(p.sigma, poly, p.alpha, x))


def pseudo_eigen_defect(n: int, p: OperatorParams, xs: ArrayLike, eigenvalue_scale: float = 1.0) -> float:
    """max |L[phi_n](x) - lambda_n P_n^{sigma*,sigma}(x)| over xs, theta in {0, 1}"""
    applied = apply_operator_one_sided(n, p, xs)
    expected = eigenvalue_scale * eigenvalue(n, p) * np.asarray(jacobi_eval(n, p.image_weight, xs))
    return float(np.max(np.abs(applied - expected)))


def kernel_defect(p: OperatorParams, xs: ArrayLike) -> float:
    """max |L[(1-x)^(sigma-1) (1+x)^(sigma*-1)]| over xs, theta in {0, 1}"""
    if p.theta == 1.0:
        values = rl_left_derivative_oracle(p.sigma_star - 1.0, [1.0], p.alpha, xs)
    elif p.theta == 0.0:
        values = rl_right_derivative_oracle(p.sigma - 1.0, [1.0], p.alpha, xs)
    else:
        raise ParameterDomainError(f"no exact operator oracle for theta={p.theta}")
    return float(np.max(np.abs(values)))
