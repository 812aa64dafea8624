"""
Gamma-function utilities and the Jacobi polynomial toolkit
"""

from dataclasses import dataclass
from typing import List, Union

import mpmath as mp
import numpy as np
import structlog
from scipy import special as sp

from app.core.exceptions import GammaOverflowError, ParameterDomainError

logger = structlog.get_logger(__name__)

ArrayLike = Union[float, np.ndarray]

LN2 = np.log(2.0)


@dataclass(frozen=True)
class WeightExponents:
    """Exponents (gamma, beta) of the Jacobi weight (1-x)^gamma (1+x)^beta"""

    gamma: float
    beta: float

    def __post_init__(self):
        if not (self.gamma > -1.0 and self.beta > -1.0):
            raise ParameterDomainError(
                f"Jacobi weight exponents must exceed -1, got ({self.gamma}, {self.beta})"
            )

    def swapped(self) -> "WeightExponents":
        return WeightExponents(self.beta, self.gamma)

    def shifted(self, by: float = 1.0) -> "WeightExponents":
        return WeightExponents(self.gamma + by, self.beta + by)

    def weight(self, x: ArrayLike) -> ArrayLike:
        """Evaluate (1-x)^gamma (1+x)^beta"""
        x = np.asarray(x, dtype=float)
        return (1.0 - x) ** self.gamma * (1.0 + x) ** self.beta


@dataclass(frozen=True)
class ConnectionCoefficients:
    """P_n^{g,b} = a_n P_{n-2}^{g+1,b+1} + b_n P_{n-1}^{g+1,b+1} + c_n P_n^{g+1,b+1}"""

    a_n: float
    b_n: float
    c_n: float


# ---------------------------------------------------------------------------
# Gamma function
# ---------------------------------------------------------------------------

def ln_gamma(x: ArrayLike) -> ArrayLike:
    """Natural log of the gamma function for positive arguments"""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0.0)):
        raise ParameterDomainError(f"ln_gamma is defined for x > 0 only, got {x}")
    result = sp.gammaln(arr)
    return float(result) if result.ndim == 0 else result


def gamma_ratio(a: ArrayLike, b: ArrayLike) -> ArrayLike:
    """Gamma(a) / Gamma(b) evaluated through log-gamma differences"""
    log_ratio = np.asarray(ln_gamma(a)) - np.asarray(ln_gamma(b))
    with np.errstate(over="ignore"):
        result = np.exp(log_ratio)
    if np.any(np.isinf(result)):
        raise GammaOverflowError(f"Gamma({a})/Gamma({b}) overflows double precision")
    return float(result) if result.ndim == 0 else result


# ---------------------------------------------------------------------------
# Jacobi polynomials
# ---------------------------------------------------------------------------

def _check_points(x: ArrayLike) -> np.ndarray:
    xs = np.asarray(x, dtype=float)
    if np.any(np.abs(xs) > 1.0):
        raise ParameterDomainError("Jacobi polynomials are evaluated on [-1, 1] only")
    return xs


def _check_degree(n: int) -> int:
    if n < 0:
        raise ParameterDomainError(f"polynomial degree must be nonnegative, got {n}")
    return int(n)


def _recurrence_step(k: int, g: float, b: float):
    """Coefficients of P_k = (a2 + a3 x) P_{k-1} - a4 P_{k-2}, valid for k >= 2"""
    apb = g + b
    a1 = 2.0 * k * (k + apb) * (2.0 * k + apb - 2.0)
    a2 = (2.0 * k + apb - 1.0) * (g * g - b * b)
    a3 = (2.0 * k + apb - 2.0) * (2.0 * k + apb - 1.0) * (2.0 * k + apb)
    a4 = 2.0 * (k + g - 1.0) * (k + b - 1.0) * (2.0 * k + apb)
    return a2 / a1, a3 / a1, a4 / a1


def jacobi_table(N: int, w: WeightExponents, x: ArrayLike) -> np.ndarray:
    """
    Evaluate P_0^{g,b}, ..., P_N^{g,b} at every point of x.

    Rows correspond to degrees, columns to points. Degrees 0 and 1 use
    closed forms so that g + b = -1 causes no 0/0.
    """
    N = _check_degree(N)
    xs = np.atleast_1d(_check_points(x))
    g, b = w.gamma, w.beta
    table = np.empty((N + 1, xs.size))
    table[0] = 1.0
    if N > 0:
        table[1] = 0.5 * (g - b + (g + b + 2.0) * xs)
    for k in range(2, N + 1):
        c2, c3, c4 = _recurrence_step(k, g, b)
        table[k] = (c2 + c3 * xs) * table[k - 1] - c4 * table[k - 2]
    return table


def jacobi_eval(n: int, w: WeightExponents, x: ArrayLike) -> ArrayLike:
    """Evaluate P_n^{g,b}(x) by the ascending three-term recurrence"""
    n = _check_degree(n)
    xs = _check_points(x)
    g, b = w.gamma, w.beta

    if n == 0:
        result = np.ones_like(xs)
    else:
        p_prev = np.ones_like(xs)
        p = 0.5 * (g - b + (g + b + 2.0) * xs)
        for k in range(2, n + 1):
            c2, c3, c4 = _recurrence_step(k, g, b)
            p, p_prev = (c2 + c3 * xs) * p - c4 * p_prev, p
        result = p
    return float(result) if np.ndim(result) == 0 else result


def derivative_factor(n: int, w: WeightExponents, l: int) -> float:
    """d_{n,l} = Gamma(n+g+b+l+1) / (2^l Gamma(n+g+b+1)), for n >= l"""
    s = w.gamma + w.beta
    return float(np.exp(ln_gamma(n + s + l + 1.0) - ln_gamma(n + s + 1.0) - l * LN2))


def jacobi_deriv(n: int, w: WeightExponents, x: ArrayLike, l: int = 1) -> ArrayLike:
    """l-th derivative of P_n^{g,b}: d_{n,l} P_{n-l}^{g+l,b+l}(x)"""
    n = _check_degree(n)
    if l < 1:
        raise ParameterDomainError(f"derivative order must be positive, got {l}")
    xs = _check_points(x)
    if n < l:
        zeros = np.zeros_like(xs)
        return float(zeros) if zeros.ndim == 0 else zeros
    return derivative_factor(n, w, l) * jacobi_eval(n - l, w.shifted(l), xs)


def jacobi_norms(N: int, w: WeightExponents) -> np.ndarray:
    """Squared norms h_0, ..., h_N of P_n^{g,b} under the weight w"""
    N = _check_degree(N)
    g, b = w.gamma, w.beta
    s = g + b
    norms = np.empty(N + 1)

    # symmetric pairings keep h^{g,b} == h^{b,g} bit-for-bit
    norms[0] = np.exp(
        (s + 1.0) * LN2 + (sp.gammaln(g + 1.0) + sp.gammaln(b + 1.0)) - sp.gammaln(s + 2.0)
    )
    if N > 0:
        n = np.arange(1, N + 1, dtype=float)
        log_h = (
            (s + 1.0) * LN2
            + (sp.gammaln(n + g + 1.0) + sp.gammaln(n + b + 1.0))
            - sp.gammaln(n + s + 1.0)
            - sp.gammaln(n + 1.0)
            - np.log(2.0 * n + s + 1.0)
        )
        norms[1:] = np.exp(log_h)
    return norms


def jacobi_norm(n: int, w: WeightExponents) -> float:
    """h_n^{g,b}, the squared weighted L2 norm of P_n^{g,b}"""
    n = _check_degree(n)
    return float(jacobi_norms(n, w)[n])


def connection_coeffs(n: int, w: WeightExponents) -> ConnectionCoefficients:
    """Coefficients expressing P_n^{g,b} through P^{g+1,b+1} of degrees n-2, n-1, n"""
    n = _check_degree(n)
    g, b = w.gamma, w.beta
    s = g + b

    if n == 0:
        return ConnectionCoefficients(0.0, 0.0, 1.0)

    c_n = (n + s + 1.0) * (n + s + 2.0) / ((2 * n + s + 1.0) * (2 * n + s + 2.0))
    b_n = (g - b) * (n + s + 1.0) / ((2 * n + s) * (2 * n + s + 2.0))
    a_n = 0.0
    if n >= 2:
        a_n = -(n + g) * (n + b) / ((2 * n + s) * (2 * n + s + 1.0))
    return ConnectionCoefficients(a_n, b_n, c_n)


def derivative_relation_coeffs(n: int, w: WeightExponents):
    """
    Coefficients of P_n^{g,b} = A d/dx P_{n-1} + B d/dx P_n + C d/dx P_{n+1}.

    Returned as a tuple (A, B, C); A vanishes for n <= 1 and B for n = 0.
    """
    n = _check_degree(n)
    g, b = w.gamma, w.beta
    s = g + b

    if n == 0:
        return 0.0, 0.0, 2.0 / (s + 2.0)

    coeffs = connection_coeffs(n, w)
    a_hat = 2.0 * coeffs.a_n / (n + s) if n >= 2 else 0.0
    b_hat = 2.0 * (g - b) / ((2 * n + s) * (2 * n + s + 2.0))
    c_hat = 2.0 * coeffs.c_n / (n + s + 2.0)
    return a_hat, b_hat, c_hat


def xkn_sequence(n: int, w: WeightExponents, k_max: int) -> np.ndarray:
    """
    X_n^n, ..., X_{k_max}^n from the two-term recurrence built on the
    connection coefficients. The sup norm of consecutive pairs never grows.
    """
    n = _check_degree(n)
    if k_max < n:
        raise ParameterDomainError(f"k_max must be at least n, got k_max={k_max} < n={n}")

    values = np.empty(k_max - n + 1)
    values[0] = 1.0 / connection_coeffs(n, w).c_n
    if k_max == n:
        return values

    nxt = connection_coeffs(n + 1, w)
    values[1] = -nxt.b_n / nxt.c_n * values[0]
    for k in range(n, k_max - 1):
        step = connection_coeffs(k + 2, w)
        p_k = -step.b_n / step.c_n
        q_k = -step.a_n / step.c_n
        values[k - n + 2] = p_k * values[k - n + 1] + q_k * values[k - n]
    return values


def jacobi_endpoint_coeffs(n: int, w: WeightExponents, endpoint: int = -1) -> List[mp.mpf]:
    """
    Coefficients c_0..c_n of P_n^{g,b} in powers of (1+x) (endpoint -1)
    or of (1-x) (endpoint +1), as mpmath numbers at the working precision.

    Built from the ratio c_{m+1}/c_m, so no gamma function is evaluated.
    """
    n = _check_degree(n)
    if endpoint not in (-1, 1):
        raise ParameterDomainError(f"endpoint must be -1 or 1, got {endpoint}")
    if endpoint == 1:
        # P_n^{g,b}(x) = (-1)^n P_n^{b,g}(-x)
        sign = -1 if n % 2 else 1
        return [sign * c for c in jacobi_endpoint_coeffs(n, w.swapped(), -1)]

    g, b = mp.mpf(w.gamma), mp.mpf(w.beta)
    c = mp.mpf(-1 if n % 2 else 1)
    for j in range(1, n + 1):
        c *= (b + j) / j
    coeffs = [c]
    for m in range(n):
        c = -c * (n - m) * (g + b + n + m + 1) / (2 * (m + 1) * (b + m + 1))
        coeffs.append(c)
    return coeffs
