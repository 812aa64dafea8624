"""
Gauss-Jacobi quadrature rules and weighted integration
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
import structlog
from scipy.linalg import eigh_tridiagonal

from app.core.config import settings
from app.core.exceptions import ConvergenceFailure, ParameterDomainError
from app.services.special import WeightExponents, jacobi_deriv, jacobi_eval, jacobi_norm

logger = structlog.get_logger(__name__)

LEGENDRE = WeightExponents(0.0, 0.0)

# a polished node whose last Newton step exceeds this is a genuine failure
NODE_FAILURE_STEP = 1e-10

_INNER_LEFT = np.nextafter(-1.0, 0.0)
_INNER_RIGHT = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of a Gauss-Jacobi rule for the weight `exponents`"""

    exponents: WeightExponents
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def points(self) -> int:
        return int(self.nodes.size)


def _recurrence_matrix(points: int, w: WeightExponents) -> Tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the symmetric Jacobi matrix"""
    g, b = w.gamma, w.beta
    s = g + b

    diag = np.empty(points)
    diag[0] = (b - g) / (s + 2.0)
    if points > 1:
        k = np.arange(1, points, dtype=float)
        diag[1:] = (b * b - g * g) / ((2.0 * k + s) * (2.0 * k + s + 2.0))

    off_sq = np.empty(max(points - 1, 0))
    if points > 1:
        off_sq[0] = 4.0 * (1.0 + g) * (1.0 + b) / ((2.0 + s) ** 2 * (3.0 + s))
    if points > 2:
        k = np.arange(2, points, dtype=float)
        off_sq[1:] = (
            4.0 * k * (k + g) * (k + b) * (k + s)
            / ((2.0 * k + s) ** 2 * (2.0 * k + s + 1.0) * (2.0 * k + s - 1.0))
        )
    return diag, np.sqrt(off_sq)


def _polish_nodes(points: int, w: WeightExponents, nodes: np.ndarray) -> np.ndarray:
    """Newton iteration on P_points; stops once the step no longer shrinks"""
    previous = np.inf
    step_size = np.inf
    for _ in range(settings.QUADRATURE_NEWTON_ITERATIONS):
        step = jacobi_eval(points, w, nodes) / jacobi_deriv(points, w, nodes, 1)
        step_size = float(np.max(np.abs(step)))
        if not step_size < previous:
            break
        nodes = np.clip(nodes - step, _INNER_LEFT, _INNER_RIGHT)
        previous = step_size
        if step_size == 0.0:
            break

    if not np.isfinite(step_size) or min(step_size, previous) > NODE_FAILURE_STEP:
        raise ConvergenceFailure(
            f"Gauss-Jacobi nodes for {points} points, exponents "
            f"({w.gamma}, {w.beta}) did not converge (last step {step_size:.3e})"
        )
    return nodes


def _build_rule(points: int, w: WeightExponents) -> QuadratureRule:
    diag, off = _recurrence_matrix(points, w)
    if points == 1:
        nodes = diag.copy()
    else:
        nodes = eigh_tridiagonal(diag, off, eigvals_only=True)
        nodes = _polish_nodes(points, w, np.sort(nodes))

    if np.any(np.diff(nodes) <= 0.0) or np.any(np.abs(nodes) >= 1.0):
        raise ConvergenceFailure(
            f"Gauss-Jacobi nodes for {points} points are not strictly increasing inside (-1, 1)"
        )

    # w_j proportional to 1 / ((1 - x_j^2) P'(x_j)^2), scaled to the total mass h_0
    deriv = jacobi_deriv(points, w, nodes, 1)
    raw = 1.0 / ((1.0 - nodes) * (1.0 + nodes) * deriv * deriv)
    weights = raw * (jacobi_norm(0, w) / np.sum(raw))

    nodes.setflags(write=False)
    weights.setflags(write=False)
    logger.debug("quadrature_built", points=points, gamma=w.gamma, beta=w.beta)
    return QuadratureRule(exponents=w, nodes=nodes, weights=weights)


def _cache_key(value: float) -> float:
    return float(f"{value:.15g}")


@lru_cache(maxsize=settings.QUADRATURE_CACHE_SIZE)
def _cached_rule(points: int, gamma: float, beta: float) -> QuadratureRule:
    return _build_rule(points, WeightExponents(gamma, beta))


def gauss_jacobi(points: int, w: WeightExponents) -> QuadratureRule:
    """
    Gauss-Jacobi rule whose nodes are the zeros of P_points^{gamma,beta}.

    Nodes come from the eigenvalues of the tridiagonal recurrence matrix,
    refined by Newton on the polynomial itself. Rules are cached; the
    returned arrays are read-only.
    """
    if points < 1:
        raise ParameterDomainError(f"a quadrature rule needs at least one point, got {points}")
    return _cached_rule(int(points), _cache_key(w.gamma), _cache_key(w.beta))


def gauss_legendre(points: int) -> QuadratureRule:
    return gauss_jacobi(points, LEGENDRE)


def clear_cache() -> None:
    _cached_rule.cache_clear()


def cache_info():
    return _cached_rule.cache_info()


def integrate(rule: QuadratureRule, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sum of w_j f(x_j), approximating the integral of f against the rule's weight"""
    values = np.asarray(f(rule.nodes), dtype=float)
    return float(np.dot(rule.weights, np.broadcast_to(values, rule.nodes.shape)))


def segment_rule(a: float, b: float, w: WeightExponents, points: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights for the integral of g(x) w(x) over [a, b] inside [-1, 1].

    A segment touching -1 keeps (1+x)^beta in a mapped Gauss-Jacobi weight,
    one touching +1 keeps (1-x)^gamma; the other factor is smooth there and
    is sampled into the weights. Interior segments use Gauss-Legendre.
    """
    if not -1.0 <= a < b <= 1.0:
        raise ParameterDomainError(f"invalid segment [{a}, {b}]")

    if a == -1.0 and b == 1.0:
        rule = gauss_jacobi(points, w)
        return np.array(rule.nodes), np.array(rule.weights)

    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)

    if a == -1.0:
        rule = gauss_jacobi(points, WeightExponents(0.0, w.beta))
        x = half * rule.nodes + mid
        weights = rule.weights * half ** (w.beta + 1.0) * (1.0 - x) ** w.gamma
    elif b == 1.0:
        rule = gauss_jacobi(points, WeightExponents(w.gamma, 0.0))
        x = half * rule.nodes + mid
        weights = rule.weights * half ** (w.gamma + 1.0) * (1.0 + x) ** w.beta
    else:
        rule = gauss_legendre(points)
        x = half * rule.nodes + mid
        weights = rule.weights * half * w.weight(x)
    return x, weights
