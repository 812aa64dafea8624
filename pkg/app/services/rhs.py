"""
Registry of right-hand sides f(x) = (1-x)^p (1+x)^q g(x)
"""

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import structlog

from app.core.exceptions import ParameterDomainError, UnknownRhsError
from app.schemas.study import CustomRhsSchema, RhsTerm
from app.services.operator import OperatorParams, eigenvalue
from app.services.special import jacobi_eval

logger = structlog.get_logger(__name__)

WEIGHTED_SHIFTED = "weighted-shifted"
WEIGHTED = "weighted"


@dataclass(frozen=True)
class RegularityIndex:
    """Regularity index r of f in one family of weighted spaces"""

    space: str
    offset: float
    plus_min_sigma: bool = False

    def value(self, p: OperatorParams) -> float:
        return self.offset + (p.min_sigma if self.plus_min_sigma else 0.0)

    @property
    def label(self) -> str:
        if math.isinf(self.offset):
            return "inf"
        if not self.plus_min_sigma:
            return f"{self.offset:g}"
        if self.offset == 0.0:
            return "σ∧σ*"
        sign = "+" if self.offset > 0 else "-"
        return f"σ∧σ*{sign}{abs(self.offset):g}"


@dataclass(frozen=True)
class RhsSpec:
    """Boundary exponents, smooth factor and interior kinks of a right-hand side"""

    name: str
    smooth_part: Callable[[np.ndarray], np.ndarray]
    left_exponent: float = 0.0
    right_exponent: float = 0.0
    interior_kinks: Tuple[float, ...] = ()
    regularity: Tuple[RegularityIndex, ...] = field(default=())

    def __post_init__(self):
        if not (self.left_exponent > -1.0 and self.right_exponent > -1.0):
            raise ParameterDomainError(
                f"rhs '{self.name}': boundary exponents must exceed -1, "
                f"got ({self.left_exponent}, {self.right_exponent})"
            )
        kinks = tuple(self.interior_kinks)
        if any(not -1.0 < k < 1.0 for k in kinks) or list(kinks) != sorted(set(kinks)):
            raise ParameterDomainError(
                f"rhs '{self.name}': kinks must be sorted, distinct and inside (-1, 1)"
            )

    def __call__(self, x) -> np.ndarray:
        """Full value f(x)"""
        x = np.asarray(x, dtype=float)
        return (1.0 - x) ** self.left_exponent * (1.0 + x) ** self.right_exponent * self.smooth_part(x)


def _sin_rhs() -> RhsSpec:
    return RhsSpec(
        name="sin",
        smooth_part=np.sin,
        regularity=(RegularityIndex(WEIGHTED_SHIFTED, math.inf),),
    )


def _abs_sin_rhs() -> RhsSpec:
    return RhsSpec(
        name="abs-sin",
        smooth_part=lambda x: np.abs(np.sin(x)),
        interior_kinks=(0.0,),
        regularity=(RegularityIndex(WEIGHTED_SHIFTED, 1.5),),
    )


def _jacobi_weighted_rhs(beta: float) -> RhsSpec:
    if not beta > -1.0:
        raise ParameterDomainError(f"jacobi-weighted exponent must exceed -1, got {beta}")
    return RhsSpec(
        name=f"jacobi-weighted:{beta:g}",
        smooth_part=np.sin,
        left_exponent=beta,
        right_exponent=beta,
        regularity=(
            RegularityIndex(WEIGHTED_SHIFTED, 2.0 * beta, plus_min_sigma=True),
            RegularityIndex(WEIGHTED, 2.0 * beta + 1.0, plus_min_sigma=True),
        ),
    )


def _eigen_rhs(m: int, params: OperatorParams) -> RhsSpec:
    """f = lambda_m P_m^{sigma*,sigma}; the exact solution is the m-th pseudo-eigenfunction when mu = 0"""
    if m < 0:
        raise ParameterDomainError(f"eigen rhs needs a nonnegative mode, got {m}")
    scale = eigenvalue(m, params)
    image = params.image_weight
    return RhsSpec(
        name=f"eigen:{m}",
        smooth_part=lambda x: scale * np.asarray(jacobi_eval(m, image, np.clip(x, -1.0, 1.0))),
        regularity=(RegularityIndex(WEIGHTED_SHIFTED, math.inf),),
    )


_TERM_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


def _term_callable(term: RhsTerm) -> Callable[[np.ndarray], np.ndarray]:
    if term.kind == "polynomial":
        coeffs = np.asarray(term.coefficients or [0.0], dtype=float)
        return lambda x: term.coefficient * np.polynomial.polynomial.polyval(term.scale * x + term.shift, coeffs)
    fn = _TERM_FUNCTIONS[term.kind]
    return lambda x: term.coefficient * fn(term.scale * x + term.shift)


def build_custom_rhs(spec: CustomRhsSchema) -> RhsSpec:
    parts = [_term_callable(term) for term in spec.terms]

    def smooth_part(x):
        x = np.asarray(x, dtype=float)
        return sum(part(x) for part in parts)

    return RhsSpec(
        name=spec.name,
        smooth_part=smooth_part,
        left_exponent=spec.left_exponent,
        right_exponent=spec.right_exponent,
        interior_kinks=tuple(spec.kinks),
        regularity=tuple(
            RegularityIndex(r.space, r.offset, r.plus_min_sigma) for r in spec.regularity
        ),
    )


_custom_lock = threading.Lock()
_custom_registry: Dict[str, CustomRhsSchema] = {}

_BUILTIN_NAMES = {"sin", "abs-sin"}
_BUILTIN_PREFIXES = ("jacobi-weighted:", "eigen:")


def register_custom_rhs(spec: CustomRhsSchema) -> None:
    """Register a declarative rhs under spec.name"""
    if spec.name in _BUILTIN_NAMES or spec.name.startswith(_BUILTIN_PREFIXES):
        raise ParameterDomainError(f"'{spec.name}' collides with a built-in rhs id")
    build_custom_rhs(spec)
    with _custom_lock:
        _custom_registry[spec.name] = spec
    logger.info("custom_rhs_registered", name=spec.name, terms=len(spec.terms))


def unregister_custom_rhs(name: str) -> None:
    with _custom_lock:
        _custom_registry.pop(name, None)


def resolve_rhs(rhs_id: str, params: Optional[OperatorParams] = None) -> RhsSpec:
    """
    Look up a right-hand side by id.

    Built-ins: sin, abs-sin, jacobi-weighted:<beta>, eigen:<m> (needs params).
    Anything else must have been registered with register_custom_rhs.
    """
    rhs_id = rhs_id.strip()
    if rhs_id == "sin":
        return _sin_rhs()
    if rhs_id == "abs-sin":
        return _abs_sin_rhs()

    if rhs_id.startswith("jacobi-weighted:"):
        raw = rhs_id.split(":", 1)[1]
        try:
            beta = float(raw)
        except ValueError:
            raise ParameterDomainError(f"malformed jacobi-weighted exponent '{raw}'")
        return _jacobi_weighted_rhs(beta)

    if rhs_id.startswith("eigen:"):
        raw = rhs_id.split(":", 1)[1]
        try:
            m = int(raw)
        except ValueError:
            raise ParameterDomainError(f"malformed eigen mode '{raw}'")
        if params is None:
            raise ParameterDomainError("eigen rhs depends on the operator parameters")
        return _eigen_rhs(m, params)

    with _custom_lock:
        custom = _custom_registry.get(rhs_id)
    if custom is None:
        raise UnknownRhsError(f"unknown right-hand side '{rhs_id}'")
    return build_custom_rhs(custom)
