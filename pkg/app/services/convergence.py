"""
Error metrics, convergence rates and theory-predicted orders
"""

import csv
import io
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import TypeAdapter

from app.core.config import settings
from app.core.exceptions import ParameterDomainError, ParameterMismatchError
from app.schemas.solution import Method
from app.schemas.study import ConvergenceReport, PredictedOrder, ReportRow
from app.services.operator import OperatorParams
from app.services.quadrature import gauss_jacobi, gauss_legendre
from app.services.rhs import WEIGHTED, WEIGHTED_SHIFTED, RhsSpec, resolve_rhs
from app.services.solver import SpectralSolution, default_quad_points, evaluate, solve
from app.services.special import jacobi_norms, jacobi_table

logger = structlog.get_logger(__name__)

PARAM_MATCH_TOLERANCE = 1e-14

CSV_COLUMNS = ["method", "alpha", "theta", "mu", "rhs", "N", "error_metric", "error", "rate"]


# ---------------------------------------------------------------------------
# Error metrics
# ---------------------------------------------------------------------------

def _coefficient_gap(sol: SpectralSolution, ref: SpectralSolution) -> np.ndarray:
    a, b = sol.params, ref.params
    if (
        abs(a.sigma - b.sigma) > PARAM_MATCH_TOLERANCE
        or abs(a.sigma_star - b.sigma_star) > PARAM_MATCH_TOLERANCE
        or a.alpha != b.alpha
        or a.theta != b.theta
        or a.mu != b.mu
    ):
        raise ParameterMismatchError(
            f"solutions solve different problems: ({a.alpha}, {a.theta}, {a.mu}) "
            f"vs ({b.alpha}, {b.theta}, {b.mu})"
        )
    if ref.N < sol.N:
        raise ParameterMismatchError(f"reference degree {ref.N} is below solution degree {sol.N}")

    gap = np.array(ref.coefficients, dtype=float)
    gap[: sol.N + 1] -= sol.coefficients
    return gap


def error_E2(sol: SpectralSolution, ref: SpectralSolution) -> float:
    """||u_ref - u_N|| under weight (1-x)^-sigma (1+x)^-sigma*, from coefficients and norms"""
    gap = _coefficient_gap(sol, ref)
    norms = jacobi_norms(ref.N, ref.params.trial_weight)
    return float(math.sqrt(np.dot(gap * gap, norms)))


def error_E1(sol: SpectralSolution, ref: SpectralSolution) -> float:
    """||u_ref - u_N|| under weight (1-x)^-2sigma (1+x)^-2sigma*: a plain L2 norm of a polynomial"""
    gap = _coefficient_gap(sol, ref)
    rule = gauss_legendre(ref.N + 1)
    values = gap @ jacobi_table(ref.N, ref.params.trial_weight, rule.nodes)
    return float(math.sqrt(np.dot(rule.weights, values * values)))


def error_E2_direct(sol: SpectralSolution, ref: SpectralSolution) -> float:
    """E2 by sampling u_ref - u_N in physical space; independent of the coefficient formula"""
    _coefficient_gap(sol, ref)
    w = ref.params.trial_weight
    rule = gauss_jacobi(ref.N + 1, w)
    reduced = (evaluate(ref, rule.nodes) - evaluate(sol, rule.nodes)) / w.weight(rule.nodes)
    return float(math.sqrt(np.dot(rule.weights, reduced * reduced)))


ERROR_METRICS: Dict[str, Callable[[SpectralSolution, SpectralSolution], float]] = {
    "E1": error_E1,
    "E2": error_E2,
}


def rates(errors: Sequence[Tuple[int, float]]) -> List[float]:
    """log2(e_{i-1} / e_i) along a doubling sequence of degrees"""
    for (n_prev, _), (n_cur, _) in zip(errors, errors[1:]):
        if n_cur != 2 * n_prev:
            raise ParameterDomainError(f"degrees must double, got {n_prev} then {n_cur}")
    with np.errstate(divide="ignore"):
        return [
            float(np.log2(e_prev / e_cur)) if e_cur > 0.0 else math.inf
            for (_, e_prev), (_, e_cur) in zip(errors, errors[1:])
        ]


# ---------------------------------------------------------------------------
# Predicted orders
# ---------------------------------------------------------------------------

def _uses_optimal_estimate(theta: float, method: Method) -> bool:
    # Galerkin coincides with Petrov-Galerkin at theta = 1/2
    return method == Method.PETROV_GALERKIN or theta == 0.5


def predicted_order(r: float, alpha: float, theta: float, method: Method, f_space: str) -> float:
    """
    Exponent of N in the error bound for data of regularity r.

    Optimal estimate (Petrov-Galerkin, or Galerkin at theta = 1/2):
    (alpha+1) ^ r + alpha in the weighted-shifted space, alpha ^ r + alpha in the
    weighted space. Galerkin at theta != 1/2 loses alpha.
    """
    if r < 0:
        raise ParameterDomainError(f"regularity index must be nonnegative, got {r}")
    cap = alpha + 1.0 if f_space == WEIGHTED_SHIFTED else alpha
    gamma = min(cap, r) + alpha
    return gamma if _uses_optimal_estimate(theta, Method(method)) else gamma - alpha


def _predicted_label(r_value: float, r_label: str, alpha: float, theta: float, method: Method, f_space: str) -> str:
    optimal = _uses_optimal_estimate(theta, method)
    if f_space == WEIGHTED_SHIFTED:
        if r_value >= alpha + 1.0:
            return "2α+1" if optimal else "α+1"
    elif r_value >= alpha:
        return "2α" if optimal else "α"
    return f"α+{r_label}" if optimal else r_label


def predicted_orders(f: RhsSpec, p: OperatorParams, method: Method) -> List[PredictedOrder]:
    """One predicted order per regularity index the rhs declares"""
    method = Method(method)
    scheme = "Petrov-Galerkin" if method == Method.PETROV_GALERKIN else "Galerkin"
    orders = []
    for index in f.regularity:
        r = index.value(p)
        if r < 0:
            continue
        orders.append(
            PredictedOrder(
                label=_predicted_label(r, index.label, p.alpha, p.theta, method, index.space),
                value=predicted_order(r, p.alpha, p.theta, method, index.space),
                source=f"{scheme} estimate, {index.space} data space",
            )
        )
    return orders


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------

class SolutionCache:
    """Thread-safe memo of solutions; each key is computed at most once"""

    def __init__(self):
        self._lock = threading.Lock()
        self._key_locks: Dict[Hashable, threading.Lock] = {}
        self._solutions: Dict[Hashable, SpectralSolution] = {}
        self.hits = 0
        self.misses = 0

    def get_or_compute(self, key: Hashable, factory: Callable[[], SpectralSolution]) -> SpectralSolution:
        with self._lock:
            if key in self._solutions:
                self.hits += 1
                return self._solutions[key]
            key_lock = self._key_locks.setdefault(key, threading.Lock())

        with key_lock:
            with self._lock:
                if key in self._solutions:
                    self.hits += 1
                    return self._solutions[key]
            solution = factory()
            with self._lock:
                self._solutions[key] = solution
                self.misses += 1
        return solution

    def __len__(self) -> int:
        with self._lock:
            return len(self._solutions)


@dataclass(frozen=True)
class StudyCell:
    """One (method, alpha, theta) block of a study"""

    method: Method
    alpha: float
    theta: float
    mu: float
    rhs: str
    Ns: Tuple[int, ...]
    ref_N: int
    error_metric: str = "E1"
    quad_points: Optional[int] = None
    reference_method: Optional[Method] = None


def cached_solve(
    cache: SolutionCache,
    method: Method,
    p: OperatorParams,
    rhs_id: str,
    N: int,
    quad_points: Optional[int],
) -> SpectralSolution:
    n_quad = default_quad_points(N) if quad_points is None else quad_points
    key = (method.value, p.alpha, p.theta, p.mu, rhs_id, N, n_quad)
    return cache.get_or_compute(key, lambda: solve(N, p, resolve_rhs(rhs_id, p), method, n_quad))


def run_study(cell: StudyCell, cache: Optional[SolutionCache] = None) -> ConvergenceReport:
    """
    Errors of u_N against a same-problem reference solution of degree ref_N,
    with successive rates, their average and the predicted orders.
    """
    if not cell.Ns:
        raise ParameterDomainError("a study needs at least one N")
    if cell.ref_N <= max(cell.Ns):
        raise ParameterDomainError(f"ref_N={cell.ref_N} must exceed max(N)={max(cell.Ns)}")
    if cell.ref_N < 4 * max(cell.Ns):
        logger.warning("reference_degree_low", ref_N=cell.ref_N, max_N=max(cell.Ns))

    cache = cache or SolutionCache()
    method = Method(cell.method)
    reference_method = Method(cell.reference_method or method)
    metric = ERROR_METRICS[cell.error_metric]

    p = OperatorParams.from_alpha_theta(cell.alpha, cell.theta, cell.mu)
    f = resolve_rhs(cell.rhs, p)

    reference = cached_solve(cache, reference_method, p, cell.rhs, cell.ref_N, cell.quad_points)
    errors = []
    for N in cell.Ns:
        sol = cached_solve(cache, method, p, cell.rhs, N, cell.quad_points)
        errors.append((N, metric(sol, reference)))
        logger.debug("study_error", method=method.value, alpha=p.alpha, theta=p.theta, N=N, error=errors[-1][1])

    observed = rates(errors)
    rows = [ReportRow(N=errors[0][0], error=errors[0][1])]
    rows += [ReportRow(N=N, error=e, rate=r) for (N, e), r in zip(errors[1:], observed)]

    return ConvergenceReport(
        method=method,
        alpha=p.alpha,
        theta=p.theta,
        mu=p.mu,
        rhs=cell.rhs,
        sigma=p.sigma,
        sigma_star=p.sigma_star,
        error_metric=cell.error_metric,
        ref_N=cell.ref_N,
        reference_method=reference_method,
        rows=rows,
        averaged_order=float(np.mean(observed)) if observed else None,
        predicted_orders=predicted_orders(f, p, method),
    )


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------

def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    return f"{value:.{settings.CSV_SIGNIFICANT_DIGITS}g}"


def report_to_csv_rows(report: ConvergenceReport) -> List[List[str]]:
    """Data rows, then averaged_order and one row per predicted order"""
    head = [report.method.value, _fmt(report.alpha), _fmt(report.theta), _fmt(report.mu), report.rhs]
    lines = [
        head + [str(row.N), report.error_metric, _fmt(row.error), _fmt(row.rate)]
        for row in report.rows
    ]
    if report.status == "failed":
        lines.append(head + ["failed", report.error_metric, "", ""])
        return lines
    lines.append(head + ["averaged_order", report.error_metric, "", _fmt(report.averaged_order)])
    for order in report.predicted_orders:
        lines.append(head + [f"predicted:{order.label}", report.error_metric, "", _fmt(order.value)])
    return lines


def reports_to_csv(reports: Sequence[ConvergenceReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for report in reports:
        writer.writerows(report_to_csv_rows(report))
    return buffer.getvalue()


_REPORT_LIST = TypeAdapter(List[ConvergenceReport])


def reports_to_json(reports: Sequence[ConvergenceReport]) -> str:
    return _REPORT_LIST.dump_json(list(reports), indent=2).decode() + "\n"


def write_reports(reports: Sequence[ConvergenceReport], out: str, fmt: str = "csv") -> List[Path]:
    """Write CSV and/or JSON next to `out` (its suffix is replaced)"""
    base = Path(out)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)

    written = []
    if fmt in ("csv", "both"):
        path = base.parent / (base.name + ".csv")
        path.write_text(reports_to_csv(reports))
        written.append(path)
    if fmt in ("json", "both"):
        path = base.parent / (base.name + ".json")
        path.write_text(reports_to_json(reports))
        written.append(path)
    logger.info("reports_written", paths=[str(p) for p in written], reports=len(reports))
    return written
