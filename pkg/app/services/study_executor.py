"""
Study execution engine for convergence grids
"""

import asyncio
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import structlog

from app.core.exceptions import SpectralError
from app.schemas.study import CellLog, ConvergenceReport, StudyConfig, StudyValidation
from app.services.convergence import SolutionCache, StudyCell, run_study
from app.services.operator import OperatorParams
from app.services.rhs import register_custom_rhs, resolve_rhs
from app.services.solver import dual_weight

logger = structlog.get_logger(__name__)


@dataclass
class StudyContext:
    """Execution context for one study run"""
    config: StudyConfig
    execution_log: List[CellLog]
    start_time: float


def expand_cells(config: StudyConfig) -> List[StudyCell]:
    """Cells in (method, theta, alpha) order, the order reports are written in"""
    return [
        StudyCell(
            method=method,
            alpha=alpha,
            theta=theta,
            mu=config.mu,
            rhs=config.rhs,
            Ns=tuple(config.Ns),
            ref_N=config.ref_N,
            error_metric=config.error_metric,
            quad_points=config.quad_points,
            reference_method=config.reference_method,
        )
        for method in config.methods
        for theta in config.thetas
        for alpha in config.alphas
    ]


def _failed_report(cell: StudyCell, message: str) -> ConvergenceReport:
    return ConvergenceReport(
        method=cell.method,
        alpha=cell.alpha,
        theta=cell.theta,
        mu=cell.mu,
        rhs=cell.rhs,
        error_metric=cell.error_metric,
        ref_N=cell.ref_N,
        reference_method=cell.reference_method or cell.method,
        status="failed",
        error=message,
    )


class StudyExecutor:
    """Runs the cells of a study on a worker pool"""

    def __init__(self, jobs: int = 1, cache: Optional[SolutionCache] = None):
        self.jobs = max(1, int(jobs))
        self.cache = cache or SolutionCache()

    async def validate_study(self, config: StudyConfig) -> StudyValidation:
        """Check that every cell can be set up before any solve starts"""
        errors = []
        warnings = []

        for custom in config.custom_rhs:
            try:
                register_custom_rhs(custom)
            except SpectralError as e:
                errors.append(f"Custom rhs {custom.name}: {e}")

        cells = expand_cells(config)
        for cell in cells:
            try:
                p = OperatorParams.from_alpha_theta(cell.alpha, cell.theta, cell.mu)
                f = resolve_rhs(cell.rhs, p)
                w = dual_weight(p, cell.method)
                if w.gamma + f.left_exponent <= -1.0 or w.beta + f.right_exponent <= -1.0:
                    errors.append(
                        f"Cell ({cell.method.value}, alpha={cell.alpha}, theta={cell.theta}): "
                        f"rhs {cell.rhs} is not integrable against the test functions"
                    )
            except SpectralError as e:
                errors.append(f"Cell ({cell.method.value}, alpha={cell.alpha}, theta={cell.theta}): {e}")

        if config.ref_N < 4 * max(config.Ns):
            warnings.append(f"ref_N={config.ref_N} is below 4 x max(N)={4 * max(config.Ns)}")

        return StudyValidation(
            is_valid=len(errors) == 0,
            errors=errors,
            warnings=warnings,
            cell_count=len(cells),
        )

    def _run_cell(self, cell: StudyCell) -> ConvergenceReport:
        return run_study(cell, self.cache)

    async def execute_study(self, config: StudyConfig) -> Dict[str, Any]:
        """Execute every cell; failed cells are reported, not raised"""
        start_time = time.time()
        context = StudyContext(config=config, execution_log=[], start_time=start_time)

        validation = await self.validate_study(config)
        for warning in validation.warnings:
            logger.warning("study_warning", detail=warning)
        if not validation.is_valid:
            logger.error("study_invalid", errors=validation.errors)
            return {
                "reports": [],
                "execution_log": [],
                "errors": validation.errors,
                "execution_time": int((time.time() - start_time) * 1000),
                "status": "failed",
            }

        cells = expand_cells(config)
        logger.info("study_started", cells=len(cells), jobs=self.jobs)

        loop = asyncio.get_running_loop()
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:

            async def run(cell: StudyCell) -> ConvergenceReport:
                cell_start = time.time()
                try:
                    report = await loop.run_in_executor(pool, self._run_cell, cell)
                    status, message = "completed", None
                except Exception as e:
                    logger.error(
                        "study_cell_failed",
                        method=cell.method.value,
                        alpha=cell.alpha,
                        theta=cell.theta,
                        error=str(e),
                        exception_type=type(e).__name__,
                    )
                    report = _failed_report(cell, str(e))
                    status, message = "failed", str(e)

                elapsed = int((time.time() - cell_start) * 1000)
                context.execution_log.append(
                    CellLog(
                        method=cell.method,
                        alpha=cell.alpha,
                        theta=cell.theta,
                        status=status,
                        execution_time=elapsed,
                        error=message,
                    )
                )
                logger.info(
                    "study_cell_finished",
                    method=cell.method.value,
                    alpha=cell.alpha,
                    theta=cell.theta,
                    status=status,
                    execution_time=elapsed,
                )
                return report

            # gather keeps submission order, so reports do not depend on completion order
            reports = list(await asyncio.gather(*(run(cell) for cell in cells)))

        failed = [r for r in reports if r.status == "failed"]
        total_time = int((time.time() - start_time) * 1000)
        logger.info("study_finished", cells=len(reports), failed=len(failed), execution_time=total_time)

        return {
            "reports": reports,
            "execution_log": context.execution_log,
            "errors": [r.error for r in failed],
            "execution_time": total_time,
            "status": "failed" if failed else "completed",
        }
