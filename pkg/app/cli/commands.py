"""
Command implementations for the fracspec CLI

Each command takes the parsed argparse namespace and returns a process exit
code: 0 success, 1 numerical or verification failure, 2 usage error.
"""

import asyncio
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import structlog
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import ParameterDomainError, SpectralError, UnknownRhsError
from app.schemas.solution import Method
from app.schemas.study import ConvergenceReport, CustomRhsSchema, StudyConfig
from app.services.convergence import write_reports
from app.services.operator import OperatorParams, solve_sigma
from app.services.rhs import register_custom_rhs, resolve_rhs
from app.services.solver import evaluate, solve
from app.services.study_executor import StudyExecutor
from app.services.verification import VerificationSuite

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Invalid combination of flags or config values"""


def _load_config_file(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config file {path}: {e}")
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return data


def _register_custom(entries: List[Any]) -> None:
    for entry in entries:
        register_custom_rhs(entry if isinstance(entry, CustomRhsSchema) else CustomRhsSchema.model_validate(entry))


def _parse_method(value: str) -> Method:
    try:
        return Method.parse(value)
    except ValueError:
        raise UsageError(f"unknown method '{value}' (use galerkin or pg)")


def _run(command, args) -> int:
    """Map library errors onto exit codes"""
    try:
        return command(args)
    except (UsageError, ValidationError, ParameterDomainError, UnknownRhsError) as e:
        logger.error("usage_error", command=command.__name__, error=str(e))
        print(f"error: {e}")
        return EXIT_USAGE
    except SpectralError as e:
        logger.error("command_failed", command=command.__name__, error=str(e), exception_type=type(e).__name__)
        print(f"error: {e}")
        return EXIT_FAILURE


# ---------------------------------------------------------------------------
# sigma
# ---------------------------------------------------------------------------

def _cmd_sigma(args) -> int:
    sigma, sigma_star = solve_sigma(args.alpha, args.theta)
    if args.decimals is None:
        print(f"sigma={sigma:.15g} sigma_star={sigma_star:.15g}")
    else:
        print(f"sigma={sigma:.{args.decimals}f} sigma_star={sigma_star:.{args.decimals}f}")
    return EXIT_OK


def cmd_sigma(args) -> int:
    """Print (sigma, sigma*) for one (alpha, theta)"""
    return _run(_cmd_sigma, args)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _default_solution_path(method: Method, p: OperatorParams, N: int) -> Path:
    name = f"solution_{method.value}_a{p.alpha:g}_t{p.theta:g}_N{N}.json"
    return Path(settings.OUTPUT_DIRECTORY) / name


def _cmd_solve(args) -> int:
    config = _load_config_file(args.config)
    _register_custom(config.get("custom_rhs", []))

    method = _parse_method(args.method)
    mu = settings.DEFAULT_MU if args.mu is None else args.mu
    p = OperatorParams.from_alpha_theta(args.alpha, args.theta, mu)
    f = resolve_rhs(args.rhs or "sin", p)

    sol = solve(args.N, p, f, method, args.quad_points)

    out = Path(args.out) if args.out else _default_solution_path(method, p, args.N)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(sol.to_record().model_dump_json(indent=2) + "\n")

    print(f"method={method.value} alpha={p.alpha:g} theta={p.theta:g} mu={p.mu:g} rhs={f.name} N={args.N}")
    print(f"sigma={p.sigma:.15g} sigma_star={p.sigma_star:.15g}")
    print(f"u(-1)={evaluate(sol, -1.0):.3g} u(1)={evaluate(sol, 1.0):.3g}")
    print(f"residual={sol.residual:.3e}")
    print(f"written {out}")

    if not sol.residual <= settings.SOLVE_RESIDUAL_TOLERANCE:
        print(f"error: residual {sol.residual:.3e} exceeds {settings.SOLVE_RESIDUAL_TOLERANCE:.0e}")
        return EXIT_FAILURE
    return EXIT_OK


def cmd_solve(args) -> int:
    """Solve one problem and write its solution record"""
    return _run(_cmd_solve, args)


# ---------------------------------------------------------------------------
# converge
# ---------------------------------------------------------------------------

def build_study_config(args) -> StudyConfig:
    """Config file values overridden by every flag given on the command line"""
    data = _load_config_file(args.config)

    if args.method:
        data["methods"] = [_parse_method(m) for m in args.method]
    if args.alphas or args.alpha is not None:
        data["alphas"] = list(args.alphas or []) + ([args.alpha] if args.alpha is not None else [])
    if args.thetas or args.theta is not None:
        data["thetas"] = list(args.thetas or []) + ([args.theta] if args.theta is not None else [])
    if args.Ns or args.N is not None:
        data["Ns"] = list(args.Ns or []) + ([args.N] if args.N is not None else [])

    overrides = {
        "mu": args.mu,
        "rhs": args.rhs,
        "ref_N": args.ref_N,
        "error_metric": args.error,
        "quad_points": args.quad_points,
        "output": args.out,
        "format": args.format,
        "jobs": args.jobs,
    }
    if args.reference_method:
        overrides["reference_method"] = _parse_method(args.reference_method)
    data.update({key: value for key, value in overrides.items() if value is not None})

    if not data.get("Ns"):
        raise UsageError("converge needs a nonempty N list (--Ns)")
    return StudyConfig.model_validate(data)


def format_report(report: ConvergenceReport) -> str:
    """Errors with 3 significant digits, rates with 2 decimals"""
    title = (
        f"{report.method.value}  alpha={report.alpha:g}  theta={report.theta:g}  "
        f"mu={report.mu:g}  rhs={report.rhs}  {report.error_metric} vs u_{report.ref_N}"
    )
    if report.status == "failed":
        return f"{title}\n  FAILED: {report.error}"

    lines = [title, f"  sigma={report.sigma:.4f}  sigma_star={report.sigma_star:.4f}",
             f"  {'N':>5}  {'error':>10}  {'rate':>6}"]
    for row in report.rows:
        rate = "" if row.rate is None else f"{row.rate:.2f}"
        lines.append(f"  {row.N:>5}  {row.error:>10.3g}  {rate:>6}")
    if report.averaged_order is not None:
        lines.append(f"  averaged order {report.averaged_order:.2f}")
    for order in report.predicted_orders:
        lines.append(f"  predicted {order.label} = {order.value:.2f}  ({order.source})")
    return "\n".join(lines)


def _cmd_converge(args) -> int:
    config = build_study_config(args)
    executor = StudyExecutor(jobs=config.jobs)
    outcome = asyncio.run(executor.execute_study(config))

    if not outcome["reports"]:
        for error in outcome["errors"]:
            print(f"error: {error}")
        return EXIT_USAGE

    reports = outcome["reports"]
    for report in reports:
        print(format_report(report))
        print()

    out = config.output or str(Path(settings.OUTPUT_DIRECTORY) / "convergence")
    for path in write_reports(reports, out, config.format):
        print(f"written {path}")
    print(f"{len(reports)} cells in {outcome['execution_time']} ms")

    return EXIT_OK if outcome["status"] == "completed" else EXIT_FAILURE


def cmd_converge(args) -> int:
    """Run a convergence study grid and write its reports"""
    return _run(_cmd_converge, args)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _cmd_verify(args) -> int:
    suite = VerificationSuite(eigenvalue_scale=1.0 + (args.inject_eigenvalue_error or 0.0))
    summary = suite.run(only=args.filter)
    if not summary.checks:
        raise UsageError(f"no check matches filter '{args.filter}'")

    print(f"{'group':<12} {'check':<26} {'status':<6} {'measured':>10} {'tolerance':>10}")
    for check in summary.checks:
        measured = "" if check.measured is None else f"{check.measured:.2e}"
        tolerance = "" if check.tolerance is None else f"{check.tolerance:.0e}"
        status = "PASS" if check.passed else "FAIL"
        print(f"{check.group:<12} {check.name:<26} {status:<6} {measured:>10} {tolerance:>10}")
        if not check.passed and check.detail:
            print(f"{'':<12} {check.detail}")

    print(f"{summary.passed} passed, {summary.failed} failed")
    if summary.failed:
        print("failed: " + ", ".join(c.name for c in summary.checks if not c.passed))
    return EXIT_OK if summary.ok else EXIT_FAILURE


def cmd_verify(args) -> int:
    """Run the verification suite"""
    return _run(_cmd_verify, args)
