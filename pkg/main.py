#!/usr/bin/env python3
"""
fracspec - spectral Galerkin / Petrov-Galerkin solver for two-sided
fractional reaction-diffusion problems on (-1, 1)
"""

import argparse
import sys
from typing import List, Optional

from app.cli.commands import cmd_converge, cmd_sigma, cmd_solve, cmd_verify
from app.core.config import settings
from app.core.logging import configure_logging

METHOD_CHOICES = ["galerkin", "pg", "petrov-galerkin"]


def _add_problem_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mu", type=float, default=None, help=f"reaction coefficient (default {settings.DEFAULT_MU})")
    parser.add_argument("--rhs", default=None, help="sin | abs-sin | jacobi-weighted:<beta> | eigen:<m> | custom name")
    parser.add_argument("--quad-points", dest="quad_points", type=int, default=None,
                        help="rhs quadrature size (default max(2N, 128))")
    parser.add_argument("--config", default=None, help="JSON config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracspec", description=__doc__.strip())
    parser.add_argument("--log-level", dest="log_level", default=None, help=f"default {settings.LOG_LEVEL}")
    parser.add_argument("--log-format", dest="log_format", choices=["console", "json"], default=None)
    parser.add_argument("--version", action="version", version=f"{settings.APP_NAME} {settings.VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    sigma = sub.add_parser("sigma", help="solve the exponent equation for (sigma, sigma*)")
    sigma.add_argument("--alpha", type=float, required=True)
    sigma.add_argument("--theta", type=float, required=True)
    sigma.add_argument(
        "--decimals", type=int, default=None, help="fixed-decimal display (default 15 significant digits)"
    )
    sigma.set_defaults(handler=cmd_sigma)

    solve = sub.add_parser("solve", help="solve one problem and write the solution record")
    solve.add_argument("--method", choices=METHOD_CHOICES, default="pg")
    solve.add_argument("--alpha", type=float, required=True)
    solve.add_argument("--theta", type=float, required=True)
    solve.add_argument("--N", type=int, required=True)
    solve.add_argument("--out", default=None, help="solution JSON path")
    _add_problem_flags(solve)
    solve.set_defaults(handler=cmd_solve)

    converge = sub.add_parser("converge", help="run a convergence study")
    converge.add_argument("--method", nargs="+", choices=METHOD_CHOICES, default=None)
    converge.add_argument("--alpha", type=float, default=None)
    converge.add_argument("--alphas", type=float, nargs="+", default=None)
    converge.add_argument("--theta", type=float, default=None)
    converge.add_argument("--thetas", type=float, nargs="+", default=None)
    converge.add_argument("--N", type=int, default=None)
    converge.add_argument("--Ns", type=int, nargs="*", default=None)
    converge.add_argument("--ref-N", dest="ref_N", type=int, default=None,
                          help=f"reference degree (default {settings.DEFAULT_REF_N})")
    converge.add_argument("--reference-method", dest="reference_method", choices=METHOD_CHOICES, default=None)
    converge.add_argument("--error", choices=["E1", "E2"], default=None)
    converge.add_argument("--format", choices=["csv", "json", "both"], default=None)
    converge.add_argument("--out", default=None, help="report path without suffix")
    converge.add_argument("--jobs", type=int, default=None)
    _add_problem_flags(converge)
    converge.set_defaults(handler=cmd_converge)

    verify = sub.add_parser("verify", help="run the verification suite")
    verify.add_argument("--filter", default=None, help="group name or check-name substring")
    verify.add_argument("--inject-eigenvalue-error", dest="inject_eigenvalue_error", type=float,
                        default=None, help=argparse.SUPPRESS)
    verify.set_defaults(handler=cmd_verify)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, args.log_format)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
