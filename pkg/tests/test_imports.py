"""
Smoke test: every module imports
"""


def test_core_imports():
    from app.core.config import settings
    from app.core.exceptions import SpectralError

    assert settings.DEFAULT_REF_N == 512
    assert issubclass(SpectralError, Exception)


def test_service_imports():
    from app.services import convergence, operator, quadrature, rhs, solver, special, study_executor, verification

    assert callable(solver.solve)
    assert callable(convergence.run_study)
    assert study_executor.StudyExecutor
    assert verification.VerificationSuite
    assert special.jacobi_eval and quadrature.gauss_jacobi and operator.solve_sigma and rhs.resolve_rhs


def test_cli_imports():
    from main import build_parser

    parser = build_parser()
    assert parser.prog == "fracspec"
