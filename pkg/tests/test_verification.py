"""
Tests for the verification suite
"""

import pytest

from app.services.verification import VerificationSuite


@pytest.mark.parametrize("group", ["special", "quadrature", "operator", "solver", "convergence"])
def test_group_passes(group):
    summary = VerificationSuite().run(only=group)
    failed = [(c.name, c.measured, c.detail) for c in summary.checks if not c.passed]
    assert summary.checks
    assert all(c.group == group for c in summary.checks)
    assert not failed
    assert summary.ok


def test_filter_by_check_name():
    summary = VerificationSuite().run(only="pseudo_eigen")
    assert [c.name for c in summary.checks] == ["pseudo_eigen_left", "pseudo_eigen_right"]


def test_unknown_filter_runs_nothing():
    summary = VerificationSuite().run(only="nothing-matches")
    assert summary.checks == []
    assert summary.passed == summary.failed == 0


def test_injected_eigenvalue_error_is_caught():
    summary = VerificationSuite(eigenvalue_scale=1.0 + 1e-6).run(only="operator")
    failed = {c.name for c in summary.checks if not c.passed}
    assert failed == {"pseudo_eigen_left", "pseudo_eigen_right"}
    assert not summary.ok


def test_crashing_check_is_reported(monkeypatch):
    suite = VerificationSuite()

    def crash():
        raise RuntimeError("broken")

    monkeypatch.setattr(suite, "check_kernel", crash)
    summary = suite.run(only="kernel")
    (result,) = summary.checks
    assert not result.passed
    assert "RuntimeError: broken" in result.detail
