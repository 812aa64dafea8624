"""
Tests for the async study executor
"""

import pytest

from app.schemas.solution import Method
from app.schemas.study import StudyConfig
from app.services import study_executor
from app.services.rhs import unregister_custom_rhs
from app.services.study_executor import StudyExecutor, expand_cells


def _config(**overrides):
    values = dict(
        methods=[Method.PETROV_GALERKIN, Method.GALERKIN],
        alphas=[1.4, 1.6],
        thetas=[0.5, 0.7],
        Ns=[4, 8],
        ref_N=24,
    )
    values.update(overrides)
    return StudyConfig(**values)


def test_cell_order():
    cells = expand_cells(_config())
    assert len(cells) == 8
    assert [(c.method, c.theta, c.alpha) for c in cells[:3]] == [
        (Method.PETROV_GALERKIN, 0.5, 1.4),
        (Method.PETROV_GALERKIN, 0.5, 1.6),
        (Method.PETROV_GALERKIN, 0.7, 1.4),
    ]


@pytest.mark.asyncio
async def test_validation_warns_on_low_reference():
    validation = await StudyExecutor().validate_study(_config())
    assert validation.is_valid
    assert validation.cell_count == 8
    assert validation.warnings


@pytest.mark.asyncio
async def test_validation_rejects_unknown_rhs():
    validation = await StudyExecutor().validate_study(_config(rhs="missing"))
    assert not validation.is_valid
    assert len(validation.errors) == 8


@pytest.mark.asyncio
async def test_parallel_study_matches_serial():
    config = _config()
    serial = await StudyExecutor(jobs=1).execute_study(config)
    parallel = await StudyExecutor(jobs=4).execute_study(config)

    assert serial["status"] == parallel["status"] == "completed"
    assert [r.model_dump() for r in serial["reports"]] == [r.model_dump() for r in parallel["reports"]]
    assert len(parallel["execution_log"]) == 8


@pytest.mark.asyncio
async def test_invalid_study_runs_nothing():
    outcome = await StudyExecutor().execute_study(_config(rhs="missing"))
    assert outcome["status"] == "failed"
    assert outcome["reports"] == []
    assert outcome["errors"]


@pytest.mark.asyncio
async def test_failed_cell_is_reported(monkeypatch):
    original = study_executor.run_study

    def flaky(cell, cache=None):
        if cell.alpha == 1.6:
            raise RuntimeError("boom")
        return original(cell, cache)

    monkeypatch.setattr(study_executor, "run_study", flaky)
    outcome = await StudyExecutor(jobs=2).execute_study(_config(methods=[Method.PETROV_GALERKIN], thetas=[0.5]))

    statuses = [r.status for r in outcome["reports"]]
    assert statuses == ["completed", "failed"]
    assert outcome["reports"][1].error == "boom"
    assert outcome["status"] == "failed"
    assert outcome["errors"] == ["boom"]


@pytest.mark.asyncio
async def test_custom_rhs_registered_from_config():
    config = _config(
        rhs="ramp",
        methods=[Method.PETROV_GALERKIN],
        alphas=[1.4],
        thetas=[0.7],
        custom_rhs=[{"name": "ramp", "kinks": [0.25], "terms": [{"kind": "polynomial", "coefficients": [0.0, 1.0]}]}],
    )
    try:
        outcome = await StudyExecutor().execute_study(config)
    finally:
        unregister_custom_rhs("ramp")
    assert outcome["status"] == "completed"
    assert outcome["reports"][0].rhs == "ramp"
