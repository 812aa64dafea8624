"""
Tests for the command-line entry point
"""

import csv
import json

import pytest

from app.schemas.solution import SolutionRecord
from app.services.solver import SpectralSolution
from main import main


class TestSigma:
    @pytest.mark.parametrize(
        "alpha,theta,expected",
        [
            ("1.6", "0.5", "sigma=0.8 sigma_star=0.8"),
            ("1.4", "0", "sigma=0.4 sigma_star=1"),
        ],
    )
    def test_closed_forms(self, capsys, alpha, theta, expected):
        assert main(["sigma", "--alpha", alpha, "--theta", theta]) == 0
        assert capsys.readouterr().out.strip() == expected

    def test_fixed_decimals(self, capsys):
        assert main(["sigma", "--alpha", "1.8", "--theta", "0.7", "--decimals", "4"]) == 0
        assert capsys.readouterr().out.strip() == "sigma=0.9411 sigma_star=0.8589"

    def test_out_of_range(self, capsys):
        assert main(["sigma", "--alpha", "2.5", "--theta", "0.5"]) == 2
        assert "alpha" in capsys.readouterr().out


class TestSolve:
    def test_writes_record(self, tmp_path, capsys):
        out = tmp_path / "u.json"
        code = main(["solve", "--method", "galerkin", "--alpha", "1.4", "--theta", "0.7", "--N", "32",
                     "--out", str(out)])
        assert code == 0
        text = capsys.readouterr().out
        assert "u(-1)=0 u(1)=0" in text

        record = SolutionRecord.model_validate_json(out.read_text())
        assert record.N == 32
        assert len(record.coefficients) == 33
        sol = SpectralSolution.from_record(record)
        assert sol.params.sigma == pytest.approx(0.8602, abs=1e-4)

    def test_manufactured(self, tmp_path):
        out = tmp_path / "eigen.json"
        code = main(["solve", "--alpha", "1.5", "--theta", "1", "--mu", "0", "--rhs", "eigen:2", "--N", "4",
                     "--out", str(out)])
        assert code == 0
        coefficients = json.loads(out.read_text())["coefficients"]
        assert coefficients == pytest.approx([0.0, 0.0, 1.0, 0.0, 0.0], abs=1e-10)

    def test_degree_zero(self, tmp_path):
        out = tmp_path / "n0.json"
        assert main(["solve", "--alpha", "1.4", "--theta", "0.5", "--N", "0", "--out", str(out)]) == 0
        assert len(json.loads(out.read_text())["coefficients"]) == 1

    def test_unknown_rhs(self, tmp_path):
        assert main(["solve", "--alpha", "1.4", "--theta", "0.5", "--N", "4", "--rhs", "nope",
                     "--out", str(tmp_path / "x.json")]) == 2

    def test_custom_rhs_from_config(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "custom_rhs": [{"name": "cli-ramp", "terms": [{"kind": "polynomial", "coefficients": [0.0, 1.0]}]}]
        }))
        out = tmp_path / "ramp.json"
        code = main(["solve", "--alpha", "1.4", "--theta", "0.7", "--N", "8", "--rhs", "cli-ramp",
                     "--config", str(config), "--out", str(out)])
        assert code == 0
        assert out.exists()


class TestConverge:
    ARGS = ["converge", "--method", "pg", "--alpha", "1.4", "--theta", "0.5", "--Ns", "8", "16", "--ref-N", "64"]

    def test_writes_both_formats(self, tmp_path, capsys):
        out = tmp_path / "report"
        assert main(self.ARGS + ["--format", "both", "--out", str(out)]) == 0
        printed = capsys.readouterr().out
        assert "averaged order" in printed

        rows = list(csv.reader((tmp_path / "report.csv").open()))
        assert rows[0][:3] == ["method", "alpha", "theta"]
        reports = json.loads((tmp_path / "report.json").read_text())
        assert reports[0]["rows"][0]["N"] == 8

    def test_repeatable_output(self, tmp_path):
        for name in ("a", "b"):
            assert main(self.ARGS + ["--format", "json", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_config_file(self, tmp_path):
        config = tmp_path / "study.json"
        config.write_text(json.dumps({"alphas": [1.6], "thetas": [0.7], "Ns": [4, 8], "ref_N": 32,
                                      "methods": ["galerkin"], "error_metric": "E2"}))
        assert main(["converge", "--config", str(config), "--out", str(tmp_path / "r")]) == 0
        rows = list(csv.reader((tmp_path / "r.csv").open()))
        assert rows[1][0] == "galerkin"
        assert rows[1][6] == "E2"

    def test_empty_degree_list(self, tmp_path):
        assert main(["converge", "--alpha", "1.4", "--theta", "0.5", "--Ns", "--out", str(tmp_path / "r")]) == 2

    def test_non_doubling_degrees(self, tmp_path):
        assert main(["converge", "--alpha", "1.4", "--theta", "0.5", "--Ns", "8", "12",
                     "--out", str(tmp_path / "r")]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["converge", "--config", str(tmp_path / "absent.json")]) == 2


class TestVerify:
    def test_filtered_group(self, capsys):
        assert main(["verify", "--filter", "quadrature"]) == 0
        text = capsys.readouterr().out
        assert "4 passed, 0 failed" in text
        assert "special" not in text

    def test_fault_injection(self, capsys):
        assert main(["verify", "--filter", "pseudo_eigen", "--inject-eigenvalue-error", "1e-6"]) == 1
        text = capsys.readouterr().out
        assert "failed: pseudo_eigen_left, pseudo_eigen_right" in text

    def test_filter_matching_nothing(self):
        assert main(["verify", "--filter", "nothing-matches"]) == 2
