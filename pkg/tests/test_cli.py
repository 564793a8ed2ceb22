"""Tests for scenario loading, the suite runner, and the CLI entry point."""

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from monotonelab import NormedSpace, ScenarioError
from monotonelab.cli import main
from monotonelab.runner import run_suite
from monotonelab.scenario import load_scenario

FIXTURES = [
    "e1_abs",
    "e2_two_slope",
    "e3_box_cone",
    "e4_rotation",
    "e5_affine",
    "e6_sum",
]

NEGATIVE_FIXTURE = Path(__file__).parent / "data" / "negative_sigma.json"


def fixture_path(name):
    return str(resources.files("monotonelab").joinpath(f"fixtures/{name}.json"))


def write_scenario(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def minimal_doc(**kwargs):
    doc = {
        "name": "minimal",
        "space": {"n": 1, "p": 2.0},
        "operators": [
            {
                "name": "absf",
                "kind": "subdiff_poly",
                "slopes": [[-1.0], [1.0]],
                "intercepts": [0.0, 0.0],
            }
        ],
        "checks": [
            {"theorem": "representation", "operator": "absf", "point": [0.0]}
        ],
    }
    doc.update(kwargs)
    return doc


# ----------------------------------------------------------------------
# Scenario loading
# ----------------------------------------------------------------------


class TestLoadScenario:
    @pytest.mark.parametrize("name", FIXTURES)
    def test_shipped_fixtures_load(self, name):
        s = load_scenario(fixture_path(name))
        assert s.name == name
        assert isinstance(s.space, NormedSpace)
        assert len(s.checks) >= 2
        for check in s.checks:
            assert check.operator in s.operators

    def test_e1_contents(self):
        s = load_scenario(fixture_path("e1_abs"))
        assert len(s.operators) == 1
        theorems = [c.theorem for c in s.checks]
        assert theorems == ["representation", "support_formula"]
        np.testing.assert_array_equal(s.checks[0].point, [0.0])
        np.testing.assert_array_equal(s.checks[1].direction, [1.0])
        assert s.checks[1].expected == 1.0

    def test_expected_inf_parsed(self):
        s = load_scenario(fixture_path("e3_box_cone"))
        by_id = {c.check_id: c for c in s.checks}
        assert by_id["support_corner_outward"].expected == math.inf

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read"):
            load_scenario(str(tmp_path / "absent.json"))

    def test_parse_error_has_location(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"name": "x",}', encoding="utf-8")
        with pytest.raises(ScenarioError, match=r"line 1, column"):
            load_scenario(str(path))

    def test_p_out_of_range(self, tmp_path):
        doc = minimal_doc(space={"n": 1, "p": 1.0})
        with pytest.raises(ScenarioError, match=r"p must lie in \(1, ∞\)"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_schema_rejects_unknown_theorem(self, tmp_path):
        doc = minimal_doc()
        doc["checks"][0]["theorem"] = "unknown_theorem"
        with pytest.raises(ScenarioError, match="checks.0.theorem"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_check_dimension_mismatch_names_index(self, tmp_path):
        doc = minimal_doc()
        doc["checks"][0]["point"] = [0.0, 1.0]
        with pytest.raises(ScenarioError, match=r"checks\[0\]\.point"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_unknown_operator_reference(self, tmp_path):
        doc = minimal_doc()
        doc["checks"][0]["operator"] = "ghost"
        with pytest.raises(ScenarioError, match=r"checks\[0\]\.operator"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_duplicate_operator_name(self, tmp_path):
        doc = minimal_doc()
        doc["operators"].append(dict(doc["operators"][0]))
        with pytest.raises(ScenarioError, match="duplicate name"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_sum_forward_reference_rejected(self, tmp_path):
        doc = minimal_doc()
        doc["operators"] = [
            {"name": "total", "kind": "sum", "parts": ["absf"]},
            doc["operators"][0],
        ]
        with pytest.raises(ScenarioError, match=r"operators\[0\].*parts"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_missing_required_check_field(self, tmp_path):
        doc = minimal_doc()
        doc["checks"] = [{"theorem": "face_inclusion", "operator": "absf", "point": [0.0]}]
        with pytest.raises(ScenarioError, match=r"checks\[0\]\.direction"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_expected_only_on_support_formula(self, tmp_path):
        doc = minimal_doc()
        doc["checks"][0]["expected"] = 1.0
        with pytest.raises(ScenarioError, match=r"checks\[0\]\.expected"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_zero_direction_rejected(self, tmp_path):
        doc = minimal_doc()
        doc["checks"] = [
            {
                "theorem": "support_formula",
                "operator": "absf",
                "point": [0.0],
                "direction": [0.0],
            }
        ]
        with pytest.raises(ScenarioError, match="nonzero"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_duplicate_check_id(self, tmp_path):
        doc = minimal_doc()
        doc["checks"] = [
            {"id": "a", "theorem": "representation", "operator": "absf", "point": [0.0]},
            {"id": "a", "theorem": "representation", "operator": "absf", "point": [0.0]},
        ]
        with pytest.raises(ScenarioError, match="duplicate id"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_construction_error_names_operator(self, tmp_path):
        doc = minimal_doc()
        # not positive semidefinite: fails the construction certificate
        doc["operators"] = [
            {"name": "bad", "kind": "linear", "matrix": [[-1.0]]}
        ]
        doc["checks"] = [
            {"theorem": "representation", "operator": "bad", "point": [0.0]}
        ]
        with pytest.raises(ScenarioError, match=r"operators\[0\] \(bad\)"):
            load_scenario(write_scenario(tmp_path, doc))

    def test_default_ids_and_seed(self, tmp_path):
        doc = minimal_doc()
        s = load_scenario(write_scenario(tmp_path, doc))
        assert s.checks[0].check_id == "check_000"
        assert s.seed == 0 and s.output_dir is None


# ----------------------------------------------------------------------
# Runner
# ----------------------------------------------------------------------


class TestRunSuite:
    def test_e1_artifacts(self, tmp_path):
        s = load_scenario(fixture_path("e1_abs"))
        code = run_suite(s, out_dir=tmp_path / "out", plots=True)
        assert code == 0
        out = tmp_path / "out"
        assert (out / "aggregate.csv").exists()
        assert (out / "summary.txt").exists()
        assert (out / "checks" / "rep_origin.json").exists()
        assert (out / "checks" / "support_plus.json").exists()
        assert (out / "figures" / "summary.png").exists()
        assert (out / "figures" / "support_plus.png").exists()
        summary = (out / "summary.txt").read_text()
        assert "PASS=2" in summary and "FAIL=0" in summary
        assert "exit: 0" in summary

    def test_check_json_echoes_parameters(self, tmp_path):
        s = load_scenario(fixture_path("e1_abs"))
        run_suite(s, out_dir=tmp_path, plots=False)
        doc = json.loads((tmp_path / "checks" / "support_plus.json").read_text())
        assert doc["scenario"] == "e1_abs"
        assert doc["seed"] == 1000  # base 0 + 1000 * index 1
        assert doc["params"]["sf_tol"] == 1e-3
        assert doc["params"]["expected"] == 1.0
        assert doc["params"]["t_levels"][0] == 4
        assert doc["report"]["status"] == "PASS"

    def test_csv_bytes_identical_across_reruns(self, tmp_path):
        s = load_scenario(fixture_path("e2_two_slope"))
        run_suite(s, out_dir=tmp_path / "a", plots=False)
        run_suite(s, out_dir=tmp_path / "b", plots=False)
        a = (tmp_path / "a" / "aggregate.csv").read_bytes()
        b = (tmp_path / "b" / "aggregate.csv").read_bytes()
        assert a == b
        assert (tmp_path / "a" / "summary.txt").read_bytes() == (
            tmp_path / "b" / "summary.txt"
        ).read_bytes()

    def test_jobs_do_not_change_artifacts(self, tmp_path):
        s = load_scenario(fixture_path("e6_sum"))
        run_suite(s, out_dir=tmp_path / "serial", jobs=1, plots=False)
        run_suite(s, out_dir=tmp_path / "parallel", jobs=4, plots=False)
        assert (tmp_path / "serial" / "aggregate.csv").read_bytes() == (
            tmp_path / "parallel" / "aggregate.csv"
        ).read_bytes()

    def test_seed_override_changes_echo(self, tmp_path):
        s = load_scenario(fixture_path("e1_abs"))
        run_suite(s, out_dir=tmp_path, seed=7, plots=False)
        doc = json.loads((tmp_path / "checks" / "rep_origin.json").read_text())
        assert doc["seed"] == 7

    def test_aggregate_has_level_rows_and_final_row(self, tmp_path):
        s = load_scenario(fixture_path("e1_abs"))
        run_suite(s, out_dir=tmp_path, plots=False)
        lines = (tmp_path / "aggregate.csv").read_text().splitlines()
        assert lines[0] == "scenario,check_id,theorem_id,level,value,gap,tolerance,status"
        support_rows = [l for l in lines if ",support_plus," in l]
        # one row per t level plus the final summary row
        assert len(support_rows) == 26 + 1
        assert support_rows[-1].split(",")[3] == "-1"
        for line in lines[1:]:
            fields = line.split(",")
            assert fields[6] != ""  # every row carries its tolerance

    def test_negative_control_fails(self, tmp_path):
        s = load_scenario(str(NEGATIVE_FIXTURE))
        code = run_suite(s, out_dir=tmp_path, plots=False)
        assert code == 1
        lines = (tmp_path / "aggregate.csv").read_text().splitlines()
        final_fail = [
            l for l in lines if l.endswith("FAIL") and l.split(",")[3] == "-1"
        ]
        assert len(final_fail) == 1
        doc = json.loads((tmp_path / "checks" / "support_plus.json").read_text())
        assert doc["report"]["details"]["reason"] == "expected_mismatch"
        assert doc["report"]["details"]["expected"] == 2.5

    def test_empty_checks_warns_and_exits_zero(self, tmp_path, capsys):
        s = load_scenario(write_scenario(tmp_path, minimal_doc(checks=[])))
        code = run_suite(s, out_dir=tmp_path / "out", plots=False)
        assert code == 0
        assert "no checks" in capsys.readouterr().err
        lines = (tmp_path / "out" / "aggregate.csv").read_text().splitlines()
        assert len(lines) == 1  # header only

    def test_hypothesis_violation_row_does_not_fail_run(self, tmp_path):
        doc = minimal_doc()
        # dual point far outside the value set at x: premise fails
        doc["checks"] = [
            {
                "id": "bad_dual",
                "theorem": "lower_bound",
                "operator": "absf",
                "point": [0.0],
                "direction": [1.0],
                "dual_point": [5.0],
            }
        ]
        s = load_scenario(write_scenario(tmp_path, doc))
        code = run_suite(s, out_dir=tmp_path / "out", plots=False)
        assert code == 0
        summary = (tmp_path / "out" / "summary.txt").read_text()
        assert "HYPOTHESIS_VIOLATION=1" in summary
        doc_out = json.loads((tmp_path / "out" / "checks" / "bad_dual.json").read_text())
        assert doc_out["report"]["status"] == "HYPOTHESIS_VIOLATION"
        assert "error" in doc_out["report"]["details"]

    def test_trajectory_outside_domain_is_hypothesis_violation(self, tmp_path):
        doc = minimal_doc()
        doc["operators"] = [
            {"name": "cone", "kind": "normal_cone", "box": {"lower": [0.0], "upper": [1.0]}}
        ]
        doc["checks"] = [
            {"id": "t", "theorem": "trajectory", "operator": "cone", "point": [2.0]}
        ]
        s = load_scenario(write_scenario(tmp_path, doc))
        code = run_suite(s, out_dir=tmp_path / "out", plots=False)
        assert code == 0
        rep = json.loads((tmp_path / "out" / "checks" / "t.json").read_text())["report"]
        assert rep["status"] == "HYPOTHESIS_VIOLATION"

    def test_truncated_trajectory_fails(self, tmp_path):
        doc = minimal_doc()
        doc["operators"] = [
            {"name": "affine", "kind": "linear", "matrix": [[1.0]], "shift": [1.0]}
        ]
        # terminal gap at lam=0.5 is 1/3, far above the tolerance
        doc["checks"] = [
            {
                "id": "t",
                "theorem": "trajectory",
                "operator": "affine",
                "point": [0.0],
                "overrides": {"lambda_schedule": [0.5]},
            }
        ]
        s = load_scenario(write_scenario(tmp_path, doc))
        code = run_suite(s, out_dir=tmp_path / "out", plots=False)
        assert code == 1
        rep = json.loads((tmp_path / "out" / "checks" / "t.json").read_text())["report"]
        assert rep["status"] == "FAIL"
        assert abs(rep["max_gap"] - 1.0 / 3.0) < 1e-9

    def test_exact_flag_tightens_tolerance(self, tmp_path):
        s = load_scenario(fixture_path("e1_abs"))
        code = run_suite(s, out_dir=tmp_path, exact=True, plots=False)
        assert code == 0
        doc = json.loads((tmp_path / "checks" / "rep_origin.json").read_text())
        assert doc["params"]["mode"] == "exact"
        assert doc["params"]["rep_tol"] == 1e-6

    def test_tol_scale_applied(self, tmp_path):
        s = load_scenario(fixture_path("e1_abs"))
        run_suite(s, out_dir=tmp_path, tol_scale=10.0, plots=False)
        doc = json.loads((tmp_path / "checks" / "rep_origin.json").read_text())
        assert doc["params"]["rep_tol"] == pytest.approx(1e-2)
        assert doc["report"]["tolerance"] == pytest.approx(1e-2)

    def test_invalid_runner_args(self, tmp_path):
        s = load_scenario(fixture_path("e1_abs"))
        with pytest.raises(ScenarioError):
            run_suite(s, out_dir=tmp_path, tol_scale=0.0)
        with pytest.raises(ScenarioError):
            run_suite(s, out_dir=tmp_path, jobs=0)
        with pytest.raises(ScenarioError, match="output directory"):
            run_suite(load_scenario(write_scenario(tmp_path, minimal_doc())))


# ----------------------------------------------------------------------
# CLI entry point
# ----------------------------------------------------------------------


class TestMain:
    def test_fixture_run_exits_zero(self, tmp_path):
        code = main(
            [
                "--scenario",
                fixture_path("e1_abs"),
                "--out",
                str(tmp_path),
                "--no-plots",
            ]
        )
        assert code == 0
        assert (tmp_path / "aggregate.csv").exists()
        assert not (tmp_path / "figures").exists()

    def test_negative_fixture_exits_one(self, tmp_path):
        code = main(
            ["--scenario", str(NEGATIVE_FIXTURE), "--out", str(tmp_path), "--no-plots"]
        )
        assert code == 1

    def test_bad_scenario_exits_two(self, tmp_path, capsys):
        code = main(["--scenario", str(tmp_path / "missing.json")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_invalid_p_exits_two(self, tmp_path, capsys):
        path = write_scenario(tmp_path, minimal_doc(space={"n": 1, "p": 1.0}))
        code = main(["--scenario", path, "--out", str(tmp_path / "out")])
        assert code == 2
        assert "p must lie in" in capsys.readouterr().err

    def test_exact_dimension_guard(self, tmp_path, capsys):
        doc = {
            "name": "big",
            "space": {"n": 4, "p": 2.0},
            "operators": [{"name": "jmap", "kind": "duality_map"}],
            "checks": [
                {
                    "theorem": "representation",
                    "operator": "jmap",
                    "point": [0.0, 0.0, 0.0, 0.0],
                }
            ],
        }
        path = write_scenario(tmp_path, doc)
        code = main(["--scenario", path, "--out", str(tmp_path / "out"), "--exact"])
        assert code == 2
        assert "n <= 3" in capsys.readouterr().err

    def test_out_required_when_scenario_has_none(self, tmp_path, capsys):
        path = write_scenario(tmp_path, minimal_doc())
        code = main(["--scenario", path])
        assert code == 2
        assert "output directory" in capsys.readouterr().err

    def test_bad_flag_values(self, capsys):
        assert main(["--scenario", "x.json", "--tol-scale", "0"]) == 2
        assert main(["--scenario", "x.json", "--jobs", "0"]) == 2
