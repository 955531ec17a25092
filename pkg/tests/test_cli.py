import json

import numpy as np
import pytest

from src.__main__ import build_parser, main, parse_vector
from src.executor import CommandExecutor
from src.report.builder import new_report
from src.report.schemas import Report, SensitivityModel
from tests.conftest import fixture_file


def _run(capsys, *argv) -> tuple[int, Report]:
    code = main(list(argv))
    return code, Report.model_validate_json(capsys.readouterr().out)


@pytest.mark.parametrize(
    "text, expected",
    [("p=[1, 2]", [1.0, 2.0]), ("h=-1", [-1.0]), ("[0.5,0]", [0.5, 0.0]), ("3,4", [3.0, 4.0])],
)
def test_parse_vector(text, expected):
    assert parse_vector(text) == expected


def test_diff_on_regular_problem(capsys):
    code, report = _run(capsys, "diff", "p1")
    assert code == 0
    assert report.exit_code == 0
    assert report.error is None
    assert report.sensitivity.regime == "fiacco"
    assert np.allclose(report.sensitivity.jac_x, [[0.5], [0.5]])
    assert report.cq.licq and report.cq.scs
    assert report.sensitivity.details["system"]["active"] == []
    assert report.sensitivity.details["system"]["size"] == 3


def test_diff_on_degenerate_problem_is_not_certified(capsys):
    code, report = _run(capsys, "diff", "p3")
    assert code == 2
    assert report.error.type == "RegularityNotCertifiedError"
    assert "LICQ" in report.error.details["failed"]
    assert report.cq is not None


def test_degenerate_pipeline_succeeds_where_diff_refuses(capsys):
    code, report = _run(capsys, "diff", "p3", "--degenerate", "--direction", "h=[1]")
    assert code == 0
    assert report.directional[0].regime == "degenerate"
    assert report.directional[0].dx == pytest.approx([0.0], abs=1e-8)


def test_directional_at_kink(capsys):
    code, report = _run(capsys, "directional", "p2", "--at", "p=[1]", "--direction", "h=[-1]")
    assert code == 0
    assert report.directional[0].dx == pytest.approx([-1.0], abs=1e-6)


def test_value_of_p1(capsys):
    code, report = _run(capsys, "value", "p1")
    assert code == 0
    assert report.value.gradient == pytest.approx([0.5], abs=1e-8)
    assert np.allclose(report.value.hessian, [[0.5]], atol=1e-8)


def test_path_across_kink(capsys):
    code, report = _run(capsys, "path", "p2", "--to", "p=[1.5]", "--steps", "5")
    assert code == 0
    assert report.path.completed
    assert len(report.path.active_set_changes) == 1
    assert report.path.endpoint_error <= 1e-6


def test_conic_diff_uses_file_perturbation(capsys):
    code, report = _run(capsys, "conic-diff", "c2.json")
    assert code == 0
    assert report.conic.dx == pytest.approx([1.0, 1.0, 0.0], abs=1e-8)
    assert report.conic.kkt_residual == pytest.approx(0.0, abs=1e-12)


def test_conic_diff_jacobian_in_b(capsys):
    code, report = _run(capsys, "conic-diff", str(fixture_file("c1.json")))
    assert code == 0
    assert np.allclose(report.conic.jac_x_b, [[0.0], [1.0]], atol=1e-8)


def test_missing_problem_is_an_input_error(capsys):
    assert main(["diff", "no-such-problem"]) == 1
    assert "no-such-problem" in capsys.readouterr().err


def test_bad_usage_is_an_input_error(capsys):
    assert main(["frobnicate"]) == 1
    assert main(["diff", "p1", "--at", "p=[x]"]) == 1


def test_input_errors_are_reported(tmp_path, capsys):
    bad = tmp_path / "bad.nlp"
    bad.write_text("vars x1\nparams p1\nminimize x1 + q\n")
    code, report = _run(capsys, "solve", str(bad))
    assert code == 1
    assert report.error.type == "UndeclaredIdentifierError"
    assert report.error.details["line"] == 3


def test_plain_summary_instead_of_json(capsys):
    assert main(["analyze", "p1", "--no-json"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("sensikit")
    with pytest.raises(json.JSONDecodeError):
        json.loads(out)


def test_report_is_deterministic_apart_from_timing():
    executor = CommandExecutor()
    first, _ = executor.run("diff", str(fixture_file("p1.nlp")))
    second, _ = executor.run("diff", str(fixture_file("p1.nlp")))
    assert first.model_dump(exclude={"wall_time"}) == second.model_dump(exclude={"wall_time"})


def test_unknown_command_is_rejected():
    with pytest.raises(ValueError):
        CommandExecutor().run("explode", str(fixture_file("p1.nlp")))


def test_every_command_has_a_subparser():
    parser = build_parser()
    for command in ("solve", "analyze", "diff", "directional", "value", "path", "conic-diff", "oracle"):
        assert parser.parse_args([command, "p1"]).command == command


def test_analyze_reports_failed_licq_without_failing(capsys):
    code, report = _run(capsys, "analyze", "p3", "--at", "p=[2]")
    assert code == 0
    assert not report.cq.licq
    assert report.cq.mfcq
    assert report.cq.n_vertices == 2


def test_diff_report_serializes_to_json():
    report, code = CommandExecutor().run("diff", str(fixture_file("p1.nlp")))
    assert code == 0
    data = json.loads(report.model_dump_json())
    assert data["sensitivity"]["details"]["system"]["condition"] >= 1.0


def test_unserializable_report_is_an_input_error(monkeypatch, capsys):
    class _Executor:
        def run(self, command, problem, **options):
            report = new_report("p1", command)
            report.sensitivity = SensitivityModel(
                regime="fiacco", jac_x=[[0.0]], jac_y=[], jac_z=[], details={"raw": object()}
            )
            return report, 0

    monkeypatch.setattr("src.__main__.CommandExecutor", _Executor)
    assert main(["diff", "p1"]) == 1
    assert "not serializable" in capsys.readouterr().err
