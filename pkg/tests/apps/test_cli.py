from __future__ import annotations

import csv
import io
import json

import pytest

from apps.cli.main import build_parser, main, run_config
from packages.core.hybrid.constructors import make_uncoded
from packages.shared.models import canned
from packages.shared.store import save_model, save_scheme


def _rows(path):
    return list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))


def test_rd_writes_csv(tmp_path):
    out = tmp_path / "rd.csv"
    assert main(["rd", "--model", "dsbs-0.25", "--grid", "5", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["D", "R", "slope"]
    assert len(rows) == 6
    assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-4)
    assert float(rows[-1][1]) == pytest.approx(0.0, abs=1e-6)


def test_cond_rd_starts_at_conditional_entropy(tmp_path):
    out = tmp_path / "cond.csv"
    assert main(["cond-rd", "--grid", "5", "--user", "2", "--out", str(out)]) == 0
    rows = _rows(out)
    assert float(rows[1][0]) == pytest.approx(0.0)
    assert float(rows[1][1]) == pytest.approx(2 / 3, abs=1e-3)


def test_capacity_inner_csv(tmp_path):
    out = tmp_path / "cap.csv"
    assert main(["capacity", "--model", "crossover", "--resolution", "5", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["kind", "x", "y"]
    assert {kind for kind, _, _ in rows[1:]} <= {"point", "hull"}
    hull = [(float(x), float(y)) for kind, x, y in rows[1:] if kind == "hull"]
    assert max(x for x, _ in hull) == pytest.approx(1.0, abs=1e-9)
    assert max(y for _, y in hull) == pytest.approx(1.0, abs=1e-9)


def test_capacity_both_reports_gap(tmp_path, capsys):
    out = tmp_path / "cap.csv"
    code = main(["capacity", "--model", "crossover", "--bound", "both", "--resolution", "5", "--restarts", "1", "--out", str(out)])
    assert code == 0
    outer = tmp_path / "cap.outer.csv"
    assert _rows(out)[0] == ["kind", "x", "y"]
    assert _rows(outer)[0] == ["kind", "x", "y"]
    assert any(row[0] == "hull" for row in _rows(outer)[1:])
    assert "coincide=True" in capsys.readouterr().err


def test_capacity_outer_only_writes_the_out_path(tmp_path):
    out = tmp_path / "outer.csv"
    code = main(["capacity", "--model", "crossover", "--bound", "outer", "--resolution", "5", "--restarts", "1", "--out", str(out)])
    assert code == 0
    assert _rows(out)[0] == ["kind", "x", "y"]
    assert not (tmp_path / "outer.outer.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["rd", "--grid", "0"],
        ["rd", "--bogus"],
        ["nope"],
        ["rd", "--user", "3"],
        ["hybrid", "--target", "0.1"],
        ["hybrid"],
        ["rd", "--model", "no-such-model"],
        ["rd", "--rate", "0/1"],
        ["rd", "--tol", "0"],
    ],
)
def test_usage_errors_exit_1(argv):
    assert main(argv) == 1


def test_missing_config_file_is_a_usage_error(tmp_path):
    assert main(["rd", "--config", str(tmp_path / "missing.json")]) == 1


def test_config_file_then_flags(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"grid": 3, "seed": 9}), encoding="utf-8")
    args = build_parser().parse_args(["rd", "--config", str(path), "--grid", "5"])
    cfg = run_config(args)
    assert cfg.grid == 5
    assert cfg.seed == 9


@pytest.mark.parametrize("command", ["rd", "cond-rd"])
def test_iteration_cap_exits_2_with_diagnostic(command, capsys):
    # example1 S1 is (2/3, 1/3); one iteration cannot settle the mid-grid point
    code = main([command, "--model", "example1", "--grid", "3", "--tol", "1e-12", "--max-iter", "1"])
    assert code == 2
    diag = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert diag["error"] == "convergence"
    assert diag["residual"] > 1e-12


def test_max_iter_flag_reaches_config():
    cfg = run_config(build_parser().parse_args(["rd", "--max-iter", "7"]))
    assert cfg.max_iter == 7
    assert cfg.to_solver_kwargs()["max_iter"] == 7


def test_hybrid_search_infeasible_target_exits_3(tmp_path):
    out = tmp_path / "h.json"
    assert main(["hybrid", "--target", "0,0", "--budget", "40", "--out", str(out)]) == 3
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["found"] is False
    assert data["target"] == [0.0, 0.0]


def test_hybrid_search_reachable_target(tmp_path):
    out = tmp_path / "h.json"
    assert main(["hybrid", "--target", "0.17,0", "--budget", "120", "--out", str(out)]) == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["found"] is True
    assert data["report"]["feasible"] is True
    assert data["evaluations"] <= 120


def test_hybrid_evaluates_scheme_file(tmp_path):
    src, ch, d1, d2 = canned("example1").parts
    path = tmp_path / "uncoded.json"
    save_scheme(make_uncoded(src, ch, d1, d2), path)
    out = tmp_path / "h.json"
    assert main(["hybrid", "--scheme", str(path), "--out", str(out)]) == 0
    report = json.loads(out.read_text(encoding="utf-8"))["report"]
    assert report["feasible"] is True


def test_model_file(tmp_path):
    path = tmp_path / "model.json"
    save_model(canned("zchannel"), path)
    out = tmp_path / "rd.csv"
    assert main(["rd", "--model", str(path), "--grid", "3", "--out", str(out)]) == 0
    assert len(_rows(out)) == 4


@pytest.mark.slow
def test_example1_report(tmp_path):
    out = tmp_path / "ex1.json"
    code = main(["example1", "--samples", "0", "--out", str(out)])
    assert code == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    checks = data["checks"]
    assert checks["monte_carlo_agrees"] is None
    assert checks["uncoded_exact"] is True
    assert checks["mixed_feasible"] is True
    assert checks["mixed_distortions"] is True
    assert checks["sscc_impossible_at_zero"] is True
    assert checks["capacity_bounds_coincide"] is True
    assert data["capacity"]["hausdorff_gap"] <= 1e-2
    assert data["uncoded"]["distortions"] == pytest.approx([0.0, 1 / 30], abs=1e-12)
    assert data["mixed"]["report"]["d1"] == pytest.approx(1 / 6, abs=1e-9)


def test_help_exits_0():
    assert main(["--help"]) == 0


def test_wz_rd_writes_curve(tmp_path):
    out = tmp_path / "wz.csv"
    assert main(["wz-rd", "--model", "dsbs-0.25", "--grid", "3", "--restarts", "1", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["D", "R", "slope"]
    assert len(rows) == 4
    assert float(rows[-1][1]) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.slow
def test_region_report(tmp_path):
    out = tmp_path / "region.json"
    code = main(["region", "--model", "dsbs-0.25", "--grid", "3", "--resolution", "5", "--restarts", "1", "--out", str(out)])
    assert code == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["rate"] == "1/1"
    assert data["exact"] is None
    assert data["hypothesis_flags"]["wz_equals_cond1"] is False
    assert data["outer"]
