import csv
import io
import json
import math

import pytest

from capbound import bounds, cli, sdp, serialize, zoo

FAST = ["--alpha-grid", "5", "--alpha-refine", "3", "--restarts", "2"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bound_json(capsys):
    code, out, _ = run(capsys, "bound", "ad:y=0.3", "--kind", "approx-degradable")
    assert code == 0
    d = json.loads(out)
    assert d["kind"] == "approx-degradable" and d["eta"] <= 1e-6
    assert sum(d["terms"].values()) == pytest.approx(d["value"], abs=1e-12)


def test_bound_csv_has_units(capsys):
    code, out, _ = run(capsys, "bound", "gad:y=0.2,N=0.3", "--kind", "dp-gad", "--format", "csv")
    assert code == 0
    header = out.splitlines()[0]
    assert "value [bits, log2]" in header and "eta [1]" in header


def test_bound_fixed_alpha(capsys):
    code, out, _ = run(capsys, "bound", "depolarizing:p=0.1", "--kind", "pure-flag",
                       "--alpha", "1", *FAST)
    assert code == 0 and json.loads(out)["alpha"] == 1.0


def test_bound_from_json_file(tmp_path, capsys):
    f = tmp_path / "ch.json"
    f.write_text(serialize.dumps(serialize.channel_to_json(zoo.amplitude_damping(0.2))))
    code, out, _ = run(capsys, "bound", str(f), "--kind", "q1", "--restarts", "2")
    assert code == 0 and json.loads(out)["value"] > 0


@pytest.mark.parametrize("argv", [
    ["bound", "nosuch:p=0.1", "--kind", "approx-degradable"],
    ["bound", "depolarizing:p=2", "--kind", "approx-degradable"],
    ["bound", "gad:y=0.1,N=0.1", "--kind", "choi-flag"],
    ["sweep", "depolarizing:p=0", "--param", "p", "--start", "0", "--stop", "0.1",
     "--kind", "nosuch"],
    ["sweep", "depolarizing:p=0", "--param", "p", "--start", "0", "--stop", "0.1",
     "--steps", "0", "--kind", "q1"],
    ["figures", "--only", "fig9"],
])
def test_parse_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == cli.EXIT_PARSE and err.startswith("capbound:")


def test_bad_json_file_exits_2(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text("{oops")
    assert run(capsys, "eta", str(f))[0] == cli.EXIT_PARSE
    assert run(capsys, "eta", str(tmp_path / "missing.json"))[0] == cli.EXIT_PARSE


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as e:
        cli.main(["bound", "ad:y=0.1"])
    assert e.value.code == 2


def test_solver_error_exits_3(monkeypatch, capsys):
    def boom(*a, **k):
        raise sdp.SolverError("not certified")
    monkeypatch.setattr(sdp, "eta_channel", boom)
    code, _, err = run(capsys, "bound", "ad:y=0.3", "--kind", "approx-degradable")
    assert code == cli.EXIT_SOLVER and "solver error" in err


def test_eta_and_dump(tmp_path, capsys):
    dump = tmp_path / "prob.json"
    code, out, _ = run(capsys, "eta", "depolarizing:p=0.1", "--dump-sdp", str(dump))
    assert code == 0
    d = json.loads(out)
    assert d["target"] == "channel" and d["diagnostics"]["gap"] <= 1e-7
    assert json.loads(dump.read_text())


def test_eta_of_state_file(tmp_path, capsys):
    f = tmp_path / "s.json"
    f.write_text(serialize.dumps(serialize.density_to_json(zoo.isotropic_state(0.1))))
    code, out, _ = run(capsys, "eta", str(f))
    assert code == 0 and json.loads(out)["target"] == "state"


SWEEP = ["sweep", "bb84:p=0", "--param", "p", "--start", "0", "--stop", "0.02", "--steps", "3",
         "--kind", "private-degradable,q1", *FAST]


def test_sweep_csv_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(SWEEP + ["--out", str(a)]) == 0
    assert cli.main(SWEEP + ["--out", str(b), "--jobs", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.reader(io.StringIO(a.read_text())))
    assert rows[0][0] == "p (error probability)"
    assert len(rows) == 1 + 3 * 2
    assert [r[0] for r in rows[1:]] == ["0", "0", "0.01", "0.01", "0.02", "0.02"]
    assert [r[1] for r in rows[1:3]] == ["private-degradable", "q1"]


def test_single_point_sweep_matches_bound(capsys):
    code, out, _ = run(capsys, "sweep", "gad:y=0,N=0.3", "--param", "y", "--start", "0.2",
                       "--stop", "0.2", "--steps", "1", "--kind", "dp-gad", "--format", "json")
    assert code == 0
    row = json.loads(out)[0]
    assert row["report"]["value"] == pytest.approx(bounds.dp_gad_bound(0.2, 0.3), abs=1e-12)
    code, out, _ = run(capsys, "bound", "gad:y=0.2,N=0.3", "--kind", "dp-gad")
    assert json.loads(out)["value"] == row["report"]["value"]


def test_sweep_records_point_errors(capsys):
    code, out, _ = run(capsys, "sweep", "gad:y=0,N=0.3", "--param", "y", "--start", "0.5",
                       "--stop", "1.5", "--steps", "2", "--kind", "dp-gad")
    assert code == 0
    last = list(csv.reader(io.StringIO(out)))[-1]
    assert last[-1].startswith("ValueError")


def test_default_jobs(monkeypatch):
    monkeypatch.setenv("CAPBOUND_JOBS", "3")
    assert cli.default_jobs() == 3
    monkeypatch.setenv("CAPBOUND_JOBS", "x")
    assert cli.default_jobs() == 1


def test_figures_subset(tmp_path, capsys, monkeypatch):
    monkeypatch.setitem(cli.FIGURES, "tiny", ("gad:y=0,N=0.1", "y", 0.0, 0.5, 2, ("dp-gad",)))
    code = cli.main(["figures", "--only", "tiny", "--out", str(tmp_path)])
    assert code == 0
    text = (tmp_path / "tiny.csv").read_text()
    assert text.splitlines()[0].startswith("y (damping)")
