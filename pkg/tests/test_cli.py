import json

import pytest

from branchhull.cli import main, parse_list


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "inst.json"
    assert main(["gen", "--K", "2", "--N", "2", "--L", "30", "--seed", "4", "--out", str(path)]) == 0
    return path


def test_parse_list_progression():
    assert parse_list("0,0.1,...,0.3") == [0.0, 0.1, 0.2, 0.3]
    assert parse_list("5,10,15", int) == [5, 10, 15]


def test_gen_prints_json(capsys):
    code, out = _run(capsys, "gen", "--K", "2", "--N", "3", "--L", "8", "--no-truth")
    assert code == 0
    doc = json.loads(out.out)
    assert isinstance(doc, dict)


def test_solve_recovers(capsys, instance_file):
    code, out = _run(capsys, "solve", "--instance", str(instance_file))
    assert code == 0
    doc = json.loads(out.out)
    assert doc["status"] == "converged"


def test_solve_rbh(capsys, instance_file):
    code, out = _run(capsys, "solve-rbh", "--instance", str(instance_file), "--lambda", "2")
    assert code == 0
    assert "e_star" in json.loads(out.out)


def test_project(capsys):
    code, out = _run(capsys, "project", "--p", "0.5", "--q", "0.5", "--y", "1")
    doc = json.loads(out.out)
    assert code == 0
    assert doc["p"] * doc["q"] == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("argv", [
    ["lemma", "wendel", "--n", "2", "--m", "3", "--trials", "200"],
    ["lemma", "hoeffding", "--n", "3", "--m", "20"],
    ["lemma", "count", "--K", "2", "--N", "2", "--L", "30", "--samples", "1000"],
])
def test_lemma_keys(capsys, argv):
    code, out = _run(capsys, *argv)
    assert code == 0
    assert set(json.loads(out.out)) == {"inputs", "closed_form", "empirical", "ci"}


def test_phase_and_noise(tmp_path):
    csv_path, plot = tmp_path / "p.csv", tmp_path / "p.gp"
    assert main(["phase", "--dims", "2", "--Lmin", "10", "--Lmax", "20", "--trials", "1",
                 "--out", str(csv_path), "--plot", str(plot)]) == 0
    assert csv_path.exists() and plot.exists()
    assert main(["noise", "--K", "2", "--N", "2", "--Lmin", "20", "--Lmax", "20",
                 "--alphas", "0,0.5", "--trials", "1", "--out", str(tmp_path / "n.csv")]) == 0


def test_errors_exit_nonzero(capsys, tmp_path):
    code, out = _run(capsys, "solve", "--instance", str(tmp_path / "missing.json"))
    assert code == 1 and "error" in out.err
    code, _ = _run(capsys, "lemma", "hoeffding", "--n", "30", "--m", "20")
    assert code == 1
