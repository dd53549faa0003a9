"""End-to-end tests of the gausslimit command line."""

import csv
import io
import json
from pathlib import Path

import pytest

from gausslimit.cli import EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK, EXIT_USAGE, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


SMALL_STUDY = """\
[system]
ar = [0.5]

[noise]
seed = 3

[study]
t_grid = [4, 8, 16]
replicates = 500
bootstrap = 10
"""


# =============================================================================
# IMPULSE
# =============================================================================

def test_impulse_ar1(tmp_path, capsys):
    out = tmp_path / "g.csv"
    assert main(["impulse", str(CONFIGS / "exponential_ar1.cfg"), "--horizon", "10", "--out", str(out)]) == EXIT_OK
    rows = _rows(out.read_text())
    assert [int(r["index"]) for r in rows] == list(range(11))
    for r in rows:
        assert float(r["G"]) == pytest.approx(0.9 ** int(r["index"]), rel=1e-13)
    assert "T_eps=1" in capsys.readouterr().err


def test_impulse_horizon_zero(capsys):
    assert main(["impulse", str(CONFIGS / "exponential_ar1.cfg"), "--horizon", "0"]) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert rows == [{"index": "0", "G": "1"}]


def test_impulse_rejects_unit_circle_without_override(tmp_path, capsys):
    path = _write(tmp_path, "[system]\nar = [0.0, -1.0]\n")
    assert main(["impulse", path]) == EXIT_ERROR
    assert "system unstable" in capsys.readouterr().err


def test_impulse_with_override(capsys):
    assert main(["impulse", str(CONFIGS / "counterexample2.cfg"), "--horizon", "7"]) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert [float(r["G"]) for r in rows] == [1, 0, -1, 0, 1, 0, -1, 0]


def test_invalid_config_is_usage_error(tmp_path, capsys):
    path = _write(tmp_path, "[system]\nar = [0.5]\nwobble = 1\n")
    assert main(["impulse", path]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "usage:" in err
    assert "line 3" in err


# =============================================================================
# BOUND
# =============================================================================

def test_bound_single_input(tmp_path, capsys):
    path = _write(tmp_path, "[system]\nar = [0.5]\n")
    assert main(["bound", path, "--t", "1"]) == EXIT_OK
    captured = capsys.readouterr()
    (row,) = _rows(captured.out)
    assert row["case"] == "independent"
    assert float(row["f"]) == pytest.approx(2.1284, abs=1e-4)
    assert "prop1=2.12838" in captured.err


def test_bound_several_t(capsys):
    args = ["bound", str(CONFIGS / "poscorr_edge.cfg"), "--t", "100", "200", "400", "--alpha-mode", "edge"]
    assert main(args) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert [int(r["t"]) for r in rows] == [100, 200, 400]
    assert all(r["case"] == "positively_correlated" and float(r["alpha"]) == 0.0 for r in rows)


def test_bound_poscorr_negative_pole(tmp_path, capsys):
    path = _write(tmp_path, "[system]\nar = [-0.9]\nma = [1.0, 1.0]\n")
    assert main(["bound", path, "--t", "10", "--case", "poscorr"]) == EXIT_ERROR
    assert "real positive dominant pole" in capsys.readouterr().err


def test_bound_decay_over_threshold(tmp_path, capsys):
    path = _write(tmp_path, "[system]\nar = [0.999]\nma = [1.0, 1.0]\n")
    assert main(["bound", path, "--t", "100", "--case", "decay"]) == EXIT_ERROR
    assert "admissible threshold 0.4799" in capsys.readouterr().err


# =============================================================================
# SIMULATE / W1
# =============================================================================

def test_simulate_writes_samples(tmp_path, capsys):
    path = _write(tmp_path, SMALL_STUDY)
    out = tmp_path / "samples.txt"
    assert main(["simulate", path, "--t", "8", "--out", str(out)]) == EXIT_OK
    (row,) = _rows(capsys.readouterr().out)
    assert int(row["N"]) == 500
    assert float(row["se"]) > 0
    assert len(out.read_text().split()) == 500


def test_w1_point_mass(tmp_path, capsys):
    path = _write(tmp_path, "0.0\n", name="s.txt")
    assert main(["w1", path, "--bootstrap", "0"]) == EXIT_OK
    (row,) = _rows(capsys.readouterr().out)
    assert float(row["w1"]) == pytest.approx(0.79788, abs=1e-5)
    assert float(row["se"]) == 0.0


# =============================================================================
# STUDY / COUNTEREXAMPLES
# =============================================================================

def test_study_creates_outputs(tmp_path, capsys):
    path = _write(tmp_path, SMALL_STUDY)
    out = tmp_path / "missing" / "dir"
    assert main(["--threads", "2", "study", path, "--out", str(out)]) == EXIT_OK
    study = _rows((out / "study.csv").read_text())
    assert list(study[0]) == ["t", "w1_hat", "se", "bound_f", "sigma2", "case"]
    assert [int(r["t"]) for r in study] == [4, 8, 16]
    plot = _rows((out / "plot_data.csv").read_text())
    assert list(plot[0]) == ["t", "w1_hat", "bound_f", "prop1"]
    variance = _rows((out / "variance.csv").read_text())
    assert [int(r["t"]) for r in variance] == [4, 8, 16]
    assert all(float(r["sigma2_lower_poscorr"]) <= float(r["sigma2_exact"]) * (1 + 1e-12) for r in variance)
    assert all(float(r["sigma2_exact"]) == float(s["sigma2"]) for r, s in zip(variance, study))
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3
    assert len(manifest["outputs"]) == 4


def test_study_is_reproducible(tmp_path):
    path = _write(tmp_path, SMALL_STUDY)
    main(["--threads", "1", "study", path, "--out", str(tmp_path / "a")])
    main(["--threads", "3", "study", path, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "study.csv").read_bytes() == (tmp_path / "b" / "study.csv").read_bytes()


def test_counterexamples_command(tmp_path, capsys):
    out = tmp_path / "ce"
    args = [
        "counterexamples", "--out", str(out), "--n-max", "50", "--identity-replicates", "20",
        "--t-grid", "4", "8", "16", "--replicates", "500",
    ]
    assert main(args) == EXIT_OK
    identities = _rows((out / "identities.csv").read_text())
    assert all(r["holds"] == "true" for r in identities)
    assert (out / "alternating_study.csv").exists()
    assert "closed form holds" in capsys.readouterr().out


@pytest.mark.slow
def test_counterexample_config_study(tmp_path, capsys):
    out = tmp_path / "ce1"
    assert main(["study", str(CONFIGS / "counterexample1.cfg"), "--out", str(out)]) == EXIT_OK
    assert "does not approach a Gaussian" in capsys.readouterr().out


def test_dominance_failure_exit_code(tmp_path, monkeypatch):
    from gausslimit import cli
    from gausslimit.sim_harness import StudyRow, StudyTable

    row = StudyRow(t=4, w1_hat=2.0, se=0.0, bound_f=1.0, sigma2=1.0, case="independent", prop1=1.0)
    monkeypatch.setattr(cli, "run_convergence_study", lambda config, threads=None: StudyTable((row,), "literal", "h"))
    path = _write(tmp_path, SMALL_STUDY)
    assert main(["study", path, "--out", str(tmp_path / "o")]) == EXIT_CHECK_FAILED
