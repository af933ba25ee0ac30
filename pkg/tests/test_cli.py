"""Command-line front end: exit codes, outputs, overrides."""

import numpy as np
import pytest

from irsrs.cli import main
from irsrs.experiments import read_results
from irsrs.model import build_codebook

TINY = """
K = 1
M = 2
N = 4
P_cols = 2
Q_ones = 2
trials = 2
seed = 3
scheme = both
snr_list_db = 10
max_iter = 8
"""


def _write(tmp_path, text, name="study.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# ---------------------------------------------------------------------------
# run


def test_run_writes_results_and_manifest(tmp_path, capsys):
    cfg = _write(tmp_path, TINY)
    out = str(tmp_path / "res.csv")
    assert main(["run", "--config", cfg, "--out", out]) == 0
    captured = capsys.readouterr()
    assert "wrote 2 rows to %s" % out in captured.out
    assert "manifest:" in captured.out
    rows = read_results(out)
    assert [r.scheme for r in rows] == ["rs", "noma"]
    assert (tmp_path / "res.manifest.txt").exists()


def test_run_honors_overrides(tmp_path):
    cfg = _write(tmp_path, TINY)
    out = str(tmp_path / "o.csv")
    assert main(["run", "--config", cfg, "--scheme", "rs", "--trials", "1",
                 "--seed", "9", "--out", out]) == 0
    rows = read_results(out)
    assert len(rows) == 1
    assert rows[0].scheme == "rs"
    assert rows[0].trials == 1
    assert rows[0].seed_base == 9


def test_run_uses_out_from_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = _write(tmp_path, TINY + "out = fromcfg.csv\n")
    assert main(["run", "--config", cfg]) == 0
    assert (tmp_path / "fromcfg.csv").exists()
    assert (tmp_path / "fromcfg.manifest.txt").exists()


def test_run_missing_config(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "absent.cfg")]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_run_bad_config(tmp_path, capsys):
    cfg = _write(tmp_path, "K = -1")
    assert main(["run", "--config", cfg]) == 1
    assert "error:" in capsys.readouterr().err


def test_run_bad_override_caught_by_validation(tmp_path, capsys):
    cfg = _write(tmp_path, TINY)
    assert main(["run", "--config", cfg, "--trials", "0"]) == 1
    assert "trials" in capsys.readouterr().err


def test_run_unwritable_output(tmp_path, capsys):
    cfg = _write(tmp_path, TINY)
    out = str(tmp_path / "no" / "such" / "dir" / "x.csv")
    assert main(["run", "--config", cfg, "--out", out]) == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# validate


def test_validate_ok(tmp_path, capsys):
    cfg = _write(tmp_path, TINY)
    assert main(["validate", "--config", cfg]) == 0
    assert "config ok" in capsys.readouterr().out


def test_validate_reports_each_error(tmp_path, capsys):
    cfg = _write(tmp_path, "scheme = tdma\nstudy = foo\n")
    assert main(["validate", "--config", cfg]) == 1
    err = capsys.readouterr().err
    assert "scheme must be" in err
    assert "study must be" in err


def test_validate_missing_file(tmp_path, capsys):
    assert main(["validate", "--config", str(tmp_path / "nope.cfg")]) == 1
    assert "cannot read config" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# codebook


def test_codebook_prints_matrix(capsys):
    assert main(["codebook", "--P", "2", "--Q", "2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "# 4 elements, 2 columns, amplitude 1/sqrt(2)"
    got = np.array([[float(v) for v in line.split()] for line in out[1:]])
    assert np.allclose(got, build_codebook(2, 2).A)


def test_codebook_rejects_bad_sizes(capsys):
    assert main(["codebook", "--P", "0", "--Q", "2"]) == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_exits_nonzero():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
