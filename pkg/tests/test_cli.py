import json

import pytest

from mpw import __version__, secondq_ops
from mpw.cli import _coalesce_axes, main
from mpw.validation import run_validation


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv("MPW_WORKERS", "1")


def test_bound(capsys):
    assert main(["bound", "6", "12"]) == 0
    assert capsys.readouterr().out.strip() == "3"
    assert main(["bound", "4", "8"]) == 0
    assert capsys.readouterr().out.strip() == "2"
    assert main(["bound", "2", "2"]) == 0
    assert capsys.readouterr().out.strip() == "0"


def test_bound_rejects_n_above_r(capsys):
    assert main(["bound", "7", "6"]) == 1
    assert "error" in capsys.readouterr().err


def test_witness_product_state(capsys):
    code = main(["witness", "--nf", "2", "--nb", "2", "--vf", "0", "--vb", "0", "--mu", "0", "--eps-f", "1", "--eps-b", "1"])
    out = capsys.readouterr().out
    assert code == 0
    assert f"mpw {__version__}" in out and "seed=1234" in out
    assert "lambda_G fermion: 1.0000000000" in out
    assert "lambda_G boson: 1.0000000000" in out


def test_witness_json(capsys):
    assert main(["witness", "--nf", "1", "--nb", "1", "--mu", "0.5", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["version"] == __version__
    assert payload["seed"] == 1234
    assert payload["energy"] == pytest.approx(-1.0)
    assert payload["diagnostics"]["converged"] is True


def test_witness_paths_agree(capsys):
    values = []
    for solver in ("full", "column", "collective"):
        assert main(["witness", "--nf", "3", "--nb", "3", "--vf", "-0.4", "--vb", "-1", "--mu", "0.3", "--solver", solver, "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        values.append((payload["lambda_g_f"], payload["lambda_g_b"]))
    for lam_f, lam_b in values[1:]:
        assert lam_f == pytest.approx(values[0][0], abs=1e-8)
        assert lam_b == pytest.approx(values[0][1], abs=1e-8)


def test_witness_non_convergence_exit_code(capsys):
    code = main(["witness", "--nf", "2", "--nb", "2", "--vf", "-0.5", "--mu", "0.4", "--dense-threshold", "0", "--max-iter", "1"])
    assert code == 2
    assert "converged=False" in capsys.readouterr().out


def test_witness_usage_errors(capsys):
    assert main(["witness", "--nb", "2"]) == 1
    assert main(["witness", "--nf", "2", "--nb", "2", "--solver", "dense"]) == 1
    assert main(["witness", "--nf", "2", "--nb", "2", "--bogus", "1"]) == 1


def test_print_config(capsys):
    assert main(["witness", "--nf", "3", "--nb", "3", "--vf", "-0.4", "--print-config"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert "v_f = -0.4" in out
    assert "n_f = 3" in out
    assert out[0] == f"# mpw {__version__}"


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("nf = 2\nnb = 2\nmu = 0.2\n")
    assert main(["witness", "--config", str(cfg), "--mu", "0.4", "--print-config"]) == 0
    assert "mu = 0.4" in capsys.readouterr().out


def test_sweep_to_file(tmp_path, capsys):
    out = tmp_path / "curve.csv"
    assert main(["sweep", "--nf", "1", "--nb", "1", "--axis", "mu=0:1:0.5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("n_f,n_b,eps_f")
    assert len(lines) == 4
    report = capsys.readouterr().out
    assert "wrote 3 rows" in report
    assert "onset" in report


def test_sweep_two_axes(tmp_path):
    out = tmp_path / "grid.csv"
    argv = ["sweep", "--nf", "1", "--nb", "1", "--axis", "mu=0:0.5:0.5", "--axis=vf=-1:0:1", "--out", str(out)]
    assert main(argv) == 0
    rows = out.read_text().splitlines()[1:]
    assert len(rows) == 4
    assert [r.split(",")[6] for r in rows] == ["0", "0", "0.5", "0.5"]


def test_sweep_empty_axis_to_stdout(capsys):
    assert main(["sweep", "--nf", "1", "--nb", "1", "--axis", "mu=0.3:0.3:0.1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and lines[1].split(",")[6] == "0.3"


def test_sweep_to_stdout_reports_version_and_seed(capsys):
    assert main(["sweep", "--nf", "1", "--nb", "1", "--seed", "7", "--axis", "mu=0:1:0.5"]) == 0
    captured = capsys.readouterr()
    assert captured.out.splitlines()[0].startswith("n_f,n_b,eps_f")
    assert len(captured.out.splitlines()) == 4
    assert f"mpw {__version__}" in captured.err
    assert "seed=7" in captured.err
    assert "onset fermion long-range order" in captured.err


def test_sweep_malformed_axis(capsys):
    assert main(["sweep", "--nf", "1", "--nb", "1", "--axis", "mu=0:1"]) == 1
    assert "mu=0:1" in capsys.readouterr().err


def test_sweep_needs_axis(capsys):
    assert main(["sweep", "--nf", "1", "--nb", "1"]) == 1


def test_coalesce_axes():
    argv = ["sweep", "--axis", "mu=0:1:0.1", "--nf", "2", "--axis=vf=-1:0:0.5"]
    assert _coalesce_axes(argv) == ["sweep", "--nf", "2", "--axis=mu=0:1:0.1,vf=-1:0:0.5"]


def test_validate_passes(capsys):
    assert main(["validate", "--max-n", "2"]) == 0
    assert "checks passed" in capsys.readouterr().out


def test_validate_strong_battery(capsys):
    assert main(["validate", "--max-n", "3", "--battery", "strong"]) == 0


def test_strong_battery_checks_pairing_limit_for_every_n():
    report = run_validation(max_n=3, battery="strong")
    assert report.passed
    names = [check.name for check in report.checks]
    for n in (1, 2, 3):
        assert any(name.startswith("pairing-limit fermion") and f"N=({n},0)" in name for name in names)
        assert any(name.startswith("pairing-limit boson") and f"N=(0,{n})" in name for name in names)
    assert any(name.startswith("coupling-sign") for name in names)


def test_validate_rejects_large_n(capsys):
    assert main(["validate", "--max-n", "9"]) == 1


def test_validate_detects_broken_sign_convention(monkeypatch, capsys):
    monkeypatch.setattr(secondq_ops, "_jordan_wigner_sign", lambda bits, mode: 1)
    assert main(["validate", "--max-n", "1"]) == 1
    assert "FAIL statistics-discrimination" in capsys.readouterr().out
