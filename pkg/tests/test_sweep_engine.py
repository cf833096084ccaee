import json
import math

import pytest

from mpw import sweep_engine
from mpw.errors import IntegrityError, ParameterError, SweepIOError, UsageError
from mpw.mpw_config import SolveOptions, SystemParams
from mpw.sweep_engine import (
    CSV_HEADER,
    Axis,
    SweepRow,
    SweepSpec,
    metadata_path,
    onset_threshold,
    read_rows,
    run_sweep,
)
from mpw.witness import pairing_limit

BASE = SystemParams(1, 1, 1.0, 1.0, 0.0, 0.0, 0.0)


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv("MPW_WORKERS", "1")


def test_axis_grid():
    axis = Axis.parse("mu=0:1:0.25")
    assert axis.name == "mu"
    assert axis.values == (0.0, 0.25, 0.5, 0.75, 1.0)


def test_axis_inclusive_endpoint_without_drift():
    axis = Axis.parse("vf=-1:0:0.025")
    assert axis.name == "v_f"
    assert axis.count == 41
    assert axis.values[0] == -1.0 and axis.values[-1] == 0.0
    assert axis.values[12] == pytest.approx(-0.7)


def test_empty_axis_has_one_point():
    assert Axis.parse("eps-b=2:2:0.5").values == (2.0,)


@pytest.mark.parametrize("token", ["mu=0:1", "mu0:1:0.1", "spin=0:1:0.1", "mu=1:0:0.1", "mu=0:1:0", "mu=0:1e-9:1e-12", "mu=a:1:0.1"])
def test_malformed_axis(token):
    with pytest.raises(UsageError, match="axis"):
        Axis.parse(token)


def test_spec_validation():
    with pytest.raises(ParameterError):
        SweepSpec(BASE, ("mu=0:1:0.5", "mu=0:1:0.1"))
    with pytest.raises(ParameterError):
        SweepSpec(BASE, ("mu=0:1:0.5", "vf=0:1:0.5", "vb=0:1:0.5"))
    with pytest.raises(ParameterError):
        SweepSpec(BASE, ())
    with pytest.raises(ParameterError):
        SweepSpec(SystemParams(2, 1), ("mu=0:1:0.5",))


def test_grid_order_outer_axis_slow():
    spec = SweepSpec(BASE, ("vf=-1:0:1", "mu=0:1:0.5"))
    keys = [key for key, _ in spec.grid()]
    assert keys == [(-1.0, 0.0), (-1.0, 0.5), (-1.0, 1.0), (0.0, 0.0), (0.0, 0.5), (0.0, 1.0)]
    assert spec.grid()[1][1].mu == 0.5


def test_sweep_writes_csv_and_sidecar(tmp_path):
    out = tmp_path / "curve.csv"
    rows = run_sweep(SweepSpec(BASE, ("mu=0:1:0.25",), output=str(out)))
    assert [row.mu for row in rows] == [0.0, 0.25, 0.5, 0.75, 1.0]
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[0] == "n_f,n_b,eps_f,eps_b,v_f,v_b,mu,energy,lambda_g_f,lambda_g_b,bound_f,bound_b,converged,iterations,wall_time_ms"
    assert len(lines) == 6
    assert lines[1].split(",")[12] == "true"
    assert lines[1].split(",")[-1] == "0"
    meta = json.loads(metadata_path(out).read_text())
    assert meta["seed"] == 1234 and meta["solver"] == "column"
    assert meta["version"] and meta["fingerprint"]
    assert meta["spec"]["axes"] == ["mu=0:1:0.25"]


def test_repeated_sweeps_are_byte_identical(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (first, second):
        run_sweep(SweepSpec(BASE, ("mu=0:1:0.5",), output=str(out)))
    assert first.read_bytes() == second.read_bytes()


def test_timing_recorded_on_request(tmp_path):
    rows = run_sweep(SweepSpec(BASE, ("mu=0:0:1",), record_timing=True))
    assert rows[0].wall_time_ms > 0


def test_resume_recomputes_missing_rows(tmp_path, monkeypatch):
    out = tmp_path / "resume.csv"
    spec = SweepSpec(BASE, ("mu=0:1:0.25",), output=str(out))
    run_sweep(spec)
    lines = out.read_text().splitlines()
    out.write_text("\n".join(lines[:3]) + "\n")

    calls = []
    original = sweep_engine.evaluate_point

    def counting(params, options, record_timing=False):
        calls.append(params.mu)
        return original(params, options, record_timing)

    monkeypatch.setattr(sweep_engine, "evaluate_point", counting)
    rows = run_sweep(spec)
    assert calls == [0.5, 0.75, 1.0]
    assert len(rows) == 5
    assert out.read_text().splitlines() == lines


def test_resume_ignores_other_sweeps(tmp_path, monkeypatch):
    out = tmp_path / "other.csv"
    run_sweep(SweepSpec(BASE, ("mu=0:1:0.5",), output=str(out)))
    calls = []
    original = sweep_engine.evaluate_point
    monkeypatch.setattr(sweep_engine, "evaluate_point", lambda p, o, t=False: calls.append(p) or original(p, o, t))
    run_sweep(SweepSpec(BASE, ("mu=0:1:0.5",), SolveOptions(seed=7), output=str(out)))
    assert len(calls) == 3


def test_failed_points_recorded_and_retried(tmp_path, monkeypatch):
    out = tmp_path / "failing.csv"
    original = sweep_engine.compute_witness

    def flaky(params, opts):
        if params.mu == 0.5:
            raise IntegrityError("synthetic failure")
        return original(params, opts)

    monkeypatch.setattr(sweep_engine, "compute_witness", flaky)
    spec = SweepSpec(BASE, ("mu=0:1:0.5",), output=str(out))
    rows = run_sweep(spec)
    assert [row.converged for row in rows] == [True, False, True]
    assert math.isnan(rows[1].energy)
    assert out.read_text().splitlines()[2].split(",")[7] == "nan"

    # kept on plain resume, recomputed with retry_failed
    assert not run_sweep(spec)[1].converged
    monkeypatch.setattr(sweep_engine, "compute_witness", original)
    retried = run_sweep(SweepSpec(BASE, ("mu=0:1:0.5",), output=str(out), retry_failed=True))
    assert all(row.converged for row in retried)


def test_jsonl_output(tmp_path):
    out = tmp_path / "curve.jsonl"
    run_sweep(SweepSpec(BASE, ("mu=0:1:0.5",), output=str(out)))
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(records) == 3
    assert list(records[0]) == list(CSV_HEADER)
    assert records[2]["mu"] == 1.0 and records[2]["converged"] is True
    assert [row.mu for row in read_rows(out)] == [0.0, 0.5, 1.0]


def test_unknown_output_suffix(tmp_path):
    with pytest.raises(UsageError):
        run_sweep(SweepSpec(BASE, ("mu=0:1:0.5",), output=str(tmp_path / "out.txt")))


def test_unwritable_output_keeps_rows(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    with pytest.raises(SweepIOError) as info:
        run_sweep(SweepSpec(BASE, ("mu=0:1:0.5",), output=str(blocker / "out.csv")))
    assert len(info.value.rows) == 3


def _row(mu, lam_f, lam_b, v_f=0.0, converged=True):
    return SweepRow(6, 6, 1.0, 1.0, v_f, 0.0, mu, -1.0, lam_f, lam_b, 3.0, 3.0, converged, 0, 0.0)


def test_onset_threshold():
    rows = [_row(0.0, 1.0, 2.0), _row(0.2, 2.0, 2.96), _row(0.4, 2.97, 2.99)]
    assert onset_threshold(rows, "fermion", 2.95) == 0.4
    assert onset_threshold(rows, "boson", 2.95) == 0.2
    assert onset_threshold(rows, "fermion", 3.5) is None


def test_onset_threshold_skips_failed_rows():
    rows = [_row(0.0, 3.0, 3.0, converged=False), _row(0.5, 3.0, 3.0)]
    assert onset_threshold(rows, "boson", 2.95) == 0.5


def test_onset_threshold_needs_mu_axis():
    rows = [_row(0.0, 1.0, 1.0, v_f=-1.0), _row(0.0, 1.0, 1.0, v_f=0.0)]
    with pytest.raises(ParameterError):
        onset_threshold(rows, "fermion", 2.95)


def test_onset_report_levels():
    rows = [_row(0.0, 1.0, 2.0), _row(0.5, 2.96, 2.97)]
    report = sweep_engine.onset_report(rows)
    (order_label, order_level, order_mu), (sat_label, sat_level, sat_mu) = report["fermion"]
    assert (order_label, order_level, order_mu) == ("long-range order", 1.5, 0.5)
    assert sat_label == "saturation"
    assert sat_level == pytest.approx(pairing_limit(6) - 0.05)
    assert sat_mu == 0.5
    assert [level[2] for level in report["boson"]] == [0.0, 0.5]


def test_onset_report_skips_saturation_below_three_pairs():
    rows = [SweepRow(2, 2, 1.0, 1.0, 0.0, 0.0, mu, -1.0, 1.0, 1.0, 1.0, 1.0, True, 0, 0.0) for mu in (0.0, 0.5)]
    report = sweep_engine.onset_report(rows)
    assert report["fermion"] == [("long-range order", 1.5, None)]


@pytest.mark.slow
def test_worker_count_does_not_change_output(tmp_path, monkeypatch):
    monkeypatch.delenv("MPW_WORKERS")
    serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"
    base = SystemParams(2, 2, 1.0, 1.0, -0.4, -1.0, 0.0)
    run_sweep(SweepSpec(base, ("mu=0:1:0.25",), output=str(serial), workers=1))
    run_sweep(SweepSpec(base, ("mu=0:1:0.25",), output=str(parallel), workers=2))
    assert serial.read_bytes() == parallel.read_bytes()


def test_unexpected_error_becomes_failed_row(monkeypatch):
    real = sweep_engine.compute_witness

    def flaky(params, options):
        if params.mu == 0.5:
            raise RuntimeError("boom")
        return real(params, options)

    monkeypatch.setattr(sweep_engine, "compute_witness", flaky)
    rows = run_sweep(SweepSpec(BASE, ("mu=0:1:0.5",)))
    assert [row.converged for row in rows] == [True, False, True]
    assert math.isnan(rows[1].lambda_g_f)
