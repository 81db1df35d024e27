import csv
import json

import pytest

from vortexbirth import cli
from vortexbirth.solver import BlowUpError, initial_snapshot


def _only_run(out):
    runs = [p for p in out.iterdir() if p.is_dir()]
    assert len(runs) == 1
    return runs[0]


def _manifest_ok(run_dir):
    m = json.loads((run_dir / "manifest.json").read_text())
    for f in m["files"]:
        assert (run_dir / f).exists(), f
    return m


def _timeline(run_dir):
    with open(run_dir / "stagnation_timeline.csv") as fh:
        return [(float(r["t"]), int(r["stagnation_count"])) for r in csv.DictReader(fh)]


def test_predict_canonical(tmp_path, configs_dir):
    code = cli.main(["predict", "--config", str(configs_dir / "canonical_k100.ini"), "--out", str(tmp_path), "--tmax", "0.05"])
    assert code == 0
    d = _only_run(tmp_path)
    rep = json.loads((d / "report.json").read_text())
    assert rep["verdict"] == "separation_certified"
    assert rep["t0"] == pytest.approx(1 / 98, abs=1e-6)
    m = _manifest_ok(d)
    assert m["command"] == "predict" and "wall_clock_seconds" in m
    assert "zero_count.csv" in m["files"]
    assert d.name.endswith(rep["scenario_hash"])


def test_predict_reports_are_byte_identical(tmp_path, configs_dir):
    args = ["predict", "--config", str(configs_dir / "canonical_k20.ini"), "--tmax", "0.1", "--json-only"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (_only_run(tmp_path / "a") / "report.json").read_bytes()
    b = (_only_run(tmp_path / "b") / "report.json").read_bytes()
    assert a == b


def test_predict_divergent_is_rejected(tmp_path, configs_dir):
    assert cli.main(["predict", "--config", str(configs_dir / "divergent.ini"), "--out", str(tmp_path)]) == 2


def test_missing_section_is_config_error(tmp_path, configs_dir, capsys):
    code = cli.main(["predict", "--config", str(configs_dir / "missing_constants.ini"), "--out", str(tmp_path)])
    assert code == 1
    assert "[constants]" in capsys.readouterr().err
    assert not tmp_path.exists() or not any(tmp_path.iterdir())


def test_simulate_zero_end_time_writes_one_snapshot(tmp_path, configs_dir):
    code = cli.main(["simulate", "--config", str(configs_dir / "canonical_k20.ini"), "--out", str(tmp_path),
                     "--grid", "32", "--end-time", "0"])
    assert code == 0
    d = _only_run(tmp_path)
    assert sorted(p.name for p in (d / "snapshots").glob("*.csv")) == ["snapshot_00000.csv"]
    _manifest_ok(d)


def test_simulate_canonical_shows_transition(tmp_path, configs_dir):
    code = cli.main(["simulate", "--config", str(configs_dir / "canonical_k100.ini"), "--out", str(tmp_path),
                     "--grid", "64", "--end-time", str(1.5 / 98), "--snapshots", "20", "--json-only"])
    assert code == 0
    counts = [c for _, c in _timeline(_only_run(tmp_path))]
    assert counts[0] == 0
    assert [c for c in counts if c != 0][0] == 2
    assert counts[-1] == 2


def test_simulate_bad_grid(tmp_path, configs_dir):
    assert cli.main(["simulate", "--config", str(configs_dir / "canonical_k20.ini"), "--out", str(tmp_path),
                     "--grid", "4"]) == 1


def test_simulate_blow_up_exit_code(tmp_path, configs_dir, monkeypatch):
    def explode(ds, cfg):
        raise BlowUpError("non-finite values", [initial_snapshot(ds, cfg.grid)])

    monkeypatch.setattr(cli, "run", explode)
    code = cli.main(["simulate", "--config", str(configs_dir / "canonical_k20.ini"), "--out", str(tmp_path),
                     "--grid", "32"])
    assert code == 3
    d = _only_run(tmp_path)
    assert (d / "snapshots" / "snapshot_00000.csv").exists()
    _manifest_ok(d)


def test_verify_blow_up_exit_code(tmp_path, configs_dir, monkeypatch):
    monkeypatch.setattr(cli, "run", lambda ds, cfg: (_ for _ in ()).throw(BlowUpError("boom", [])))
    code = cli.main(["verify", "--config", str(configs_dir / "canonical_k100.ini"), "--out", str(tmp_path),
                     "--grid", "32", "--tmax", "0.05", "--json-only"])
    assert code == 3
    v = json.loads((_only_run(tmp_path) / "verify.json").read_text())
    assert v["status"] == "solver_blow_up"


def test_verify_uniform_stream(tmp_path, configs_dir):
    code = cli.main(["verify", "--config", str(configs_dir / "uniform.ini"), "--out", str(tmp_path),
                     "--grid", "32", "--end-time", "0.05", "--json-only"])
    assert code == 0
    v = json.loads((_only_run(tmp_path) / "verify.json").read_text())
    assert v["status"] == "no event on either side"
    assert v["relative_gap"] is None


@pytest.mark.slow
def test_verify_canonical_k20(tmp_path, configs_dir):
    code = cli.main(["verify", "--config", str(configs_dir / "canonical_k20.ini"), "--out", str(tmp_path),
                     "--tmax", "0.2", "--json-only"])
    assert code == 0
    d = _only_run(tmp_path)
    v = json.loads((d / "verify.json").read_text())
    assert v["relative_gap"] <= 0.25
    assert v["t0_predicted"] == pytest.approx(1 / 18, abs=1e-6)
    _manifest_ok(d)


def test_parser_rejects_unknown_mode(configs_dir):
    with pytest.raises(SystemExit):
        cli.main(["simulate", "--config", str(configs_dir / "uniform.ini"), "--mode", "spectral"])
