import csv
import json
import math
from pathlib import Path

import pytest

from cat1prox import cli
from cat1prox.experiment import CSV_HEADER, OUTPUT_ENV, ExperimentConfig

CONFIGS = Path(__file__).resolve().parents[1] / "scripts" / "configs"


def base(algorithm="mann", n_max=40, **kw):
    cfg = {
        "schema_version": 1,
        "function": {"kind": "NegCosDistance", "anchor": {"dist": 0.0}},
        "algorithm": algorithm,
        "schedules": {"alpha": {"family": "constant", "value": 0.5},
                      "lambda": {"family": "constant", "value": 1.0}},
        "init": {"dist": 0.4, "angle": 2.0},
        "n_max": n_max,
        "stop_tol": 0.0,
    }
    cfg.update(kw)
    return cfg


def write(tmp_path, name, cfg):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(cfg))
    return p


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_run_writes_csv_and_report(tmp_path, capsys):
    p = write(tmp_path, "m", base())
    assert cli.main(["run", str(p), "--out-dir", str(tmp_path / "out")]) == 0
    r = rows(tmp_path / "out" / "m.csv")
    assert list(r[0]) == CSV_HEADER and len(r) == 40
    assert [int(x["n"]) for x in r] == list(range(1, 41))
    assert float(r[0]["dist_to_min"]) == pytest.approx(0.4, abs=1e-15)
    assert r[0]["dist_to_Pv"] == "nan"
    rep = json.loads((tmp_path / "out" / "m.json").read_text())
    assert rep["n_steps"] == 40 and rep["error"] is None
    assert rep["inequalities"]["passed"] and rep["certificate"]["spherically_bounded_estimate"]
    assert "m: status 0" in capsys.readouterr().out


def test_mann_alpha_zero_csv_equals_ppa(tmp_path):
    m = base(schedules={"alpha": {"family": "constant", "value": 0.0},
                        "lambda": {"family": "harmonic", "p": 0.5, "scale": 2.0}})
    p = base("ppa", schedules={"lambda": {"family": "harmonic", "p": 0.5, "scale": 2.0}})
    for name, cfg in (("mann0", m), ("ppa", p)):
        assert cli.main(["run", str(write(tmp_path, name, cfg)), "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "mann0.csv").read_bytes() == (tmp_path / "ppa.csv").read_bytes()


def test_halpern_alpha_one_pins_anchor(tmp_path):
    cfg = base("halpern", n_max=15, anchor={"dist": 0.5, "angle": 3.0},
               schedules={"alpha": {"family": "constant", "value": 1.0},
                          "lambda": {"family": "constant", "value": 1.0}})
    assert cli.main(["run", str(write(tmp_path, "h1", cfg)), "--out-dir", str(tmp_path)]) == 0
    d = [float(r["dist_to_Pv"]) for r in rows(tmp_path / "h1.csv")]
    assert d[0] == pytest.approx(0.4, abs=1e-15)
    # y_n = v from n = 2, and Pv is the pole at distance 0.5 from v
    assert all(x == pytest.approx(0.5, abs=1e-12) for x in d[1:])
    rep = json.loads((tmp_path / "h1.json").read_text())
    assert rep["g_maximizer"] is None


def test_run_is_deterministic(tmp_path):
    p = write(tmp_path, "d", base("halpern", n_max=60, anchor={"dist": 0.5, "angle": 3.0},
                                  schedules={"alpha": {"family": "harmonic", "p": 0.5},
                                             "lambda": {"family": "linear"}}))
    outs = []
    for k in range(2):
        o = tmp_path / f"o{k}"
        assert cli.main(["run", str(p), "--out-dir", str(o)]) == 0
        outs.append(((o / "d.csv").read_bytes(), (o / "d.json").read_bytes()))
    assert outs[0] == outs[1]


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
    p = write(tmp_path, "e", base(n_max=5))
    assert cli.main(["run", str(p)]) == 0
    assert (tmp_path / "env" / "e.csv").is_file() and (tmp_path / "env" / "e.json").is_file()


def test_explicit_output_paths(tmp_path):
    cfg = base(n_max=5, outputs={"trace_csv_path": "t/trace.csv", "report_json_path": str(tmp_path / "r.json")})
    assert cli.main(["run", str(write(tmp_path, "x", cfg)), "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "t" / "trace.csv").is_file() and (tmp_path / "r.json").is_file()


@pytest.mark.parametrize("mutate", [
    lambda c: c.update(schema_version=2),
    lambda c: c.update(algorithm="fista"),
    lambda c: c.update(init={"dist": 1.2}),
    lambda c: c.update(bogus=1),
    lambda c: c["schedules"].pop("alpha"),
    lambda c: c.update(algorithm="halpern"),
    lambda c: c["schedules"].update(alpha={"family": "constant", "value": 1.0}),
    lambda c: c.update(function={"kind": "Nope"}),
])
def test_bad_config_exits_2(tmp_path, mutate):
    cfg = base()
    mutate(cfg)
    assert cli.main(["run", str(write(tmp_path, "bad", cfg)), "--out-dir", str(tmp_path)]) == 2


def test_usage_errors_exit_2(tmp_path):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert cli.main(["run", str(bad)]) == 2
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2
    assert cli.main(["frobnicate"]) == 2
    assert cli.main([]) == 2
    assert cli.main(["check", "nosuchsuite"]) == 2
    assert cli.main(["check", "geometry", "--samples", "1"]) == 2
    assert cli.main(["sweep", str(tmp_path / "nodir")]) == 2
    (tmp_path / "empty").mkdir()
    assert cli.main(["sweep", str(tmp_path / "empty")]) == 2


def test_check_single_suite_passes(capsys):
    assert cli.main(["check", "geometry", "--samples", "50"]) == 0
    out = capsys.readouterr().out
    assert "PASS geometry.cat1" in out and "PASS geometry.halpern_lemma" in out
    assert "resolvent." not in out
    assert out.strip().endswith("checks passed")


def test_check_default_seed_passes(capsys):
    assert cli.main(["check", "all", "--samples", "20"]) == 0
    out = capsys.readouterr().out
    for suite in ("geometry", "functions", "resolvent", "diagnostics"):
        assert f"PASS {suite}." in out
    assert "FAIL" not in out


def test_check_unmeetable_tolerance_reports_witness(capsys):
    # a negative tolerance demands a positive margin, which no check can meet
    code = cli.main(["check", "geometry", "--samples", "20", "--tol=-1"])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL geometry.cat1" in out and "witness:" in out
    assert "0/" in out.splitlines()[-1]


def test_check_is_seed_deterministic(capsys):
    cli.main(["check", "geometry", "--samples", "30", "--seed", "7"])
    a = capsys.readouterr().out
    cli.main(["check", "geometry", "--samples", "30", "--seed", "7"])
    assert capsys.readouterr().out == a


def test_sweep_runs_every_config(tmp_path):
    for i in range(3):
        write(tmp_path, f"c{i}", base(n_max=10 + i))
    out = tmp_path / "out"
    assert cli.main(["sweep", str(tmp_path), "--jobs", "2", "--out-dir", str(out)]) == 0
    assert sorted(p.name for p in out.glob("*.csv")) == ["c0.csv", "c1.csv", "c2.csv"]
    assert len(rows(out / "c2.csv")) == 12
    write(tmp_path, "zbad", dict(base(), schema_version=9))
    assert cli.main(["sweep", str(tmp_path), "--out-dir", str(out)]) == 2


def test_bundled_configs_load():
    paths = sorted(CONFIGS.glob("*.json"))
    assert len(paths) >= 5
    for p in paths:
        cfg = ExperimentConfig.load(p)
        assert cfg.name == p.stem and cfg.schema_version == 1


def test_kappa_config_reports_kappa_units(tmp_path):
    cfg = base(n_max=30, space={"ambient_dim": 3, "kappa": 4.0})
    assert cli.main(["run", str(write(tmp_path, "k", cfg)), "--out-dir", str(tmp_path)]) == 0
    r = rows(tmp_path / "k.csv")
    assert float(r[0]["dist_to_min"]) == pytest.approx(0.2, abs=1e-15)
    rep = json.loads((tmp_path / "k.json").read_text())
    assert rep["certificate"]["threshold"] == pytest.approx(math.pi / 4)
    assert rep["kappa"] == 4.0
