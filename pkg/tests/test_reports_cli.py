import csv
import io
import json

import numpy as np
import pytest

import clickrank.gaussian_states as gs
import clickrank.reports as reports
from clickrank.cli import main
from clickrank.detector import DetectorParams, wmax_single_click
from clickrank.regions import RegionBoundary, lambda_sweep
from clickrank.reports import (
    RunConfig,
    cached_boundaries,
    display_value,
    grid_hash,
    parse_lambda_grid,
    parse_ranks,
    render_csv,
)
from clickrank.witness import SearchConfig

GRID = "lin:-1:0:4,0,geom:1e-2:50:10"
FAST = ["--grid-size", "41", "--multistarts", "6"]


def run(capsys, *args):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = text.split("\n")
    assert lines[0] == "# schema_version: 1"
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_parse_ranks():
    assert parse_ranks("1,2,5") == [1, 2, 5]
    assert parse_ranks("1-4") == [1, 2, 3, 4]
    assert parse_ranks("3, 1-2") == [1, 2, 3]
    for bad in ("0", "", "a", "2-x"):
        with pytest.raises(ValueError):
            parse_ranks(bad)


def test_parse_lambda_grid():
    g = parse_lambda_grid("lin:-1:0:4,0,geom:1:100:3,7")
    assert np.allclose(g, [-1, -0.75, -0.5, -0.25, 0, 1, 7, 10, 100])
    assert parse_lambda_grid("default").size == 251
    for bad in ("", "nan", "geom:1:2"):
        with pytest.raises(ValueError):
            parse_lambda_grid(bad)


def test_display_value_rounds_up():
    assert display_value(0.29786) == "0.2979"
    assert display_value(0.22341) == "0.2235"
    assert display_value(0.5) == "0.5000"


def test_render_csv_format():
    text = render_csv([{"a": 0.1, "b": True, "c": None}], ["a", "b", "c"])
    assert text == "# schema_version: 1\na,b,c\n0.1,true,\n"
    assert "\r" not in text


def test_run_config_round_trip_and_validation():
    cfg = RunConfig(eta=0.4, ranks=[1, 3], search=SearchConfig(n_alpha=31))
    d = json.loads(json.dumps(cfg.to_dict()))
    assert RunConfig.from_dict(d) == RunConfig(**{**cfg.__dict__, "out": None})
    with pytest.raises(ValueError):
        RunConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        RunConfig(eta=0.0)
    with pytest.raises(ValueError):
        RunConfig(format="xml")


def test_probabilities_unit_efficiency(capsys):
    code, out, _ = run(capsys, "probabilities", "--eta", 1, "--transmittance", 0.5, "--n-max", 5)
    assert code == 0
    rows = read_csv(out)
    r1 = [float(r["R1_D1"]) for r in rows]
    assert r1 == [0.0, 0.5, 0.25, 0.125, 0.0625, 0.03125]


def test_probabilities_peak_low_efficiency(capsys):
    _, out, _ = run(capsys, "probabilities", "--eta", 0.2, "--n-max", 30)
    r1 = [float(r["R1_D1"]) for r in read_csv(out)]
    assert int(np.argmax(r1)) == 6


def test_probabilities_crossing_in_transmittance(capsys):
    # at eta = 2/3 the one- and two-photon curves cross at T = 1/2
    signs = []
    for T in (0.45, 0.55):
        _, out, _ = run(capsys, "probabilities", "--eta", 2 / 3, "--transmittance", T, "--n-max", 2)
        rows = read_csv(out)
        signs.append(float(rows[2]["R1_D1"]) - float(rows[1]["R1_D1"]))
    assert signs[0] < 0 < signs[1]


def test_thresholds_table(capsys):
    code, out, err = run(capsys, "thresholds", "--eta", 0.6, "--ranks", "1-2")
    assert code == 0
    rows = read_csv(out)
    assert [r["row"] for r in rows] == ["W_1", "W_2", "W_max"]
    assert rows[0]["display"] == "0.2784" and rows[1]["display"] == "0.3119"
    assert float(rows[2]["value"]) == wmax_single_click(DetectorParams(0.6, 0.5))[1]
    assert rows[0]["status"].startswith("ok")
    assert "search confidence" in err


def test_thresholds_default_ranks(capsys):
    _, out, _ = run(capsys, "thresholds", "--eta", 0.4, *FAST)
    assert [r["row"] for r in read_csv(out)] == ["W_1", "W_2", "W_3", "W_max"]


def test_thresholds_json(capsys):
    _, out, _ = run(capsys, "thresholds", "--eta", 1, "--ranks", 1, "--format", "json", *FAST)
    doc = json.loads(out)
    assert doc["schema_version"] == 1
    assert doc["config"]["eta"] == 1.0
    assert doc["results"]["thresholds"][0]["m"] == 1


def test_nonconvergence_exit_code(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"search": {"max_iter": 1}}))
    code, out, _ = run(capsys, "thresholds", "--eta", 1, "--ranks", 1, "--grid-size", 11, "--config", cfg)
    assert code == 3
    assert "nonconverged" in read_csv(out)[0]["status"]


def test_config_file_and_overrides(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"eta": 0.2, "n_max": 3}))
    _, out, _ = run(capsys, "probabilities", "--config", cfg)
    assert len(read_csv(out)) == 4
    _, out, _ = run(capsys, "probabilities", "--config", cfg, "--n-max", 1)
    assert len(read_csv(out)) == 2
    cfg.write_text(json.dumps({"colour": "red"}))
    code, _, err = run(capsys, "probabilities", "--config", cfg)
    assert code == 1 and "unknown config keys" in err


def test_usage_errors(capsys):
    assert run(capsys, "probabilities", "--eta", 1.5)[0] == 1
    assert run(capsys, "nonsense")[0] == 1
    assert run(capsys, "certify", "--r1", 0.1)[0] == 1
    assert run(capsys, "probabilities", "--format", "xml")[0] == 1


def test_boundary_dataset_and_round_trip(capsys, tmp_path):
    out_file = tmp_path / "b.json"
    code, _, _ = run(capsys, "boundary", "--eta", 1, "--ranks", "1-2", "--lambda-grid", GRID,
                     "--format", "json", "--out", out_file, "--cache-dir", tmp_path / "cache", *FAST)
    assert code == 0
    doc = json.loads(out_file.read_text())
    assert doc["results"]["physical"]["vertices"] == [[0.0, 0.0], [0.0, 0.5], [1.0, 0.0]]
    regions = [RegionBoundary.from_dict(r) for r in doc["results"]["regions"]]
    cfg = SearchConfig(n_alpha=41, n_r=41, multistarts=6)
    direct = lambda_sweep(1, DetectorParams(1.0, 0.5), parse_lambda_grid(GRID), cfg)
    assert regions[0] == direct
    assert [r.m for r in regions] == [1, 2]


def test_boundary_csv(capsys, tmp_path):
    code, out, _ = run(capsys, "boundary", "--eta", 1, "--ranks", 1, "--lambda-grid", GRID,
                       "--no-cache", *FAST)
    assert code == 0
    kinds = {r["kind"] for r in read_csv(out)}
    assert kinds == {"fock_point", "physical_vertex", "witness_line", "region_vertex"}


def test_determinism_byte_identical(capsys, tmp_path):
    files = []
    for i in range(2):
        f = tmp_path / f"t{i}.csv"
        run(capsys, "boundary", "--eta", 0.7, "--ranks", 1, "--lambda-grid", GRID, "--out", f,
            "--no-cache", *FAST)
        files.append(f.read_bytes())
    assert files[0] == files[1]


def test_certify_cli(capsys, tmp_path):
    common = ["--eta", 1, "--ranks", 1, "--lambda-grid", GRID, "--cache-dir", tmp_path, *FAST]
    code, out, _ = run(capsys, "certify", "--r1", 0, "--r2", 0, *common)
    assert code == 0 and read_csv(out)[0]["certified_rank"] == "0"
    code, out, _ = run(capsys, "certify", "--r1", 0.5, "--r2", 0, *common)
    row = read_csv(out)[0]
    assert row["certified_rank"] == "1" and float(row["margin"]) > 0
    assert row["witness_line"].startswith("R1 - (")
    code, _, err = run(capsys, "certify", "--r1", 1.5, "--r2", 0, *common)
    assert code == 1
    code, out, err = run(capsys, "certify", "--r1", 0.9, "--r2", 0.1, *common)
    assert code == 0 and "outside" in err and read_csv(out)[0]["outside_physical"] == "true"


def test_cache_is_reused(tmp_path, monkeypatch):
    p = DetectorParams(0.8, 0.5)
    lams = parse_lambda_grid(GRID)
    cfg = SearchConfig(n_alpha=21, n_r=21, multistarts=4)
    first = cached_boundaries(p, [1], lams, cfg, tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1 and grid_hash(lams, cfg) in files[0].name
    doc = json.loads(files[0].read_text())
    assert set(doc) == {"schema_version", "config", "results"}

    def boom(*a, **k):
        raise AssertionError("sweep recomputed")

    monkeypatch.setattr(reports, "lambda_sweep", boom)
    assert cached_boundaries(p, [1], lams, cfg, tmp_path) == first


def test_validate_passes(capsys):
    code, out, err = run(capsys, "validate", "--eta", 1, "--ranks", "1-2", "--lambda-grid", GRID,
                         "--no-cache", *FAST)
    assert code == 0, out
    rows = read_csv(out)
    assert {r["suite"] for r in rows} == {"povm_completeness", "analytic_vs_oracle", "curvature_signs",
                                          "envelope_convexity", "gaussian_soundness"}
    assert all(r["passed"] == "true" for r in rows)


def test_validate_catches_flipped_b(capsys, monkeypatch):
    monkeypatch.setattr(gs, "_b_coefficient", lambda V_R, V_I: -(1.0 - 1.0 / (2 * V_R) - 1.0 / (2 * V_I)))
    code, out, err = run(capsys, "validate", "--eta", 1, "--ranks", 1, "--lambda-grid", GRID,
                         "--no-cache", *FAST)
    assert code == 2
    rows = {r["suite"]: r for r in read_csv(out)}
    assert rows["analytic_vs_oracle"]["passed"] == "false"
    assert "FAIL analytic_vs_oracle" in err


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "clickrank", "probabilities", "--n-max", "1"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.startswith("# schema_version: 1\n")
