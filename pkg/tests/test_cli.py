import json
import subprocess
import sys

import pytest

from fockopa.cli import main


def run(capsys, *argv):
    status = main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def test_opa_one_minus_x(tmp_path, capsys):
    status, out, _ = run(capsys, "opa", "--poly", "1 - x1", "--nmax", "20", "--out", str(tmp_path))
    assert status == 0
    slope = float(out.split("slope over [8, 20]: ")[1].split()[0])
    assert slope == pytest.approx(-1, abs=0.15)
    assert "theorem exponent p: 1" in out
    lines = (tmp_path / "decay.csv").read_text().splitlines()
    assert lines[0] == "n,c_n,degree_basis_size,time_ms" and len(lines) == 22
    svg = (tmp_path / "decay.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg
    assert not [p for p in tmp_path.iterdir() if p.name.endswith(".tmp")]


def test_opa_outputs_are_byte_identical(tmp_path, capsys):
    for sub in ("a", "b"):
        assert run(capsys, "opa", "--poly", "1 - x1*x2", "--nmax", "4", "--seed", "3",
                   "--out", str(tmp_path / sub))[0] == 0
    for name in ("decay.csv", "decay.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_opa_singular_at_zero(tmp_path, capsys):
    status, out, _ = run(capsys, "opa", "--poly", "x1", "--nmax", "5", "--out", str(tmp_path))
    assert status == 0
    assert "verdict: not cyclic: singular at 0" in out
    rows = (tmp_path / "decay.csv").read_text().splitlines()[1:]
    assert [r.split(",")[1] for r in rows] == ["1"] * 6


def test_opa_timing_column(tmp_path, capsys):
    run(capsys, "opa", "--poly", "1 - x1", "--nmax", "3", "--timing", "--out", str(tmp_path))
    row = (tmp_path / "decay.csv").read_text().splitlines()[1]
    assert row.split(",")[3] != ""


def test_parse_error_exit(tmp_path, capsys):
    status, _, err = run(capsys, "opa", "--poly", "1 - x1 +", "--out", str(tmp_path))
    assert status == 2
    assert "byte 8" in err


def test_capacity_error_exit(tmp_path, capsys):
    status, _, err = run(capsys, "opa", "--poly", "1 - x1*x2", "--nmax", "20", "--out", str(tmp_path))
    assert status == 2 and "capacity" in err


def test_window_validation(tmp_path, capsys):
    status, _, err = run(capsys, "opa", "--poly", "1 - x1", "--nmax", "5", "--window", "1:5",
                         "--out", str(tmp_path))
    assert status == 2 and "window" in err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"poly": "1 - x1", "nmax": 6, "window": "2:6", "out": str(tmp_path / "o")}))
    status, out, _ = run(capsys, "opa", "--config", str(cfg), "--nmax", "8")
    assert status == 0
    assert len((tmp_path / "o" / "decay.csv").read_text().splitlines()) == 10
    assert "slope over [2, 6]" in out
    cfg.write_text(json.dumps({"poly": "1 - x1", "bogus": 1}))
    assert run(capsys, "opa", "--config", str(cfg))[0] == 2


def test_poly_from_file(tmp_path, capsys):
    src = tmp_path / "f.txt"
    src.write_text("1 - x1*x2\n")
    status, out, _ = run(capsys, "opa", "--file", str(src), "--nmax", "3", "--out", str(tmp_path))
    assert status == 0


def test_pipeline_irreducible(tmp_path, capsys):
    status, out, _ = run(capsys, "pipeline", "--poly", "1 - x1*x2", "--out", str(tmp_path))
    assert status == 0
    rep = json.loads((tmp_path / "pipeline.json").read_text())
    assert rep["linearize"]["pencil_size"] == 2
    assert rep["triangularize"]["ell"] == 1
    assert rep["ok"] and all(rep["checks"].values())
    assert rep["sandwich"]["rows"]


def test_pipeline_linear_input_is_identity_stage(tmp_path, capsys):
    status, _, _ = run(capsys, "pipeline", "--poly", "1 - 0.5*x1 - 0.5*x2", "--out", str(tmp_path))
    assert status == 0
    rep = json.loads((tmp_path / "pipeline.json").read_text())
    assert rep["linearize"]["steps"] == 0 and rep["linearize"]["pencil_size"] == 1


def test_pipeline_singular_constant(tmp_path, capsys):
    status, _, err = run(capsys, "pipeline", "--poly", "x1", "--out", str(tmp_path))
    assert status == 2 and "[normalize]" in err


def test_specrad_swap_pair(tmp_path, capsys):
    t = tmp_path / "t.json"
    t.write_text(json.dumps({"mats": [[[0, 1], [0, 0]], [[0, 0], [1, 0]]]}))
    status, out, _ = run(capsys, "specrad", "--file", str(t), "--out", str(tmp_path))
    assert status == 0
    rep = json.loads((tmp_path / "specrad.json").read_text())
    assert rep["rho"] == pytest.approx(1.0) and rep["irreducible"]
    assert rep["achieved_col_norm"] <= 1 + 1e-8


def test_specrad_nilpotent(tmp_path, capsys):
    t = tmp_path / "n.json"
    t.write_text(json.dumps({"mats": [[[0, 1], [0, 0]]]}))
    status, out, _ = run(capsys, "specrad", "--file", str(t), "--out", str(tmp_path))
    assert status == 0
    rep = json.loads((tmp_path / "specrad.json").read_text())
    assert rep["rho"] == 0.0 and rep["jointly_nilpotent"]


def test_specrad_random_needs_seed(tmp_path, capsys):
    assert run(capsys, "specrad", "--out", str(tmp_path))[0] == 2
    status, out, _ = run(capsys, "specrad", "--seed", "7", "--d", "3", "--m", "4", "--out", str(tmp_path))
    assert status == 0 and "self-test" in out


def test_linearize_command(tmp_path, capsys):
    status, out, _ = run(capsys, "linearize", "--poly", "1 - x1*x2*x1", "--samples", "50",
                         "--out", str(tmp_path))
    assert status == 0
    rep = json.loads((tmp_path / "linearize.json").read_text())
    assert rep["pencil_size"] == 3 and rep["verified"] and rep["zero_locus"]["agree"]


def test_sigma_bounds_command(tmp_path, capsys):
    status, _, _ = run(capsys, "sigma-bounds", "--poly", "(1 - x1)*(1 - x2)", "--nmax", "4",
                       "--out", str(tmp_path))
    assert status == 0
    lines = (tmp_path / "sigma_bounds.csv").read_text().splitlines()
    assert lines[0].startswith("n,N,degree")
    assert [int(r.split(",")[2]) for r in lines[1:]] == [1 + n + n ** 3 for n in range(1, 5)]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fockopa", "opa", "--poly", "1 - x1", "--nmax", "3",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "slope" in proc.stdout
