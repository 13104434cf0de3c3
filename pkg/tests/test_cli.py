import json

import numpy as np
import pytest

from ablattice.cli import main
from ablattice.serialization import config_from_bytes, config_from_json

BASE_CONFIG = """
[lattice]
nx = 24
ny = 24

[flux]
center = 11.5, 11.5
radius = 2.5
total_flux = 1.3

[regions]
x = rect(0, 0, 13, 23)
y = rect(10, 0, 23, 23)
zero = rect(10, 0, 13, 9)
left = rect(1,1,22,3) + rect(1,4,9,19) + rect(1,20,22,22)
right = rect(1,1,22,3) + rect(14,4,22,19) + rect(1,20,22,22)

[separability]
x = x
y = y
delta = 0.7
zero = zero

[codependence]
x = left
y = right
alpha = 11, 2
beta = 11, 21

[invariance]
count = 5

[output]
seed = 7
"""


@pytest.fixture
def config_path(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text(BASE_CONFIG)
    return str(p)


def run(args):
    return main(args)


def test_check_invariance(config_path, tmp_path, capsys):
    out = str(tmp_path / "out")
    assert run(["check-invariance", "--config", config_path, "--out", out]) == 0
    report = json.loads((tmp_path / "out" / "invariance-report.json").read_text())
    assert report["failed"] == 0
    assert report["worst_residual"] < 1e-10


def test_check_stokes(config_path, tmp_path):
    out = str(tmp_path / "out")
    assert run(["check-stokes", "--config", config_path, "--out", out]) == 0
    report = json.loads((tmp_path / "out" / "stokes-report.json").read_text())
    assert report["failed"] == 0


def test_separability_writes_witness_and_figure(config_path, tmp_path):
    out = tmp_path / "out"
    assert run(["separability", "--config", config_path, "--out", str(out)]) == 0
    report = json.loads((out / "separability-report.json").read_text())
    assert report["nonseparable"] is True
    assert report["witness_written"] is True
    assert (out / "witness.json").exists()
    assert (out / "cover-map.png").stat().st_size > 0
    witness = config_from_json((out / "witness.json").read_text())
    assert witness.lattice.nx == 24


def test_codependence(config_path, tmp_path):
    out = tmp_path / "out"
    assert run(["codependence", "--config", config_path, "--out", str(out)]) == 0
    report = json.loads((out / "codependence-report.json").read_text())
    assert report["matches_flux"] is True
    assert report["phase_gap_wrapped"] == pytest.approx(1.3, abs=1e-9)


def test_dump_load_round_trip(config_path, tmp_path, capsys):
    out = tmp_path / "out"
    assert run(["dump", "--config", config_path, "--out", str(out), "--format", "binary"]) == 0
    field = out / "field.bin"
    assert field.exists()
    assert run(["load", str(field)]) == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["nx"] == 24
    # convert to JSON and compare values
    assert run(["load", str(field), "--convert", "--format", "json", "--out", str(out)]) == 0
    back = config_from_json((out / "field.json").read_text())
    original = config_from_bytes(field.read_bytes())
    assert np.array_equal(back.psi, original.psi)
    assert np.array_equal(back.ah, original.ah)


def test_load_corrupt_file_fails(tmp_path, capsys):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"ABLATTIC" + b"\x00" * 4)
    assert run(["load", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_gauge_fix(config_path, tmp_path):
    out = tmp_path / "out"
    run(["dump", "--config", config_path, "--out", str(out), "--format", "json"])
    rc = run(["gauge-fix", str(out / "field.json"), "--out", str(out), "--mode", "coulomb"])
    assert rc == 0
    report = json.loads((out / "gauge-fix-report.json").read_text())
    assert report["interior_divergence"] < 1e-9


def test_bad_config_exits_2(tmp_path, capsys):
    p = tmp_path / "exp.ini"
    p.write_text("[lattice]\nnx = 24\nnz = 3\n")
    assert run(["check-invariance", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "nz" in capsys.readouterr().err


def test_ab_sweep_mini(tmp_path):
    p = tmp_path / "exp.ini"
    p.write_text(
        """
[geometry]
nx = 96
ny = 96
barrier_row = 28
slit_separation = 28
slit_width = 8
solenoid_center_y = 34
solenoid_radius = 4
screen_row = 80

[dynamics]
dt = 0.2
steps = 450
solver_tol = 1e-10
absorber_width = 10
absorber_strength = 0.05

[packet]
center = 47.5, 12
width = 9
momentum = 0, 1.2

[sweep]
total_flux = 0, 1.5707963267948966
"""
    )
    out = tmp_path / "out"
    assert run(["ab-sweep", "--config", str(p), "--out", str(out)]) == 0
    rows = (out / "sweep-summary.csv").read_text().strip().splitlines()
    assert rows[0].startswith("e_flux,")
    assert len(rows) == 3
    err = float(rows[2].split(",")[3])
    assert err < 0.2
    assert (out / "shift-sweep.png").stat().st_size > 0
    assert (out / "intensity-reference.csv").exists()


def test_outputs_deterministic(config_path, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run(["check-invariance", "--config", config_path, "--out", str(out1)])
    run(["check-invariance", "--config", config_path, "--out", str(out2)])
    assert (out1 / "invariance-report.json").read_text() == (
        out2 / "invariance-report.json"
    ).read_text()
