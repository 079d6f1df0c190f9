"""Command line interface: schemas, determinism, exit codes."""

import json

import numpy as np
import pytest

from cayley4 import build_plane, realify
from cayley4.cli import CHECK_FAILURE, USAGE_ERROR, main


@pytest.fixture
def plane_file(tmp_path):
    u = realify(np.eye(4, dtype=complex))
    pl = build_plane(u, np.pi / 6, np.pi / 3)
    path = tmp_path / "plane.json"
    path.write_text(json.dumps({"frame": pl.frame.tolist()}))
    return str(path)


def _run_json(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    rc = main(argv + ["--out", str(out)])
    return rc, json.loads(out.read_text())


def test_analyze_plane_recovers_angles(plane_file, tmp_path):
    rc, out = _run_json(["analyze-plane", "--in", plane_file], tmp_path)
    assert rc == 0
    rep = out["angle_report"]
    assert rep["theta1"] == pytest.approx(np.pi / 6, abs=1e-9)
    assert rep["theta2"] == pytest.approx(np.pi / 3, abs=1e-9)
    assert rep["classification"] == "totally_real_non_cayley"
    assert out["alpha_xi"] == pytest.approx(0.0, abs=1e-9)
    assert out["omega_xi_value"] == pytest.approx(
        np.sin(np.pi / 6) * np.sin(np.pi / 3), abs=1e-9)
    # best phase aligns with alpha_xi: Phi there is cos(theta1 - theta2)
    assert out["max_phi"] == pytest.approx(np.cos(np.pi / 6), abs=1e-6)
    assert len(out["phi_values"]) == 16


def test_analyze_plane_repairs_small_gram_drift(plane_file, tmp_path):
    data = json.loads(open(plane_file).read())
    frame = np.asarray(data["frame"])
    frame[0] *= 1.0 + 3e-8  # below the repair tolerance
    noisy = tmp_path / "noisy.json"
    noisy.write_text(json.dumps({"frame": frame.tolist()}))
    rc, out = _run_json(["analyze-plane", "--in", str(noisy)], tmp_path)
    assert rc == 0
    assert out["angle_report"]["theta1"] == pytest.approx(np.pi / 6, abs=1e-6)


def test_scan_output_schema_and_determinism(tmp_path):
    rc1, out1 = _run_json(["scan", "--n", "300", "--seed", "5"], tmp_path, "s1.json")
    rc2, out2 = _run_json(["scan", "--n", "300", "--seed", "5"], tmp_path, "s2.json")
    assert rc1 == rc2 == 0
    out1.pop("timestamp")
    out2.pop("timestamp")
    assert out1 == out2
    assert out1["n"] == 300
    assert out1["calibration_bound_ok"] is True
    assert sum(out1["theta1_histogram"]["counts"]) == 300
    assert 0.0 <= out1["cayley_fraction"] <= 1.0
    assert out1["max_phi"] <= 1.0 + 1e-9


def test_scan_different_seed_changes_sample(tmp_path):
    _, out1 = _run_json(["scan", "--n", "300", "--seed", "5"], tmp_path, "a.json")
    _, out2 = _run_json(["scan", "--n", "300", "--seed", "6"], tmp_path, "b.json")
    assert out1["max_phi"] != out2["max_phi"]


def test_comass_gates(tmp_path):
    rc, out = _run_json(["comass", "--alpha", "0.3", "--samples", "40"], tmp_path)
    assert rc == 0
    assert out["bound_ok"] is True
    assert out["refinement_ok"] is True
    assert out["comass"] == pytest.approx(1.0, abs=1e-6)
    assert out["success_rate"] >= 0.95


def test_verify_patch_schema(tmp_path):
    rc, out = _run_json(
        ["verify-patch", "--name", "product-torus", "--tol", "1e-4"], tmp_path)
    assert rc == 0
    assert out["all_passed"] is True
    names = [c["name"] for c in out["checks"]]
    assert "h_symmetric" in names
    assert "theorem_iii" in names
    assert "l2_lambda_invariant" in names
    for c in out["checks"]:
        assert isinstance(c["passed"], bool)


def test_verify_patch_tight_tolerance_fails(tmp_path):
    rc, out = _run_json(
        ["verify-patch", "--name", "product-torus", "--tol", "1e-16"], tmp_path)
    assert rc == CHECK_FAILURE
    assert out["all_passed"] is False


def test_verify_patch_from_spec_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({
        "name": "product-torus",
        "params": {"radii": [1.0, 0.8, 1.3, 0.6]},
        "grid": {"n": [6, 6, 6, 6]},
        "ambient": "flat",
    }))
    rc, out = _run_json(["verify-patch", "--spec", str(spec)], tmp_path)
    assert rc == 0
    assert out["all_passed"] is True


def test_invariant_suite_passes(tmp_path):
    rc, out = _run_json(["invariant-suite"], tmp_path)
    assert rc == 0
    assert out["all_passed"] is True
    assert out["failed"] == []
    assert len(out["cases"]) == 3


def test_stdout_emission(capsys):
    rc = main(["scan", "--n", "50", "--seed", "1"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["n"] == 50


@pytest.mark.parametrize("argv", [
    ["scan", "--n", "0"],
    ["verify-patch", "--name", "bogus"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == USAGE_ERROR
    assert "error:" in capsys.readouterr().err


def test_bad_frame_inputs(tmp_path, capsys):
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    assert main(["analyze-plane", "--in", str(garbled)]) == USAGE_ERROR

    wrong_shape = tmp_path / "shape.json"
    wrong_shape.write_text(json.dumps({"frame": [[1.0] * 8] * 3}))
    assert main(["analyze-plane", "--in", str(wrong_shape)]) == USAGE_ERROR

    skewed = tmp_path / "skewed.json"
    frame = np.eye(4, 8)
    frame[1, 0] = 0.5  # Gram deviation far beyond repair
    skewed.write_text(json.dumps({"frame": frame.tolist()}))
    assert main(["analyze-plane", "--in", str(skewed)]) == USAGE_ERROR
    capsys.readouterr()
