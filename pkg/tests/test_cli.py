import json

import numpy as np
import pytest

from trapkink import io
from trapkink.cli import config_from_manifest, main, read_config

COARSE = ["--omega", "0.3", "--dx", "0.05", "--xmax", "15"]


def run(tmp_path, *args):
    return main(list(args) + ["--out", str(tmp_path)])


def manifest(d):
    return json.loads((d / "manifest.json").read_text())


@pytest.mark.parametrize("argv", [
    ["ground", "--bogus", "1"],
    ["turning-map", "--x0", "5", "--vmax", "0.3", "--pair"],
    ["evolve", "--v", "0.1"],            # missing --x0
    ["ground", "--dx", "0.07"],          # x_max not a multiple of dx
    ["kak-equilibrium", "--omega", "0"],
    ["cc", "--x0", "50", "--omega", "0.3", "--dx", "0.05", "--xmax", "15"],
])
def test_usage_errors(tmp_path, argv):
    with pytest.raises(SystemExit) as info:
        run(tmp_path, *argv)
    assert info.value.code == 2


def test_ground_outputs_and_manifest(tmp_path):
    assert run(tmp_path, "ground", *COARSE) == 0
    m = manifest(tmp_path)
    assert set(m["outputs"]) == {"ground.csv", "ground.json"}
    for name, h in m["outputs"].items():
        assert io.sha256_file(tmp_path / name) == h
    header, data = io.read_numeric_csv(tmp_path / "ground.csv")
    assert header == ["x", "u", "u_tf"]
    info = json.loads((tmp_path / "ground.json").read_text())
    assert abs(abs(info["argmax_x"]) - 2 / 0.3) < 0.1
    assert m["status"] == "ok"


def test_ground_default_deviation_peaks_at_support(tmp_path):
    assert run(tmp_path, "ground", "--omega", "0.15") == 0
    info = json.loads((tmp_path / "ground.json").read_text())
    assert abs(abs(info["argmax_x"]) - 13.33) < 0.05


def test_replay_from_manifest_is_bit_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "evolve", *COARSE, "--x0", "2", "--v", "0.4", "--pair", "--tmax", "30") == 0
    cfg = tmp_path / "replay.cfg"
    cfg.write_text(config_from_manifest(manifest(a)))
    assert run(b, manifest(a)["command"], "--config", str(cfg)) == 0
    assert manifest(a)["outputs"] == manifest(b)["outputs"]
    assert manifest(a)["parameters"] == manifest(b)["parameters"]


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# coarse grid\nomega = 0.2\ndx=0.05\nxmax = 15\ntmax=7\n")
    assert read_config(cfg)["dx"] == "0.05"
    assert run(tmp_path, "ground", "--config", str(cfg), "--omega", "0.3") == 0
    p = manifest(tmp_path)["parameters"]
    assert p["omega"] == 0.3 and p["dx"] == 0.05 and p["tmax"] == 7.0
    assert "config" in manifest(tmp_path)["input_hashes"]


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("omegaa=0.2\n")
    with pytest.raises(SystemExit):
        run(tmp_path, "ground", "--config", str(cfg))
    cfg.write_text("no equals sign\n")
    with pytest.raises(SystemExit):
        run(tmp_path, "ground", "--config", str(cfg))


def test_evolve_dump_field_and_cc_overlay(tmp_path):
    pde = tmp_path / "pde"
    assert run(pde, "evolve", *COARSE, "--x0", "2", "--v", "0", "--tmax", "10",
               "--dump-field", "field.csv", "--field-stride", "5") == 0
    header, field = io.read_numeric_csv(pde / "field.csv")
    assert header[0] == "x" and header[1] == "t=0"
    assert field.shape[0] == 601
    out = json.loads((pde / "outcome.json").read_text())
    assert out["energy_ok"]
    cc = tmp_path / "cc"
    assert run(cc, "cc", *COARSE, "--x0", "2", "--v", "0", "--tmax", "10",
               "--overlay", str(pde / "trajectory.csv")) == 0
    h, ov = io.read_numeric_csv(cc / "overlay.csv")
    assert h == ["t", "X_pde", "X_cc"]
    assert np.all(np.isfinite(ov))
    assert {"cc_single.csv", "cc_tables_single.csv", "overlay.csv", "cc.json"} <= set(manifest(cc)["outputs"])


def test_cc_pair_and_kak(tmp_path):
    assert run(tmp_path / "p", "cc", *COARSE, "--pair", "--x0", "2", "--v", "0.5", "--tmax", "40") == 0
    summary = json.loads((tmp_path / "p" / "cc.json").read_text())
    assert summary["outcome"].startswith("n_bounce") or summary["outcome"] == "bion"
    assert summary["energy_drift"] <= 1e-5
    assert run(tmp_path / "k", "kak-equilibrium", *COARSE, "--spectrum") == 0
    info = json.loads((tmp_path / "k" / "kak.json").read_text())
    assert info["n_unstable"] == 2


def test_kink_spectrum_csv(tmp_path):
    assert run(tmp_path, "kink", *COARSE, "--spectrum", "--spectral-dx", "0.05") == 0
    header, plane = io.read_numeric_csv(tmp_path / "kink_spectrum.csv")
    assert header == ["re_lambda", "im_lambda", "parity"]
    assert np.sum(plane[:, 0] > 1e-4) == 1


def test_scan_and_turning_map(tmp_path):
    s = tmp_path / "s"
    assert run(s, "scan", *COARSE, "--tmax", "100", "--x0", "2", "--vmin", "0.34", "--vmax", "0.40",
               "--step", "0.01", "--refine", "1e-3", "--threads", "1") == 0
    assert (s / "windows.txt").read_text().splitlines()[1].split()[0] == "n"
    h, _ = io.read_csv(s / "sweep.csv")
    assert h == ["v", "outcome", "n_bounces", "t_resolve"]
    t = tmp_path / "t"
    assert run(t, "turning-map", *COARSE, "--tmax", "60", "--x0", "4", "--vmax", "0.3", "--nv", "4") == 0
    h, tm = io.read_numeric_csv(t / "turning_map.csv")
    assert h == ["x1", "half_v2"]
    assert np.all(np.diff(np.abs(tm[:, 0])) >= 0)


def test_blow_up_gives_failure_status(tmp_path):
    # dt far above the Courant limit
    rc = run(tmp_path, "evolve", *COARSE, "--x0", "2", "--v", "0.1", "--dt", "0.5", "--tmax", "200")
    assert rc == 1
    assert manifest(tmp_path)["status"].startswith("failed")
