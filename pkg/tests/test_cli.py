import csv
import json
from pathlib import Path

import pytest

from clusterdecouple.cli import QUENCH_HEADER, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_check_decoupled_config(capsys):
    code, out, err = run(capsys, "check", CONFIGS / "impurity_ring.cfg")
    assert code == 0
    assert "(1, 0)" in out and "yes" in out
    assert err.startswith("manifest: ")


def test_check_json_schema(capsys):
    code, out, _ = run(capsys, "check", CONFIGS / "two_clusters.cfg", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["all_decoupled"] is True
    (rep,) = data["reports"]
    assert set(rep) >= {"pair", "decoupled", "d0", "max_residual", "offending", "transformed_residual"}
    assert rep["d0"] == pytest.approx(0.25)
    m = data["manifest"]
    assert set(m) >= {"version", "subcommand", "parameters", "tolerances", "input_hash", "residuals", "wall_time_s"}


def test_check_perturbed_config(capsys):
    code, out, err = run(capsys, "check", CONFIGS / "perturbed.cfg")
    assert code == 1
    assert "NO" in out
    assert "offending d[0,0]" in out
    assert "not" in err.lower()


def test_spectrum_brute_force(capsys, tmp_path):
    code, out, _ = run(capsys, "spectrum", "--brute-force", CONFIGS / "two_clusters.cfg", "--json",
                       "--out", tmp_path)
    assert code == 0
    data = json.loads(out)
    assert data["max_relative_deviation"] <= 1e-9
    assert len(data["brute_force"]) == 4
    assert (tmp_path / "spectrum_multisets.csv").exists()
    manifest = json.loads((tmp_path / "spectrum_manifest.json").read_text())
    assert manifest["outputs"] == ["spectrum_modes.csv", "spectrum_multisets.csv"]


def test_spectrum_table(capsys):
    code, out, _ = run(capsys, "spectrum", CONFIGS / "impurity_ring.cfg")
    assert code == 0
    assert "ground-state E_cm" in out


def test_quench_csv_and_manifest(capsys, tmp_path):
    code, _, err = run(capsys, "quench", "--gamma", "0.5", "--out", tmp_path)
    assert code == 0
    path = tmp_path / "quench_gamma0.5.csv"
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == QUENCH_HEADER
    assert len(rows) == 2001
    assert float(rows[1][3]) == pytest.approx(0.25 * ((20 / 19) ** 0.5 + (20 / 21) ** 0.5), abs=1e-12)
    manifest = json.loads((tmp_path / "quench_manifest.json").read_text())
    assert manifest["outputs"] == ["quench_gamma0.5.csv"]
    res = manifest["residuals"]["0.5"]
    assert res["max_wronskian_drift"] <= 1e-8
    assert res["small_displacement"]["status"] == "ok"
    assert "wronskian drift" in err


def test_quench_from_config_matches_preset(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "quench", "--gamma", "10", "--grid", "300", "--out", a)[0] == 0
    assert run(capsys, "quench", "--config", CONFIGS / "impurity_ring.cfg", "--gamma", "10",
               "--grid", "300", "--out", b)[0] == 0
    ma = json.loads((a / "quench_manifest.json").read_text())["parameters"]
    mb = json.loads((b / "quench_manifest.json").read_text())["parameters"]
    assert mb["coupling"] == pytest.approx(ma["coupling"], rel=1e-12)
    assert mb["n_bath"] == 10


def test_quench_is_deterministic(capsys, tmp_path):
    outs = []
    for name in ("r1", "r2"):
        d = tmp_path / name
        assert run(capsys, "quench", "--gamma", "0.1", "--gamma", "10", "--grid", "500", "--out", d)[0] == 0
        outs.append(d)
    for f in ("quench_gamma0.1.csv", "quench_gamma10.csv"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    m1, m2 = (json.loads((d / "quench_manifest.json").read_text()) for d in outs)
    m1.pop("wall_time_s"), m2.pop("wall_time_s")
    assert m1 == m2


def test_ion_ring_preset(capsys, tmp_path):
    cfg = tmp_path / "ring.cfg"
    code, out, _ = run(capsys, "ion-ring", "--preset", "paper", "--json", "--write-config", cfg)
    assert code == 0
    data = json.loads(out)
    assert data["omega0_rad_s"] == pytest.approx(1.5e6, rel=0.05)
    assert data["quench"]["initial_ratio"] == pytest.approx(20.0)
    assert cfg.read_bytes() == (CONFIGS / "impurity_ring.cfg").read_bytes()


def test_ion_ring_table(capsys):
    code, out, _ = run(capsys, "ion-ring")
    assert code == 0
    assert "quench flags: --n-bath 10" in out


def test_ion_ring_invalid_trap(capsys):
    code, _, err = run(capsys, "ion-ring", "--omega-ext", "1e3", "--Omega-ext", "1e7")
    assert code == 1
    assert "error" in err


def test_unstable_config_exit_one(capsys, tmp_path):
    cfg = tmp_path / "unstable.cfg"
    cfg.write_text(json.dumps({
        "clusters": [{"masses": [1.0], "omega": 0.1}, {"masses": [1.0], "omega": 0.1}],
        "couplings": [{"alpha": 1, "beta": 0, "d_matrix": [[-1.0]]}],
    }))
    code, _, err = run(capsys, "spectrum", cfg)
    assert code == 1
    assert "error" in err


@pytest.mark.parametrize("content", ["{not json", json.dumps({"clusters": [{"masses": [-1.0]}]})])
def test_bad_config_exit_two(capsys, tmp_path, content):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(content)
    code, _, err = run(capsys, "check", cfg)
    assert code == 2
    assert err.startswith("error:")


def test_missing_config_exit_two(capsys, tmp_path):
    assert run(capsys, "check", tmp_path / "nope.cfg")[0] == 2


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert run(capsys, "quench", "--grid", "1")[0] == 2


def test_tolerance_override(capsys):
    # a 1% perturbation passes once the tolerance exceeds it
    code, _, _ = run(capsys, "check", CONFIGS / "perturbed.cfg", "--tol", "0.1", "--json")
    assert code == 0
