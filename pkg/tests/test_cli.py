import json
import subprocess
import sys

import numpy as np
import pytest

from ou_schro.cli import main, parse_real, time_values
from ou_schro.field_grid import make_grid, read_csv
from ou_schro.propagator import SingularTimeError


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def load(path):
    return json.loads(path.read_text())


@pytest.mark.parametrize("text,value", [("1.5", 1.5), ("4/3", 4 / 3), ("pi/2", np.pi / 2),
                                        ("3pi/4", 3 * np.pi / 4), ("2*pi", 2 * np.pi),
                                        ("-pi", -np.pi), ("inf", np.inf)])
def test_parse_real(text, value):
    assert parse_real(text) == pytest.approx(value)


def test_time_values_typed_precision():
    with pytest.raises(SingularTimeError, match="singular time"):
        time_values("3.14159265")
    with pytest.raises(SingularTimeError):
        time_values("1,pi")
    assert time_values("3.1415") == [3.1415]


def test_propagate_ou(tmp_path):
    assert run(tmp_path, "propagate", "--op", "ou", "--t", "1.5708", "--psi-gauss", "1") == 0
    doc = load(tmp_path / "propagate.json")
    assert doc["oracle"]["relative_error"] < doc["oracle"]["tolerance"] == 1e-6
    assert doc["meta"]["branch"] == "JPlus" and doc["flags"] == []
    g = make_grid(1, 512, 12)
    init = read_csv(tmp_path / "initial.csv", g)
    assert np.allclose(init.values, np.exp(-0.75 * g.axis() ** 2), rtol=1e-15, atol=0)
    read_csv(tmp_path / "final.csv", g)


def test_propagate_singular(tmp_path, capsys):
    assert run(tmp_path, "propagate", "--t", "3.14159265") == 1
    err = capsys.readouterr().err
    assert "singular time" in err and "t mod pi" in err
    assert not (tmp_path / "propagate.json").exists()


def test_propagate_mehler_const(tmp_path):
    assert run(tmp_path, "propagate", "--op", "mehler", "--omega", "0.25", "--t", "1.0",
               "--phi", "const") == 0
    final = read_csv(tmp_path / "final.csv", make_grid(1, 512, 12))
    assert np.max(np.abs(final.values - 1)) < 1e-8
    dev = load(tmp_path / "propagate.json")["oracle"]["max_abs_deviation_from_one"]
    assert dev["passed"] and dev["tolerance"] == 1e-8


@pytest.mark.parametrize("args", [["--op", "ho", "--path", "gauge", "--t", "2.2"],
                                  ["--op", "ho", "--t", "4", "--psi-gauss", "0.5,-1"],
                                  ["--op", "ou", "--path", "kernel", "--t", "4.0"]])
def test_propagate_paths(tmp_path, args):
    assert run(tmp_path, "propagate", *args) == 0


def test_propagate_flagged(tmp_path):
    code = run(tmp_path, "propagate", "--t", "1", "--psi-gauss", "0.01", "--n", "64", "--r", "4")
    assert code == 2
    assert "input-truncated" in load(tmp_path / "propagate.json")["flags"]


@pytest.mark.parametrize("args", [["propagate"], ["propagate", "--t", "1", "--n", "15"],
                                  ["propagate", "--t", "1", "--op", "ho", "--path", "kernel"],
                                  ["propagate", "--t", "1", "--psi-gauss", "1", "--phi", "const"],
                                  ["validate", "--only", "nonsense"],
                                  ["validate", "--tol", "bogus=1"],
                                  ["dispersive", "--p", "0.5"], ["nosuch"]])
def test_usage_errors(tmp_path, args):
    assert run(tmp_path, *args) == 1


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"t": 2.2, "op": "ho", "n": 256, "psi-gauss": [0.5, 0.1]}))
    assert run(tmp_path, "propagate", "--config", str(cfg), "--n", "128") == 0
    doc = load(tmp_path / "propagate.json")
    assert doc["config"]["n"] == 128 and doc["config"]["op"] == "ho"
    cfg.write_text(json.dumps({"nope": 1}))
    assert run(tmp_path, "propagate", "--config", str(cfg)) == 1


def test_validate_only(tmp_path):
    assert run(tmp_path, "validate", "--only", "unitarity") == 0
    doc = load(tmp_path / "validate.json")
    assert [c["name"] for c in doc["checks"]] == ["unitarity"]
    for m in doc["checks"][0]["measurements"]:
        assert m["value"] < m["tolerance"]


def test_validate_fault_injection(tmp_path):
    assert run(tmp_path, "validate", "--only", "two_path", "--inject-fault",
               "jminus-prefactor") == 3
    doc = load(tmp_path / "validate.json")
    failed = [m for m in doc["checks"][0]["measurements"] if not m["passed"]]
    assert failed and all(m.get("branch", "JMinus") == "JMinus" for m in failed)
    # patch is undone afterwards
    assert run(tmp_path, "validate", "--only", "two_path") == 0


def test_validate_tolerance_override(tmp_path):
    assert run(tmp_path, "validate", "--only", "unitarity", "--tol", "unitarity=1e-30") == 3


def test_dispersive_default(tmp_path):
    assert run(tmp_path, "dispersive", "--p", "1,4/3,2", "--t", "pi/2") == 0
    doc = load(tmp_path / "dispersive.json")
    assert all(r["ratio"] <= 1 + 1e-6 for r in doc["rows"])
    header = (tmp_path / "dispersive.csv").read_text().splitlines()[0]
    assert "ratio" in header and "tolerance" in header


def test_dispersive_out_of_theorem(tmp_path):
    assert run(tmp_path, "dispersive", "--p", "1,2,2.5") == 0
    rows = load(tmp_path / "dispersive.json")["rows"]
    outside = [r for r in rows if r["p"] == 2.5]
    assert outside and not any(r["in_theorem"] for r in outside)
    assert any(r["ratio"] > 1 for r in outside)


def test_uncertainty_default(tmp_path):
    assert run(tmp_path, "uncertainty") == 0
    doc = load(tmp_path / "uncertainty.json")
    top = [r for r in doc["rows"] if abs(r["product"] - 1 / 16) < 1e-12]
    assert top and all(r["chirp_cancelled"] for r in top)
    assert all(r["tolerance"] == 1e-12 for r in doc["rows"])


def test_report(tmp_path):
    run(tmp_path, "validate", "--only", "wick")
    run(tmp_path, "dispersive", "--t", "2.2")
    assert run(tmp_path, "report") == 0
    doc = load(tmp_path / "report.json")
    assert set(doc["reports"]) == {"validate.json", "dispersive.json"}
    assert "plot" in (tmp_path / "plots.gp").read_text()
    assert main(["report", "--out", str(tmp_path / "empty")]) == 1


def test_byte_identical_across_threads(tmp_path, monkeypatch):
    blobs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("OU_SCHRO_THREADS", threads)
        out = tmp_path / threads
        assert main(["validate", "--out", str(out)]) == 0
        assert main(["dispersive", "--out", str(out)]) == 0
        blobs.append([(out / n).read_bytes() for n in
                      ("validate.json", "dispersive.json", "dispersive.csv")])
    assert blobs[0] == blobs[1]


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ou_schro.cli", "validate", "--only",
                           "periodicity", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS periodicity" in proc.stdout
