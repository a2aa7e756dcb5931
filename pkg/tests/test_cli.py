import csv
import json
import subprocess
import sys

import pytest

from degenwave import cli


def _run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = cli.main(list(args) + ["--out", str(out)])
    return code, out


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_conserve_smoke(tmp_path):
    code, out = _run(["run", "conserve", "--theta", "0.5", "--grid", "100", "--T", "1"], tmp_path)
    assert code == cli.EXIT_OK
    man = _manifest(out)
    assert man["status"] == "ok" and man["config"]["theta"] == 0.5 and man["version"]
    for f in man["files"]:
        assert (out / f).exists()
    rows = list(csv.reader(open(out / man["files"][0])))
    assert rows[0][0] == "t"


def test_byte_identical_rerun(tmp_path):
    args = ["run", "observe", "--theta", "0.5", "--grid", "80", "--T", "2", "--samples", "2", "--seed", "3"]
    _, a = _run(args, tmp_path, "a")
    _, b = _run(args, tmp_path, "b")
    names = _manifest(a)["files"]
    assert names == _manifest(b)["files"]
    for f in names + ["manifest.json"]:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_blowup_column_decreasing(tmp_path):
    code, out = _run(["blowup", "--thetas", "1.0,1.5,1.8,1.95", "--T", "10", "--no-simulate"], tmp_path)
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(open(out / "blowup.csv")))
    vals = [float(r["closed_form"]) for r in rows]
    assert all(x > y for x, y in zip(vals, vals[1:]))


def test_spectrum_outputs(tmp_path):
    code, out = _run(["spectrum", "--theta", "1.0", "--grid", "50"], tmp_path)
    assert code == cli.EXIT_OK
    rec = json.loads((out / "spectrum.json").read_text())
    assert rec["nu"] == 0.0 and abs(rec["j_nu"] - 2.404825557695773) < 1e-12


def test_hum_and_failure(tmp_path):
    code, out = _run(["hum", "--theta", "0.5", "--grid", "50"], tmp_path, "hum")
    assert code == cli.EXIT_OK
    assert json.loads((out / "hum.json").read_text())["relative_final_norm"] <= 1e-2
    code, out = _run(["failure", "--grid", "200", "--T", "1"], tmp_path, "failure")
    assert code == cli.EXIT_OK


def test_stabilize_linear(tmp_path):
    code, out = _run(["stabilize", "--grid", "100", "--T", "100"], tmp_path)
    assert code == cli.EXIT_OK
    rep = json.loads((out / "stabilize_linear.json").read_text())
    assert rep["bound_holds"]


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"theta": 1.5, "grid": 60, "T": 0.5}))
    code, out = _run(["run", "conserve", "--config", str(cfg), "--grid", "40"], tmp_path)
    assert code == cli.EXIT_OK
    man = _manifest(out)
    assert man["config"]["theta"] == 1.5 and man["config"]["grid"] == 40
    toml = tmp_path / "c.toml"
    toml.write_text('theta = 0.0\ngrid = 30\nT = 0.5\n')
    code, out = _run(["run", "conserve", "--config", str(toml)], tmp_path, "toml")
    assert code == cli.EXIT_OK and _manifest(out)["config"]["theta"] == 0.0


@pytest.mark.parametrize("args", [
    ["observe", "--theta", "2.5", "--grid", "50", "--T", "1"],
    ["run", "nonsense"],
    ["decay", "--feedback", "cubic:3"],
    ["observe", "--data", "wave:1"],
])
def test_usage_errors(tmp_path, args):
    code, _ = _run(args, tmp_path)
    assert code == cli.EXIT_USAGE


def test_missing_config_is_usage_error(tmp_path):
    code, _ = _run(["run", "conserve", "--config", str(tmp_path / "none.json")], tmp_path)
    assert code == cli.EXIT_USAGE


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("DEGENWAVE_THREADS", "1")
    assert cli.worker_count() == 1
    monkeypatch.setenv("DEGENWAVE_THREADS", "zero")
    with pytest.raises(Exception):
        cli.worker_count()


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "degenwave", "spectrum", "--theta", "1.5", "--grid", "20",
                        "--out", str(tmp_path / "s")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
