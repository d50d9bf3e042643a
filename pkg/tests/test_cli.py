import csv
import io
import json
import subprocess
import sys

import pytest

from ballbernstein.cli import main, manifest_path, render_csv, render_json


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_eigen_exit_codes(capsys):
    code, out, _ = run(["verify-eigen", "--d", "2", "--mu", "0", "--n-max", "6"], capsys)
    report = json.loads(out)
    assert code == 0 and report["passed"]
    assert [s["params"]["basis"] for s in report["sweeps"]] == ["P", "Q"]
    assert run(["verify-eigen", "--d", "2", "--mu", "-1.5", "--n-max", "3"], capsys)[0] == 2
    assert run(["verify-eigen", "--d", "5", "--basis", "Q", "--n-max", "3"], capsys)[0] == 2


def test_usage_errors(capsys):
    assert run(["no-such-command"], capsys)[0] == 2
    assert run(["sharp-l2", "--kind", "bogus"], capsys)[0] == 2
    assert run(["lp-scan", "--p", "3"], capsys)[0] == 2
    assert run(["lp-scan", "--domain", "simplex", "--kappa", "0,0"], capsys)[0] == 2
    assert run(["transfer-check", "--deg", "-1"], capsys)[0] == 2
    assert run(["--version"], capsys)[0] == 0


def test_sharp_full_rows(capsys):
    code, out, err = run(["sharp-l2", "--d", "2", "--mu", "0", "--n-max", "6", "--kind", "full"], capsys)
    rows = {r["n"]: r for r in json.loads(out)["rows"]}
    assert code == 0
    assert rows[2]["computed"] == pytest.approx(8.0, rel=1e-12)
    assert "n" in err.splitlines()[0]


def test_sharp_rot_row_three(capsys):
    code, out, _ = run(["sharp-l2", "--kind", "rot", "--d", "2", "--mu", "0", "--format", "csv"], capsys)
    rows = {int(r["n"]): r for r in csv.DictReader(io.StringIO(out))}
    assert code == 0
    assert float(rows[3]["computed"]) == pytest.approx(14.0, rel=1e-12)


def test_sharp_new_radial_row_four(capsys):
    code, out, _ = run(["sharp-l2", "--kind", "new-radial", "--d", "3", "--mu", "1", "--n-max", "4",
                        "--quiet"], capsys)
    rows = {r["n"]: r for r in json.loads(out)["rows"]}
    assert rows[4]["computed"] == pytest.approx(36.0, rel=1e-10)
    assert rows[2]["passed"] and rows[4]["passed"]
    # odd degrees sit below the predicted constant, so the suite reports failure
    assert not rows[1]["passed"] and code == 1


def test_transfer_check(capsys):
    code, out, _ = run(["transfer-check", "--d", "2", "--deg", "6"], capsys)
    assert code == 0 and json.loads(out)["max_residual"] <= 1e-10


def test_lp_scan_short(capsys):
    code, out, err = run(["lp-scan", "--domain", "simplex", "--d", "2", "--kappa=-0.5,-0.5,0", "--p", "inf",
                          "--n-max", "7", "--n-random", "4"], capsys)
    report = json.loads(out)
    assert code == 0 and report["passed"]
    assert [e["n"] for e in report["per_n"]] == list(range(2, 8))
    assert "slope" in err


def test_extremal_check(capsys):
    code, out, _ = run(["extremal-check", "--domain", "simplex", "--d", "2", "--grid", "30",
                        "--baran-degrees", "3", "--baran-count", "4", "--baran-samples", "100"], capsys)
    report = json.loads(out)
    assert code == 0 and report["passed"]


def test_dump_rule(capsys, tmp_path):
    out = tmp_path / "rule.json"
    code, _, _ = run(["dump-rule", "--domain", "ball", "--d", "2", "--mu", "0.5", "--degree", "6",
                      "--out", str(out)], capsys)
    rule = json.loads(out.read_text())
    assert code == 0 and rule["max_moment_error"] <= 1e-12
    assert json.loads((tmp_path / "rule.json.manifest.json").read_text())["suite"] == "dump-rule"


def test_manifest_and_rerun(capsys, tmp_path):
    out = tmp_path / "sharp.json"
    code, _, _ = run(["sharp-l2", "--d", "3", "--mu", "0.5", "--n-max", "4", "--kind", "rot",
                      "--out", str(out)], capsys)
    assert code == 0
    manifest = json.loads((tmp_path / "sharp.json.manifest.json").read_text())
    assert manifest["suite"] == "sharp-l2" and manifest["outputs"] == [str(out)]
    assert {"argv", "params", "seed", "version", "timestamp"} <= set(manifest)
    code, _, err = run(["rerun", manifest_path(str(out))], capsys)
    assert code == 0 and "identical" in err
    copy = tmp_path / "copy.json"
    code, _, _ = run(["rerun", manifest_path(str(out)), "--out", str(copy)], capsys)
    assert code == 0 and copy.read_bytes() == out.read_bytes()


def test_rerun_detects_tampering(capsys, tmp_path):
    out = tmp_path / "t.json"
    run(["transfer-check", "--deg", "3", "--count", "3", "--out", str(out)], capsys)
    out.write_text(out.read_text().replace("transfer-check", "tampered"))
    code, _, err = run(["rerun", manifest_path(str(out))], capsys)
    assert code == 1 and "DIFFERS" in err


def test_rendering_round_trips():
    text = render_json({"b": 0.1 + 0.2, "a": float("inf")})
    assert text.index('"a"') < text.index('"b"')
    obj = json.loads(text)
    assert obj["b"] == 0.1 + 0.2 and obj["a"] == "inf"
    rows = render_csv([{"x": 1 / 3, "n": 2}], ["n", "x"])
    assert float(rows.splitlines()[1].split(",")[1]) == 1 / 3


def test_console_entry_point_and_thread_cap():
    env = {"BBL_THREADS": "1", "PATH": "/usr/bin:/bin:/usr/local/bin"}
    res = subprocess.run([sys.executable, "-m", "ballbernstein.cli", "verify-eigen", "--d", "3", "--mu", "0.5",
                          "--n-max", "3", "--quiet"], capture_output=True, text=True, env=env, timeout=300)
    assert res.returncode == 0 and json.loads(res.stdout)["passed"]
