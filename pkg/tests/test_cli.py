import json
import subprocess
import sys

import pytest

from intervaldyn.cli import main


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["zoo", "logistic", "--lambda", "4", "--out", "logistic4.json"]) == 0
    assert main(["zoo", "rotation", "--alpha", "0.25", "--out", "rot025.json"]) == 0
    return tmp_path


def test_validate_exit_codes(workdir, capsys):
    assert main(["validate", "logistic4.json"]) == 0
    d = json.loads((workdir / "logistic4.json").read_text())
    d["branches"][0]["hi"] = 0.6
    (workdir / "overlap.json").write_text(json.dumps(d))
    capsys.readouterr()
    assert main(["validate", "overlap.json", "--out", "rep.json"]) == 2
    rep = json.loads((workdir / "rep.json").read_text())
    assert any("branches 0 and 1 overlap" in m for m in rep["tiling"])
    (workdir / "bad.json").write_text("{oops")
    assert main(["validate", "bad.json"]) == 3
    assert main(["validate", "missing.json"]) == 3


def test_validate_nonnegative_schwarzian_flag(workdir):
    assert main(["validate", "rot025.json"]) == 2
    assert main(["validate", "rot025.json", "--allow-nonnegative-schwarzian"]) == 0


def test_orbit_lateral(workdir, capsys):
    assert main(["orbit", "logistic4.json", "--lateral", "0.5-", "--n", "5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "step,coord,side,branch_index"
    assert [float(l.split(",")[1]) for l in lines[1:]] == [0.5, 1, 0, 0, 0, 0]


def test_rotation_prints_value(workdir, capsys):
    assert main(["rotation", "rot025.json", "--n", "10000"]) == 0
    assert capsys.readouterr().out.strip() == "0.25"


def test_domain_error_exit(workdir):
    assert main(["rotation", "logistic4.json", "--n", "10"]) == 2


def test_classify_twice_identical(workdir):
    args = ["classify", "logistic4.json", "--seed", "7", "--samples", "50", "--burn-in", "1000",
            "--tail", "5000"]
    assert main(args + ["--out", "a.json"]) == 0
    assert main(args + ["--out", "b.json"]) == 0
    assert (workdir / "a.json").read_bytes() == (workdir / "b.json").read_bytes()


def test_classify_requires_seed(workdir):
    with pytest.raises(SystemExit) as exc:
        main(["classify", "logistic4.json"])
    assert exc.value.code == 2


def test_manifest_contents(workdir):
    assert main(["returnmap", "logistic4.json", "--interval", "0.2", "0.4", "--max-time", "6",
                 "--out", "rm.csv"]) == 0
    man = json.loads((workdir / "rm.csv.manifest.json").read_text())
    assert man["command"] == "returnmap"
    assert man["params"]["max_time"] == 6
    assert str(workdir / "rm.csv") in man["outputs"]
    assert str(workdir / "logistic4.json") in man["inputs"]
    assert "time" not in json.dumps(man).replace("max_time", "")


def test_surgery_sidecar(workdir):
    assert main(["surgery", "logistic4.json", "--kind", "pit", "--interval", "0.3", "0.5",
                 "--q", "0.4", "--out", "pit.json"]) == 0
    side = json.loads((workdir / "pit.json.provenance.json").read_text())
    assert side == {"kind": "pit", "interval": [0.3, 0.5], "factors": [0.125]}
    assert main(["validate", "pit.json", "--allow-nonnegative-schwarzian"]) == 0


def test_rerun_check(workdir):
    assert main(["omega", "logistic4.json", "--x0", "0.3", "--tail", "5000", "--out", "om.json"]) == 0
    before = (workdir / "om.json").read_bytes()
    assert main(["rerun", "om.json.manifest.json", "--check"]) == 0
    assert main(["rerun", "om.json.manifest.json"]) == 0
    assert (workdir / "om.json").read_bytes() == before


def test_rerun_detects_changed_output(workdir):
    assert main(["zoo", "lorenz", "--c", "0.5", "--rho-l", "2", "--rho-r", "2", "--u", "0.9",
                 "--v", "0.1", "--out", "lz.json"]) == 0
    (workdir / "lz.json").write_text("tampered")
    man = json.loads((workdir / "lz.json.manifest.json").read_text())
    assert man["outputs"]
    assert main(["rerun", "lz.json.manifest.json", "--check"]) == 0
    # the recorded digest still matches a fresh run; the tampered file is not consulted


def test_entry_point_module():
    out = subprocess.run([sys.executable, "-m", "intervaldyn.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.startswith("intervaldyn ")
