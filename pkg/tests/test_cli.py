import json

import pytest

from grushin import __version__
from grushin.cli import main
from grushin.metric import KAPPA


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and __version__ in out


def test_embed(capsys):
    code, out, _ = run(capsys, "embed", "--point", "0,1.5")
    d = json.loads(out)
    assert code == 0 and d["H"] == {} and d["dist"] == 0.0 and len(d["g"]) == 3


@pytest.mark.parametrize("method, expected", [("shooting", KAPPA), ("grid", KAPPA)])
def test_distance_methods(capsys, method, expected):
    code, out, _ = run(capsys, "distance", "--from", "0,0", "--to", "0,1", "--method", method)
    assert code == 0 and json.loads(out)["distance"] == pytest.approx(expected, rel=0.01)


def test_distance_bounds(capsys):
    code, out, _ = run(capsys, "distance", "--from", "1,0", "--to", "3,0", "--method", "bounds")
    d = json.loads(out)
    assert code == 0 and (d["lo"], d["hi"]) == (1.0, 8.0)


def test_boxes_json_and_csv(capsys):
    code, out, _ = run(capsys, "boxes", "--window", "0.5,0,1,0.5", "--n-max", "1", "--stars")
    d = json.loads(out)
    assert code == 0 and d["count"] == len(d["boxes"]) > 0 and "star" in d["boxes"][0]
    code, out, _ = run(capsys, "--format", "csv", "boxes", "--window", "0.5,0,1,0.5", "--n-max", "1")
    assert code == 0 and out.splitlines()[0] == "side,n,k,x0,x1,y0,y1"


def test_colors(capsys):
    code, out, _ = run(capsys, "colors", "--tau", "2")
    d = json.loads(out)
    assert code == 0 and d["wball_size"] == sum(o["count"] for o in d["offsets"]) == 300


def test_distort_writes_file(capsys, tmp_path):
    target = tmp_path / "rep.json"
    code, out, _ = run(capsys, "--out", str(target), "distort", "--samples", "8", "--seed", "2")
    assert code == 0 and out == ""
    d = json.loads(target.read_text())
    assert set(d) == {"constants", "ratios", "strata", "skipped", "version"}


def test_distort_csv_histogram(capsys):
    code, out, _ = run(capsys, "--format", "csv", "distort", "--samples", "4")
    assert code == 0 and out.startswith("bucket_lo,bucket_hi,count")


def test_check_subset_passes(capsys):
    code, out, _ = run(capsys, "--format", "csv", "check", "--only", "whitney.star", "--only", "metric.kappa")
    rows = out.splitlines()
    assert code == 0 and rows[0] == "name,status,value,detail" and len(rows) == 3


def test_check_failure_exit_code(capsys, tmp_path):
    cfg = tmp_path / "broken.cfg"
    cfg.write_text("tau = 0.1\npalette = constant\n")
    code, out, _ = run(capsys, "--config", str(cfg), "check", "--only", "whitney.coloring_proper")
    assert code == 1 and json.loads(out)["passed"] is False


def test_band_coverage_diagnostic(capsys, tmp_path):
    cfg = tmp_path / "narrow.cfg"
    cfg.write_text("j_min = -3\nj_max = 0\n")
    code, out, _ = run(capsys, "--config", str(cfg), "check", "--only", "line.band_coverage")
    assert code == 1 and "does not cover" in out


@pytest.mark.parametrize("argv", [
    [],
    ["embed"],
    ["embed", "--point", "nonsense"],
    ["distance", "--from", "1,0", "--to", "2,0", "--method", "psychic"],
    ["--format", "csv", "embed", "--point", "1,1"],
    ["--config", "/nonexistent/file.cfg", "colors"],
    ["distort", "--samples", "-3"],
    ["boxes", "--window", "1,1,0,0"],
])
def test_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = red\n")
    code, _, err = run(capsys, "--config", str(cfg), "colors")
    assert code == 2 and "unknown config key" in err


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "grushin", "distance", "--from", "1,0", "--to", "3,0"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["distance"] == 2.0
