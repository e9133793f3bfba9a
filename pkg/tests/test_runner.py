import os
import subprocess
import sys

import numpy as np
import pytest

from elastobranch.runner import (CSV_HEADER, EXIT_CONFIG, EXIT_INVERTED,
                                 EXIT_OK, EXIT_STALL, ConfigError, RunConfig,
                                 run, summarize)

SHEAR_INI = """
[material]
model = neo-hookean
mu = 1.0

[mesh]
divisions = 2 2 2

[loading]
a_family = shear
a_rate = 1.0

[continuation]
lam_target = 1.0
ds0 = 0.2
ds_max = 0.3
se_dirs = 16
adn_dirs = 16

[probes]
enabled = true
global_min_samples = 300
quasiconvexity_steps = 100
uniqueness_starts = 3

[output]
directory = {out}
write_vtk_every = 2
"""


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_golden_csv_header():
    assert CSV_HEADER == ("lambda,norm_u_inf,norm_gradu_inf,norm_p_inf,"
                          "min_detF,max_det_dev,se_margin,adn_min_abs,"
                          "jac_det_sign,newton_iters,ds")


def test_config_defaults(tmp_path):
    cfg = RunConfig.from_file(_write(tmp_path, "[material]\n"))
    assert cfg["material", "model"] == "neo-hookean"
    assert np.array_equal(cfg["mesh", "divisions"], [3, 3, 3])
    assert cfg["output", "workers"] == 1
    mat = cfg.material()
    assert mat.mu == 1.0
    settings = cfg.settings()
    assert settings.mode == "natural"


def test_config_field_mapping(tmp_path):
    text = """
[material]
model = mooney-rivlin
c1 = 0.4
c2 = 0.2

[loading]
b_family = dead
b_scale = 2.5
b_direction = 1 0 0
b_ramp = 0 3 0

[continuation]
mode = arclength
lam_target = 0.5
"""
    cfg = RunConfig.from_file(_write(tmp_path, text))
    mat = cfg.material()
    assert (mat.c1, mat.c2) == (0.4, 0.2)
    prog = cfg.program()
    assert prog.b_family == "dead"
    assert np.array_equal(prog.b_ramp, [0.0, 3.0, 0.0])
    assert cfg.settings().mode == "arclength"
    assert cfg.settings().lam_target == 0.5


@pytest.mark.parametrize("text", [
    "[material2]\nmu = 1\n",
    "[material]\nmu2 = 1\n",
    "[material]\nmodel = hencky\n",
    "[material]\nmu = -1\n",
    "[mesh]\ndivisions = 1 1 1\n",
    "[mesh]\ndivisions = 2 2\n",
    "[mesh]\ndivisions = a b c\n",
    "[continuation]\nnewton_max_iter = two\n",
    "[continuation]\nds_min = 0.5\nds0 = 0.1\n",
    "[continuation]\nmode = tangent\n",
    "[continuation]\nse_dirs = 4\n",
    "[probes]\nenabled = maybe\n",
    "[output]\nworkers = 2\n",
])
def test_config_rejections(tmp_path, text):
    with pytest.raises(ConfigError):
        RunConfig.from_file(_write(tmp_path, text))


def test_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_file(str(tmp_path / "absent.ini"))


def test_run_shear_study_end_to_end(tmp_path):
    cfg = _write(tmp_path, SHEAR_INI.format(out="out"))
    assert run(cfg) == EXIT_OK

    out = tmp_path / "out"
    names = sorted(os.listdir(out))
    assert "branch.csv" in names
    assert "summary.txt" in names
    assert "snapshot_0002.vtk" in names and "snapshot_0004.vtk" in names

    lines = (out / "branch.csv").read_text().splitlines()
    assert lines[0] == CSV_HEADER
    rows = [ln.split(",") for ln in lines[1:]]
    assert len(rows) >= 3
    assert float(rows[0][0]) == 0.0
    assert abs(float(rows[-1][0]) - 1.0) < 1e-12
    assert max(float(r[1]) for r in rows) < 1e-10

    summary = (out / "summary.txt").read_text()
    for needle in ("star_shape: min=0.5 passed=True", "objectivity:",
                   "homotopy_sweep:", "branch: status=completed",
                   "parity_events: 0", "probe_global_min:",
                   "probe_quasiconvexity:", "probe_uniqueness:",
                   "exit_code: 0"):
        assert needle in summary


def test_run_is_deterministic(tmp_path):
    c1 = _write(tmp_path, SHEAR_INI.format(out="out_a"), "a.ini")
    c2 = _write(tmp_path, SHEAR_INI.format(out="out_b"), "b.ini")
    assert run(c1) == EXIT_OK
    assert run(c2) == EXIT_OK
    csv_a = (tmp_path / "out_a" / "branch.csv").read_bytes()
    csv_b = (tmp_path / "out_b" / "branch.csv").read_bytes()
    assert csv_a == csv_b
    vtk_a = (tmp_path / "out_a" / "snapshot_0002.vtk").read_bytes()
    vtk_b = (tmp_path / "out_b" / "snapshot_0002.vtk").read_bytes()
    assert vtk_a == vtk_b


def test_run_config_error_exit_and_summary(tmp_path):
    cfg = _write(tmp_path, "[mesh]\ndivisions = 1 1 1\n")
    assert run(cfg) == EXIT_CONFIG
    summary = (tmp_path / "summary.txt").read_text()
    assert "status: config error" in summary
    assert "divisions" in summary
    assert run(str(tmp_path / "missing.ini")) == EXIT_CONFIG


def test_run_stall_exit(tmp_path):
    text = """
[material]
model = neo-hookean

[loading]
b_family = dead
b_scale = 3.0
b_direction = 1 0 0
b_ramp = 0 2 0

[mesh]
divisions = 2 2 2

[continuation]
lam_target = 1.0
ds0 = 0.05
ds_min = 0.04
newton_tol = 1e-14
newton_max_iter = 1
se_dirs = 16
adn_dirs = 16

[probes]
enabled = false

[output]
directory = out
"""
    assert run(_write(tmp_path, text)) == EXIT_STALL
    summary = (tmp_path / "out" / "summary.txt").read_text()
    assert "status: stall" in summary
    assert "exit_code: 3" in summary


def test_run_inversion_exit(tmp_path):
    text = """
[material]
model = neo-hookean

[loading]
b_family = dead
b_scale = 50.0
b_direction = 1 0 0
b_ramp = 0 4 0

[mesh]
divisions = 2 2 2

[continuation]
lam_target = 50
ds0 = 2.0
ds_min = 0.5
ds_max = 4.0
newton_max_iter = 8
se_dirs = 16
adn_dirs = 16

[probes]
enabled = false

[output]
directory = out
"""
    assert run(_write(tmp_path, text)) == EXIT_INVERTED
    summary = (tmp_path / "out" / "summary.txt").read_text()
    assert "status: inverted" in summary
    assert "exit_code: 4" in summary


def test_summarize_digest(tmp_path):
    row = ("0.5,1e-16,2e-16,3e-16,1,2.2e-16,0.99,0.43,-1,2,0.25")
    path = tmp_path / "branch.csv"
    path.write_text(CSV_HEADER + "\n" + row + "\n")
    text = summarize(str(path))
    assert "steps: 1" in text
    assert "injectivity held (min det = 1)" in text
    assert "no parity events" in text
    assert "ellipticity margin >= 0.99" in text

    path.write_text(CSV_HEADER + "\n")
    assert summarize(str(path)) == "no accepted steps"

    path.write_text("lambda,oops\n1,2\n")
    with pytest.raises(ConfigError):
        summarize(str(path))
    path.write_text("")
    with pytest.raises(ConfigError):
        summarize(str(path))


def test_summarize_reports_parity_events(tmp_path):
    rows = ["0,0,0,0,1,0,1,1,1,0,0",
            "0.5,0,0,0,1,0,1,1,-1,2,0.5"]
    path = tmp_path / "branch.csv"
    path.write_text(CSV_HEADER + "\n" + "\n".join(rows) + "\n")
    text = summarize(str(path))
    assert "parity events: 1" in text
    assert "possible singular points" in text


def test_cli_process_contract(tmp_path):
    cfg = _write(tmp_path, SHEAR_INI.format(out="cli_out"))
    env = dict(os.environ, PYTHONPATH=os.pathsep.join(sys.path))
    r = subprocess.run([sys.executable, "-m", "elastobranch", "run", cfg],
                       capture_output=True, text=True, env=env)
    assert r.returncode == EXIT_OK

    csv_path = str(tmp_path / "cli_out" / "branch.csv")
    r = subprocess.run([sys.executable, "-m", "elastobranch", "summarize",
                        csv_path], capture_output=True, text=True, env=env)
    assert r.returncode == 0
    assert "injectivity held" in r.stdout

    r = subprocess.run([sys.executable, "-m", "elastobranch", "summarize",
                        str(tmp_path / "nope.csv")],
                       capture_output=True, text=True, env=env)
    assert r.returncode == EXIT_CONFIG

    empty = tmp_path / "empty.csv"
    empty.write_text(CSV_HEADER + "\n")
    r = subprocess.run([sys.executable, "-m", "elastobranch", "summarize",
                        str(empty)], capture_output=True, text=True, env=env)
    assert r.returncode == EXIT_CONFIG
    assert "no accepted steps" in r.stdout
