import subprocess
import sys

import numpy as np
import pytest

from intbounds.cli import main
from intbounds.montecarlo import DgpSpec, dgp_sample


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    s = dgp_sample(DgpSpec(2, 400), 3)
    path = tmp_path_factory.mktemp("data") / "synthetic.csv"
    rows = "".join(f"{a:.10f},{b:.0f},{c:.10f}\n" for a, b, c in zip(s.y, s.z, s.v1))
    path.write_text("y,z,v\n" + rows)
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_end_to_end_both_sides_with_parameter_interval(data_csv, tmp_path, capsys):
    curve = tmp_path / "curve.csv"
    code, out, _ = run(["estimate", data_csv, "--side", "both", "--ci", "parameter",
                        "--p", "0.5,0.95", "--R", 2000, "--emit-curve", curve], capsys)
    assert code == 0
    lines = out.splitlines()
    assert any(l.startswith("[lower] p=0.5 theta_p=") for l in lines)
    assert any(l.startswith("[upper] p=0.95 theta_p=") for l in lines)
    ci = [l for l in lines if l.startswith("[ci] kind=parameter")]
    assert len(ci) == 1 and "p_hat=" in ci[0]
    lo = float(ci[0].split("lo=")[1].split()[0])
    hi = float(ci[0].split("hi=")[1].split()[0])
    assert lo < hi
    rows = curve.read_text().splitlines()
    assert rows[0] == "side,v,theta_hat,se,corrected,in_Veps"
    assert len(rows) == 1 + 2 * 200


def test_local_linear_lower_side(data_csv, capsys):
    code, out, _ = run(["estimate", "--side", "lower", "--estimator", "local-linear",
                        "--p", "0.5,0.95", "--alpha", "0.1", "--R", 2000, data_csv], capsys)
    assert code == 0 and "estimator=local-linear" in out
    lo50 = float(out.split("p=0.5 theta_p=")[1].split()[0])
    lo95 = float(out.split("p=0.95 theta_p=")[1].split()[0])
    assert lo95 <= lo50


def test_same_seed_is_byte_identical(data_csv, capsys):
    argv = ["estimate", data_csv, "--side", "both", "--ci", "set", "--R", 2000, "--seed", 4]
    assert run(argv, capsys)[1] == run(argv, capsys)[1]


def test_manifest_rerun_reproduces(data_csv, tmp_path, capsys):
    od = tmp_path / "first"
    code, out, _ = run(["estimate", data_csv, "--side", "both", "--ci", "set", "--v-star", 1.5,
                        "--R", 2000, "--out", od], capsys)
    assert code == 0 and (od / "manifest.json").exists()
    code, again, _ = run(["estimate", data_csv, "--manifest", od / "manifest.json"], capsys)
    assert code == 0 and again == out == (od / "results.txt").read_text()


def test_config_file_and_override(data_csv, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\nestimator = series\nside = upper\nR = 2000\np = 0.9\nK = 7\n")
    code, out, _ = run(["estimate", data_csv, "--config", cfg], capsys)
    assert code == 0 and "smoothing=7" in out and "p=0.9 " in out
    code, out, _ = run(["estimate", data_csv, "--config", cfg, "--K", 9], capsys)
    assert "smoothing=9" in out


def test_discrete_estimator(tmp_path, capsys):
    rng = np.random.default_rng(0)
    v = rng.integers(0, 4, 300)
    y = rng.normal(size=300) + v
    path = tmp_path / "d.csv"
    path.write_text("y,z,v\n" + "".join(f"{a:.8f},1,{b}\n" for a, b in zip(y, v)))
    code, out, _ = run(["estimate", path, "--estimator", "discrete", "--side", "upper",
                        "--R", 2000], capsys)
    assert code == 0 and "estimator=discrete" in out


def test_bad_data_reports_row_and_column(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("y,z,v\n1.0,1,0.5\n2.0,abc,0.1\n")
    code, _, err = run(["estimate", path], capsys)
    assert code == 2 and ":3:" in err and "'z'" in err


def test_bad_header(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    assert run(["estimate", path], capsys)[0] == 2


def test_usage_errors(data_csv, capsys):
    assert run(["mc", "--dgp", 3, "--reps", 1], capsys)[0] != 0
    assert run(["estimate", data_csv, "--side", "lower", "--ci", "set"], capsys)[0] == 1
    assert run(["nonsense"], capsys)[0] == 1


def test_mc_block_and_outputs(tmp_path, capsys):
    od = tmp_path / "mc"
    code, out, _ = run(["mc", "--dgp", 1, "--n", 300, "--reps", 3, "--R", 1000,
                        "--estimate-V", "no", "--seed", 7, "--out", od], capsys)
    assert code == 0 and "Analog" in out and "New" in out
    csv_text = (od / "metrics.csv").read_text().splitlines()
    assert len(csv_text) == 3 and (od / "manifest.json").exists()
    code, again, _ = run(["mc", "--manifest", od / "manifest.json"], capsys)
    assert again == out


def test_cv_singleton_fixture(capsys):
    code, out, _ = run(["cv", "--fixture", "singleton", "--p", "0.95", "--R", 100_000,
                        "--seed", 1], capsys)
    assert code == 0
    k = float(out.splitlines()[1].split()[1])
    assert abs(k - 1.645) < 0.05
    assert run(["cv", "--fixture", "singleton", "--p", "0.95", "--R", 100_000, "--seed", 1],
               capsys)[1] == out


def test_cv_kernel_fixture_columns(capsys):
    code, out, _ = run(["cv", "--fixture", "kernel", "--p", "0.95", "--R", 2000], capsys)
    header = out.splitlines()[0].split()
    assert code == 0
    assert header[2:] == ["kernel-gumbel", "kernel-gumbel-approx", "kernel-hardle-linton"]


def test_cv_from_saved_artifact(data_csv, tmp_path, capsys):
    stem = tmp_path / "art"
    run(["estimate", data_csv, "--side", "upper", "--R", 2000, "--save-artifact", stem], capsys)
    art = tmp_path / "art_upper.npz"
    code, out, _ = run(["cv", art, "--p", "0.5,0.95", "--R", 2000], capsys)
    assert code == 0 and "series-exponential" in out.splitlines()[0]
    assert run(["cv", tmp_path / "missing.npz"], capsys)[0] == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "intbounds.cli", "cv", "--fixture", "singleton",
                           "--p", "0.5", "--R", "2000"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith(" ")
