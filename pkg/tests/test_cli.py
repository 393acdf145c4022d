import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from diracweyl.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main

SCALAR_GBDT = """\
gbdt:
  m1: 1
  m2: 1
  alpha: [[0]]
  sigma0: [[1]]
  theta1: [[1]]
  theta2: [[1]]
"""

SCALAR_REAL = """\
realization:
  C: [[[0, -1]]]
  A: [[[0, -1]]]
  B: [[1]]
"""


@pytest.fixture
def job(tmp_path):
    def write(body, name="job.yaml"):
        path = tmp_path / name
        path.write_text(body)
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def cval(row, name):
    return complex(float(row[name + "_re"]), float(row[name + "_im"]))


def test_inverse_scalar(job, capsys):
    code, out, _ = run(capsys, "inverse", "--config", job(SCALAR_REAL))
    assert code == EXIT_OK
    doc = json.loads(out)
    p = doc["params"]
    assert np.allclose(p["alpha"], [[[0, 0]]], atol=1e-12)
    assert np.allclose(p["sigma0"], [[[1, 0]]], atol=1e-12)
    assert np.allclose(p["theta1"], [[[1, 0]]], atol=1e-12)
    assert np.allclose(p["theta2"], [[[1, 0]]], atol=1e-12)
    assert doc["potential"]["x"][0] == 0.0
    assert np.allclose(doc["potential"]["v"][0], [[[0, -2]]], atol=1e-12)


def test_inverse_verify_report(job, capsys):
    code, out, _ = run(capsys, "inverse", "--config", job(SCALAR_REAL), "--verify")
    rep = json.loads(out)["verify"]
    assert code == EXIT_OK
    assert rep["riccati_residual"] <= 1e-12
    assert rep["closed_form_roundtrip"] <= 1e-12
    assert rep["theta_spectrum_ok"] is True


def test_gen_potential_csv_verify_on_stderr(job, capsys):
    cfg = job("command: gen-potential\n" + SCALAR_GBDT + "grid: {x_max: 5, step: 0.5}\n")
    code, out, err = run(capsys, "gen-potential", "--config", cfg, "--verify")
    assert code == EXIT_OK
    table = rows(out)
    assert list(table[0]) == ["x", "v11_re", "v11_im"]
    for r in table:
        x = float(r["x"])
        assert cval(r, "v11") == pytest.approx(-2j / (1 + 2 * x), abs=1e-12)
    assert json.loads(err)["identity_residual"] <= 1e-12


def test_weyl_eval_zero_theta2(job, capsys):
    body = SCALAR_GBDT.replace("alpha: [[0]]", "alpha: [[[0, 0.5]]]").replace(
        "theta2: [[1]]", "theta2: [[0]]")
    code, out, _ = run(capsys, "weyl-eval", "--config", job(body + "z_points: [[0, 1], [1, 1], 3]\n"))
    assert code == EXIT_OK
    table = rows(out)
    assert len(table) == 3
    assert all(cval(r, "phi11") == 0 for r in table)


def test_weyl_eval_scalar_values(job, capsys):
    _, out, _ = run(capsys, "weyl-eval", "--config", job(SCALAR_GBDT + "z_points: [[0, 1], [0, 2]]\n"))
    a, b = rows(out)
    assert cval(a, "phi11") == pytest.approx(-0.5, abs=1e-12)
    assert cval(b, "phi11") == pytest.approx(-1 / 3, abs=1e-12)


def test_direct_solve(job, capsys):
    body = SCALAR_GBDT + "grid: {x_max: 20, step: 0.001}\nz_points: [[0, 2]]\n"
    code, out, _ = run(capsys, "direct-solve", "--config", job(body))
    (r,) = rows(out)
    assert code == EXIT_OK
    assert abs(cval(r, "phi11") + 1 / 3) <= float(r["radius_bound"])


def test_roundtrip_scalar_passes(job, capsys):
    body = SCALAR_REAL + "grid: {x_max: 50, step: 0.001}\nz_points: [[0, 2]]\n"
    code, out, _ = run(capsys, "roundtrip", "--config", job(body))
    (r,) = rows(out)
    assert code == EXIT_OK
    assert r["pass"] == "1"
    assert float(r["deviation"]) <= float(r["radius_bound"])


def test_roundtrip_is_byte_identical_and_jobs_do_not_matter(job, capsys):
    body = SCALAR_REAL + "grid: {x_max: 10, step: 0.01}\nz_points: [[0, 1], [1, 2], [0, 3]]\n"
    cfg = job(body)
    outs = [run(capsys, "roundtrip", "--config", cfg, *extra)[1] for extra in ([], [], ["--jobs", "3"])]
    assert outs[0] == outs[1] == outs[2]


def test_bound_states_doc(job, capsys):
    from _instances import bound_state_instance
    p = bound_state_instance()

    def mat(M):
        return json.dumps([[[c.real, c.imag] for c in row] for row in np.asarray(M)])

    body = (f"gbdt:\n  m1: 1\n  m2: 1\n  alpha: {mat(p.alpha)}\n  sigma0: {mat(p.sigma0)}\n"
            f"  theta1: {mat(p.theta1)}\n  theta2: {mat(p.theta2)}\n"
            "grid: {x_max: 10, step: 0.01}\n")
    code, out, _ = run(capsys, "bound-states", "--config", job(body))
    doc = json.loads(out)
    assert code == EXIT_OK
    (s,) = doc["states"]
    assert s["lam"] == pytest.approx(0.7, abs=1e-9)
    assert s["g0_norm"] <= 1e-10
    assert doc["theta_spectrum_ok"] is True


def test_output_file_relative_to_config(job, capsys, tmp_path):
    body = "command: gen-potential\n" + SCALAR_GBDT + "grid: {x_max: 1, step: 0.5}\noutput: {path: v.csv}\n"
    code, out, _ = run(capsys, "gen-potential", "--config", job(body))
    assert code == EXIT_OK and out == ""
    assert (tmp_path / "v.csv").read_text().startswith("x,v11_re,v11_im\n")


def test_out_flag_and_format_override(job, capsys, tmp_path):
    target = tmp_path / "w.json"
    code, _, _ = run(capsys, "weyl-eval", "--config", job(SCALAR_GBDT + "z_points: [[0, 1]]\n"),
                     "--out", str(target), "--format", "doc")
    assert code == EXIT_OK
    assert json.loads(target.read_text())["points"][0]["z"] == [0.0, 1.0]


@pytest.mark.parametrize("body", [
    "gbdt: {m1: 1}\n",
    SCALAR_GBDT + SCALAR_REAL + "z_points: [1]\n",
    SCALAR_REAL + "grid: {x_max: 5, step: 0.1}\nz_points: [[0, -1]]\n",
    "not: [valid\n",
    "",
])
def test_malformed_configs_exit_2(job, capsys, body):
    code, out, err = run(capsys, "roundtrip", "--config", job(body))
    assert code == EXIT_CONFIG
    assert out == ""
    assert err.startswith("ConfigInvalid")


def test_missing_config_file_exits_2(tmp_path, capsys):
    assert run(capsys, "inverse", "--config", str(tmp_path / "absent.yaml"))[0] == EXIT_CONFIG


def test_usage_errors_exit_2(job, capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == EXIT_CONFIG
    with pytest.raises(SystemExit) as info:
        main(["inverse"])
    assert info.value.code == EXIT_CONFIG
    assert run(capsys, "inverse", "--config", job(SCALAR_REAL), "--jobs", "0")[0] == EXIT_CONFIG


def test_numerical_error_exits_3(job, capsys):
    # violates the generating identity
    body = SCALAR_GBDT.replace("theta2: [[1]]", "theta2: [[0]]") + "z_points: [[0, 1]]\n"
    code, out, err = run(capsys, "weyl-eval", "--config", job(body))
    assert code == EXIT_NUMERIC
    assert out == ""
    assert err.startswith("IdentityViolated")


def test_pole_in_upper_half_plane_exits_3(job, capsys):
    body = "realization:\n  C: [[1]]\n  A: [[[0, 1]]]\n  B: [[1]]\n"
    code, _, err = run(capsys, "inverse", "--config", job(body))
    assert code == EXIT_NUMERIC
    assert err.startswith("PoleInUpperHalfPlane")


def test_console_script_entry_point(job):
    cfg = job(SCALAR_GBDT + "z_points: [[0, 1]]\n")
    proc = subprocess.run([sys.executable, "-m", "diracweyl.cli", "weyl-eval", "--config", cfg],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "z_re,z_im,phi11_re,phi11_im"
