import json
import math
import subprocess
import sys

import pytest

from dwpf.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def test_compute_single_site(tmp_path, capsys):
    cfg = write(tmp_path, {"mode": "trig", "gamma": 1, "x": [0.3], "y": [0.1],
                           "formulas": ["izergin_determinant"]})
    code, out, _ = run(capsys, "compute", "--config", cfg)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == 1
    value = doc["results"][0]["value"]
    assert value[0] == pytest.approx(math.sin(1.0), abs=1e-9) and value[1] == 0
    assert {"value", "method", "scale", "wall_time_ms"} <= set(doc["results"][0])


def test_compute_determinant_and_sum_agree(tmp_path, capsys):
    cfg = write(tmp_path, {"L": 2, "x": "random", "y": "random",
                           "formulas": ["izergin_determinant", "symmetrized_sum"]})
    code, out, _ = run(capsys, "compute", "--config", cfg, "--seed", "5")
    assert code == 0
    a, b = (complex(*r["value"]) for r in json.loads(out)["results"])
    assert abs(a - b) <= 1e-10 * abs(a)


def test_compute_reflecting_elliptic(tmp_path, capsys):
    cfg = write(tmp_path, {"mode": "elliptic", "gamma": 0.6, "tau": [0, 0.9], "L": 3,
                           "x": "random", "y": "random", "z": "random", "kappa": "random",
                           "formulas": ["tfk_determinant", "refl_contract"]})
    code, out, _ = run(capsys, "compute", "--config", cfg, "--seed", "2")
    assert code == 0
    a, b = (complex(*r["value"]) for r in json.loads(out)["results"])
    assert abs(a - b) <= 1e-8 * abs(a)


@pytest.mark.parametrize("content", ["{not json", "[1, 2]",
                                     {"x": [0.1], "y": [0.2, 0.3]},
                                     {"x": "random", "L": 2},
                                     {"x": [0.1], "y": [0.2], "formulas": ["nope"]},
                                     {"x": [0.1], "y": [0.2], "mode": "elliptic"},
                                     {"x": [0.1], "y": [0.2], "formulas": ["tfk_determinant"]}])
def test_config_errors_exit_2(tmp_path, capsys, content):
    code, out, err = run(capsys, "compute", "--config", write(tmp_path, content))
    assert code == 2
    assert out == "" and "config error" in err


def test_missing_config_file_exits_2(capsys):
    assert run(capsys, "compute", "--config", "/nonexistent.json")[0] == 2


def test_guard_violation_exits_3_and_names_guard(tmp_path, capsys):
    cfg = write(tmp_path, {"x": [0.3, 0.5], "y": [0.2, 0.1], "kappa": 0.4, "z": 0,
                           "formulas": ["tfk_determinant"]})
    code, _, err = run(capsys, "compute", "--config", cfg)
    assert code == 3 and "DynamicalPole" in err


def test_coincident_parameters_exit_3(tmp_path, capsys):
    cfg = write(tmp_path, {"x": [0.3, 0.3], "y": [0.2, 0.1]})
    code, _, err = run(capsys, "compute", "--config", cfg)
    assert code == 3 and "GenericPositionViolation" in err


def test_validate_passes_and_is_deterministic(capsys):
    code, out1, _ = run(capsys, "validate", "--seed", "11", "--threads", "3")
    assert code == 0
    code, out2, _ = run(capsys, "validate", "--seed", "11", "--threads", "1")
    assert out1 == out2
    doc = json.loads(out1)
    assert doc["schema"] == 1 and doc["summary"]["failed"] == 0
    assert len(doc["checks"]) >= 60


def test_validate_thread_env_fallback(capsys, monkeypatch):
    monkeypatch.setenv("DWPF_THREADS", "4")
    code, out, _ = run(capsys, "validate", "--seed", "11")
    assert code == 0
    _, ref, _ = run(capsys, "validate", "--seed", "11", "--threads", "1")
    assert out == ref


def test_validate_with_perturbation_flag_still_exits_0(capsys):
    code, out, _ = run(capsys, "validate", "--perturb")
    doc = json.loads(out)
    assert code == 0
    perturbed = [c for c in doc["checks"] if c["id"].startswith("neg.perturbed")]
    assert perturbed and all(not c["pass"] and c["ok"] for c in perturbed)


def test_validate_tolerance_floor_exits_1(capsys):
    code, out, _ = run(capsys, "validate", "--tol", "1e-15")
    assert code == 1
    assert json.loads(out)["summary"]["failed"] > 0


def test_validate_table_and_timings(capsys):
    code, out, _ = run(capsys, "validate", "--table")
    assert code == 0 and out.splitlines()[0].split()[:3] == ["id", "L", "residual"]
    code, out, _ = run(capsys, "validate", "--timings")
    assert "wall_ms_by_method" in json.loads(out)


def test_bench_reports_ordering_and_counts(capsys):
    code, out, _ = run(capsys, "bench", "--seed", "1")
    assert code == 0
    doc = json.loads(out)
    rows = doc["rows"]
    for r in rows:
        if r["method"] in ("symmetrized_sum", "antisym_sum", "lagrange_sum"):
            assert r["terms"] == math.factorial(r["L"])
        if r["method"] == "crossing_symmetrized_sum":
            assert r["terms"] == 2 ** r["L"]
    assert doc["ordering"]["L"] == 8 and doc["ordering"]["terms_equal_L_factorial"]


def test_bench_rejects_bad_config(tmp_path, capsys):
    assert run(capsys, "bench", "--config", write(tmp_path, {"L_max": 40}))[0] == 2


def test_unknown_subcommand_exits_2(capsys):
    assert run(capsys, "frobnicate")[0] == 2


def test_console_script_entry_point(tmp_path):
    cfg = write(tmp_path, "{broken")
    proc = subprocess.run([sys.executable, "-m", "dwpf.cli", "compute", "--config", cfg],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and proc.stdout == ""
    proc = subprocess.run([sys.executable, "-m", "dwpf.cli", "compute", "--config",
                           write(tmp_path, {"x": [0.3], "y": [0.1]}, "ok.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["schema"] == 1
