"""CLI: argument grammars, subcommand round trips, error reporting."""

import json
import subprocess
import sys

import numpy as np
import pytest

from phaselift.cli import main, parse_noise_spec, parse_x0_spec
from phaselift.measurement import NoiseSpec
from phaselift.serialize import SCHEMA_VERSION


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestX0Spec:
    def test_unit_random_matches_library(self):
        from phaselift.measurement import random_signal

        x = parse_x0_spec("unit-random", 5, seed=3, complex_field=False)
        assert np.array_equal(x, random_signal(5, 3))

    def test_basis_vector(self):
        x = parse_x0_spec("basis:2", 4, seed=0, complex_field=False)
        assert np.array_equal(x, [0.0, 0.0, 1.0, 0.0])
        xc = parse_x0_spec("basis:0", 2, seed=0, complex_field=True)
        assert xc.dtype == complex

    def test_inline_json_real_and_complex(self):
        x = parse_x0_spec("[1.0, -2.0]", 2, seed=0, complex_field=False)
        assert np.array_equal(x, [1.0, -2.0])
        xc = parse_x0_spec("[[0.0, 1.0], [1.0, 0.0]]", 2, seed=0, complex_field=True)
        assert np.array_equal(xc, [1j, 1.0])

    def test_rejections(self):
        with pytest.raises(ValueError, match="basis index 7"):
            parse_x0_spec("basis:7", 3, 0, False)
        with pytest.raises(ValueError, match="malformed basis"):
            parse_x0_spec("basis:two", 3, 0, False)
        with pytest.raises(ValueError, match="length 2, expected 3"):
            parse_x0_spec("[1.0, 2.0]", 3, 0, False)
        with pytest.raises(ValueError, match="JSON array"):
            parse_x0_spec('{"x": 1}', 3, 0, False)
        with pytest.raises(ValueError, match="not unit-random"):
            parse_x0_spec("garbage", 3, 0, False)


class TestNoiseSpecGrammar:
    def test_parses_kind_and_level(self):
        assert parse_noise_spec("gaussian:0.05") == NoiseSpec("gaussian", 0.05)
        assert parse_noise_spec("adversarial_sign:1e-3") == NoiseSpec("adversarial_sign", 1e-3)

    def test_rejections(self):
        with pytest.raises(ValueError, match="malformed noise spec"):
            parse_noise_spec("gaussian")
        with pytest.raises(ValueError, match="unknown noise kind"):
            parse_noise_spec("salt:0.1")
        with pytest.raises(ValueError, match="not a number"):
            parse_noise_spec("gaussian:lots")


class TestSimulate:
    def test_writes_problem_and_reruns_identically(self, tmp_path, capsys):
        path = str(tmp_path / "p.json")
        argv = ["simulate", "--model", "real_gaussian", "--n", "4", "--m", "24",
                "--seed", "9", "--out", path]
        code, out, err = run_cli(capsys, *argv)
        assert code == 0 and err == ""
        assert "wrote" in out and "n=4 m=24 seed=9" in out
        first = open(path, "rb").read()
        raw = json.loads(first)
        assert raw["schema"] == SCHEMA_VERSION
        assert len(raw["b"]) == 24
        assert len(raw["x0"]) == 4
        assert "vectors" not in raw
        code, _, _ = run_cli(capsys, *argv)
        assert code == 0
        assert open(path, "rb").read() == first

    def test_include_vectors_and_noise(self, tmp_path, capsys):
        path = str(tmp_path / "p.json")
        code, _, _ = run_cli(
            capsys, "simulate", "--model", "complex_gaussian", "--n", "3", "--m", "6",
            "--seed", "2", "--noise", "uniform:0.1", "--include-vectors", "--out", path,
        )
        assert code == 0
        raw = json.loads(open(path).read())
        assert len(raw["vectors"]) == 6
        assert len(raw["w"]) == 6
        assert max(abs(v) for v in raw["w"]) <= 0.1

    def test_basis_signal_lands_in_file(self, tmp_path, capsys):
        path = str(tmp_path / "p.json")
        code, _, _ = run_cli(
            capsys, "simulate", "--model", "real_gaussian", "--n", "3", "--m", "6",
            "--seed", "1", "--x0", "basis:1", "--out", path,
        )
        assert code == 0
        assert json.loads(open(path).read())["x0"] == [0.0, 1.0, 0.0]

    def test_bad_noise_spec_is_one_stderr_line(self, tmp_path, capsys):
        code, out, err = run_cli(
            capsys, "simulate", "--model", "real_gaussian", "--n", "3", "--m", "6",
            "--seed", "1", "--noise", "salt:0.1", "--out", str(tmp_path / "p.json"),
        )
        assert code == 1
        assert err.startswith("error: ")
        assert err.count("\n") == 1
        assert not (tmp_path / "p.json").exists()


class TestSolve:
    def test_round_trip_with_truth(self, tmp_path, capsys):
        problem = str(tmp_path / "p.json")
        result = str(tmp_path / "r.json")
        run_cli(capsys, "simulate", "--model", "real_gaussian", "--n", "4", "--m", "32",
                "--seed", "5", "--out", problem)
        code, out, err = run_cli(capsys, "solve", "--in", problem, "--out", result)
        assert code == 0 and err == ""
        assert "converged=true" in out
        payload = json.loads(open(result).read())
        assert set(payload) == {
            "schema", "l1_residual", "iterations", "converged", "trace",
            "x_hat", "frob_error_vs_truth",
        }
        assert payload["converged"] is True
        assert payload["frob_error_vs_truth"] < 1e-3
        assert abs(payload["trace"] - 1.0) < 1e-3  # unit-random signal
        x_hat = np.array(payload["x_hat"])
        raw_x0 = np.array(json.loads(open(problem).read())["x0"])
        assert min(np.linalg.norm(x_hat - raw_x0), np.linalg.norm(x_hat + raw_x0)) < 1e-3

    def test_missing_measurements_and_missing_file(self, tmp_path, capsys):
        bare = tmp_path / "bare.json"
        bare.write_text(json.dumps(
            {"schema": 1, "model": "real_gaussian", "n": 3, "m": 6, "seed": 0}))
        code, _, err = run_cli(capsys, "solve", "--in", str(bare))
        assert code == 1 and "no measurements" in err
        code, _, err = run_cli(capsys, "solve", "--in", str(tmp_path / "absent.json"))
        assert code == 1 and err.startswith("error: ")

    def test_length_mismatch_names_dimensions(self, tmp_path, capsys):
        path = tmp_path / "p.json"
        path.write_text(json.dumps(
            {"schema": 1, "model": "real_gaussian", "n": 3, "m": 6, "seed": 0,
             "b": [1.0, 2.0]}))
        code, _, err = run_cli(capsys, "solve", "--in", str(path))
        assert code == 1
        assert "length 2" in err and "m=6" in err

    def test_solver_flags_reach_options(self, tmp_path, capsys):
        problem = str(tmp_path / "p.json")
        result = str(tmp_path / "r.json")
        run_cli(capsys, "simulate", "--model", "real_gaussian", "--n", "3", "--m", "18",
                "--seed", "4", "--out", problem)
        code, _, _ = run_cli(capsys, "solve", "--in", problem, "--out", result,
                             "--max-iters", "3")
        assert code == 0
        payload = json.loads(open(result).read())
        assert payload["iterations"] == 3
        assert payload["converged"] is False


class TestCertify:
    def test_uses_stored_anchor(self, tmp_path, capsys):
        problem = str(tmp_path / "p.json")
        report = str(tmp_path / "cert.json")
        run_cli(capsys, "simulate", "--model", "real_gaussian", "--n", "8", "--m", "512",
                "--seed", "3", "--out", problem)
        code, out, err = run_cli(capsys, "certify", "--in", problem, "--out", report)
        assert code == 0 and err == ""
        assert "inexact_ok=" in out and "lambda_inf_m=" in out
        payload = json.loads(open(report).read())
        assert payload["n"] == 8 and payload["m"] == 512
        assert payload["threshold"] == 3.0
        assert payload["lambda_inf"] * 512 <= 7.0
        for key in ("tperp_shift_norm", "t_frob", "restricted_max_eig",
                    "core_ok", "inexact_ok"):
            assert key in payload

    def test_x0_override_and_missing_anchor(self, tmp_path, capsys):
        bare = tmp_path / "bare.json"
        bare.write_text(json.dumps(
            {"schema": 1, "model": "real_gaussian", "n": 4, "m": 64, "seed": 0}))
        code, _, err = run_cli(capsys, "certify", "--in", str(bare))
        assert code == 1 and "no anchor signal" in err
        code, out, _ = run_cli(capsys, "certify", "--in", str(bare), "--x0", "basis:0")
        assert code == 0 and "tperp_shift_norm=" in out

    def test_threshold_flag_changes_report(self, tmp_path, capsys):
        problem = str(tmp_path / "p.json")
        run_cli(capsys, "simulate", "--model", "real_gaussian", "--n", "4", "--m", "256",
                "--seed", "6", "--out", problem)
        _, out_default, _ = run_cli(capsys, "certify", "--in", problem)
        _, out_wide, _ = run_cli(capsys, "certify", "--in", problem, "--t", "1.5")
        assert out_default != out_wide


class TestConstants:
    def test_default_threshold_line(self, capsys):
        code, out, err = run_cli(capsys, "constants")
        assert code == 0 and err == ""
        assert out == "alpha=0.9707 beta=2.6728 delta=4.0663\n"

    def test_large_threshold_recovers_full_moments(self, capsys):
        code, out, _ = run_cli(capsys, "constants", "--t", "9")
        assert code == 0
        assert out == "alpha=1.0000 beta=3.0000 delta=6.0000\n"


class TestExperimentCommand:
    def test_flags_only_run_writes_outputs(self, tmp_path, capsys):
        out_dir = str(tmp_path / "run")
        code, out, err = run_cli(
            capsys, "experiment", "--experiment", "transition", "--n-values", "3",
            "--ratios", "2,5", "--trials", "2", "--base-seed", "1",
            "--jobs", "1", "--out-dir", out_dir,
        )
        assert code == 0 and err == ""
        names = sorted(p.name for p in (tmp_path / "run").iterdir())
        assert names == ["transition.csv", "transition.png", "transition_n3.dat"]
        csv = open(tmp_path / "run" / "transition.csv").read()
        assert csv.count("\n#agg,") == 3  # header + two ratio cells
        assert "cell " in out and "wrote " in out

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "experiment": "transition",
            "n_values": [3],
            "ratio_values": [4.0],
            "trials": 1,
            "base_seed": 7,
        }))
        out_dir = str(tmp_path / "run")
        code, _, _ = run_cli(capsys, "experiment", "--config", str(cfg),
                             "--trials", "3", "--jobs", "1", "--no-figures",
                             "--out-dir", out_dir)
        assert code == 0
        names = sorted(p.name for p in (tmp_path / "run").iterdir())
        assert names == ["transition.csv", "transition_n3.dat"]
        lines = open(tmp_path / "run" / "transition.csv").read().strip().split("\n")
        data = [l for l in lines[1:] if not l.startswith("#agg,")]
        assert len(data) == 3  # --trials beat the config file's 1

    def test_unknown_config_field_fails(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"experiment": "transition", "bogus": 1}))
        code, _, err = run_cli(capsys, "experiment", "--config", str(cfg),
                               "--out-dir", str(tmp_path))
        assert code == 1 and "bogus" in err


class TestVersionSmoke:
    def test_console_script_reports_version(self):
        proc = subprocess.run(
            ["phaselift", "--version"], capture_output=True, text=True, timeout=120
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("phaselift ")
        assert f"(schema {SCHEMA_VERSION})" in proc.stdout

    def test_module_entry_matches(self):
        proc = subprocess.run(
            [sys.executable, "-m", "phaselift", "--version"],
            capture_output=True, text=True, timeout=120,
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("phaselift ")
