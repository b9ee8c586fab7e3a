import json
import math
import subprocess
import sys

import pytest

from cpinfer.cli import EXIT_ERROR, EXIT_NOT_APPLICABLE, EXIT_OK, main
from cpinfer.graph import read_edge_list
from cpinfer.hyptest import ENDOGENOUS_CP
from cpinfer.models import ModelSpec, expected_edges

SBM_FLAGS = ["--model", "cpsbm", "--n", "1000", "--k", "100",
             "--p11", "0.015", "--p12", "0.0075", "--p22", "0.001"]


@pytest.fixture
def star_file(tmp_path):
    path = tmp_path / "star.tsv"
    path.write_text("0 1\n0 2\n0 3\n")
    return path


class TestGenerate:
    def test_empty_er(self, tmp_path):
        out = tmp_path / "g.tsv"
        assert main(["--seed", "1", "generate", "--model", "er", "--n", "100", "--p", "0",
                     "--out", str(out)]) == EXIT_OK
        res = read_edge_list(out)
        assert res.graph.m == 0 and res.graph.n == 100

    def test_byte_identical(self, tmp_path):
        for name in ("a", "b"):
            argv = ["generate", *SBM_FLAGS, "--seed", "7", "--out", str(tmp_path / f"{name}.tsv"),
                    "--labels-out", str(tmp_path / f"{name}.lab")]
            assert main(argv) == EXIT_OK
        for ext in ("tsv", "lab"):
            assert (tmp_path / f"a.{ext}").read_bytes() == (tmp_path / f"b.{ext}").read_bytes()

    def test_edge_count_within_three_sigma(self, tmp_path):
        out = tmp_path / "g.tsv"
        main(["--seed", "3", "generate", *SBM_FLAGS, "--out", str(out)])
        spec = ModelSpec.cpsbm(1000, 100, 0.015, 0.0075, 0.001)
        mu = expected_edges(spec)
        g = read_edge_list(out).graph
        assert g.n == 1000
        # variance of a sum of Bernoullis is at most the mean
        assert abs(g.m - mu) <= 3 * math.sqrt(mu)

    def test_theta_models(self, tmp_path):
        out = tmp_path / "g.tsv"
        assert main(["--seed", "1", "generate", "--model", "cpdcbm", "--n", "300", "--k", "30",
                     "--p11", "0.24", "--p12", "0.12", "--p22", "0.05",
                     "--theta-core", "0.6", "0.8", "--theta-periphery", "0.6", "0.8",
                     "--out", str(out)]) == EXIT_OK
        assert read_edge_list(out).graph.m > 0

    def test_missing_theta(self, tmp_path, capsys):
        code = main(["--seed", "1", "generate", "--model", "cl", "--n", "50", "--out", str(tmp_path / "x")])
        assert code == EXIT_ERROR
        err = capsys.readouterr().err.strip().splitlines()
        assert len(err) == 1 and "theta" in err[0]

    def test_invalid_probability(self, tmp_path):
        code = main(["--seed", "1", "generate", "--model", "er", "--n", "10", "--p", "1.5",
                     "--out", str(tmp_path / "x")])
        assert code == EXIT_ERROR


class TestDetectAndTest:
    def test_star_not_applicable(self, star_file, tmp_path):
        out = tmp_path / "r.json"
        assert main(["--seed", "0", "test", "--graph", str(star_file), "--null", "er",
                     "--out", str(out)]) == EXIT_NOT_APPLICABLE
        assert json.loads(out.read_text())["interpretation"] == "not-applicable"

    def test_detect_writes_json(self, star_file, tmp_path):
        out = tmp_path / "d.json"
        assert main(["detect", "--graph", str(star_file), "--seed", "0", "--out", str(out)]) == EXIT_OK
        obj = json.loads(out.read_text())
        assert obj["labels"] == [1, 0, 0, 0] and obj["k"] == 1

    def test_parse_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.tsv"
        bad.write_text("a b\nc\n")
        assert main(["--seed", "0", "detect", "--graph", str(bad), "--out", str(tmp_path / "x")]) == EXIT_ERROR
        assert "line 2" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["--seed", "0", "detect", "--graph", str(tmp_path / "nope"),
                     "--out", str(tmp_path / "x")]) == EXIT_ERROR

    def test_strong_signal_endogenous(self, tmp_path):
        hits = 0
        for seed in range(3):
            g = tmp_path / f"g{seed}.tsv"
            out = tmp_path / f"r{seed}.json"
            main(["--seed", str(seed), "generate", "--model", "cpsbm", "--n", "1000", "--k", "100",
                  "--p11", "0.1", "--p12", "0.05", "--p22", "0.01", "--out", str(g)])
            assert main(["--seed", str(seed), "test", "--graph", str(g), "--null", "both",
                         "--out", str(out)]) == EXIT_OK
            rep = json.loads(out.read_text())
            for arm in ("er", "cl"):
                assert {"c1", "c2"} <= set(rep[arm])
            hits += rep["interpretation"] == ENDOGENOUS_CP
        assert hits >= 2

    def test_entropy_seed_echoed(self, star_file, tmp_path, capsys):
        main(["detect", "--graph", str(star_file), "--out", str(tmp_path / "d.json")])
        assert "seed" in capsys.readouterr().err


class TestRho:
    def test_er_prints_zero(self, capsys):
        assert main(["--seed", "0", "rho", "--model", "er", "--n", "50", "--p", "0.1"]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["rho_tilde"] == 0

    def test_sbm(self, capsys):
        main(["--seed", "0", "rho", *SBM_FLAGS])
        out = json.loads(capsys.readouterr().out)
        assert out["rho_tilde"] >= out["rho_truth"] > 0


class TestSimulate:
    def test_runs_config(self, tmp_path):
        cfg = {"kind": "detection", "reps": 2, "timing": False,
               "grid": [{"variant": "cpsbm", "n": 200, "params": {"k": 20, "p11": .3, "p12": .15, "p22": .02}}]}
        path = tmp_path / "exp.json"
        path.write_text(json.dumps(cfg))
        for name in ("a", "b"):
            assert main(["--seed", "4", "simulate", "--config", str(path),
                         "--out-dir", str(tmp_path / name)]) == EXIT_OK
        assert (tmp_path / "a" / "trials.csv").read_bytes() == (tmp_path / "b" / "trials.csv").read_bytes()

    def test_bad_json(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text("{")
        assert main(["simulate", "--config", str(path), "--out-dir", str(tmp_path)]) == EXIT_ERROR


def test_module_entry_point(star_file, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "cpinfer", "--seed", "1", "test", "--graph", str(star_file),
         "--null", "er", "--out", str(tmp_path / "r.json")],
        capture_output=True, text=True)
    assert proc.returncode == EXIT_NOT_APPLICABLE
    assert proc.stdout == ""
