# -*- coding: utf-8 -*-
import json

import pytest

from ErgodicRiskLQR.Cli import main
from ErgodicRiskLQR.ErgodicRisk import _clamp
from ErgodicRiskLQR.Utils import CsvFile, JsonFile

SCHEMA = "ergodic-risk/v1"


def scalar_doc(a=1.2, fraction=0.8, noise=None) :
    return {"A" : [[a]], "B" : [[1.0]], "H" : [[1.0]], "noise" : noise or {"type" : "gaussian", "cov" : [[1.0]]},
            "Q" : [[1.0]], "R" : [[1.0]], "Qc" : [[1.0]], "beta_fraction" : fraction}


def write_config(tmp_path, **doc) :
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"schema" : SCHEMA, "seed" : 5, **doc}))
    return str(path)


SMALL_RUN = {"rollout" : {"reps" : 8, "horizon" : 200},
             "checks" : {"lln_horizon" : 2000, "clt_reps" : 200, "clt_horizon" : 200}}


class TestSynthesize :

    def test_feasible(self, tmp_path) :
        config = write_config(tmp_path, problem=scalar_doc())
        assert main(["synthesize", "--config", config, "--out", str(tmp_path / "o"), "--t-max", "5000"]) == 0
        solution = JsonFile.readFile(str(tmp_path / "o" / "solution.json"))
        assert solution["converged"]
        assert solution["problem"]["beta_bar"] == pytest.approx(2.233, rel=1e-3)
        history = CsvFile.readFile(str(tmp_path / "o" / "history.csv"))
        assert history[0] == ["m", "lambda", "grad_norm", "cs", "feas_gap", "J", "gammaN"]
        assert JsonFile.readFile(str(tmp_path / "o" / "metadata.json"))["status"] == "converged"

    def test_infeasible(self, tmp_path) :
        config = write_config(tmp_path, problem=scalar_doc(fraction=0.54))
        assert main(["synthesize", "--config", config, "--out", str(tmp_path / "o"), "--t-max", "5000"]) == 2
        assert JsonFile.readFile(str(tmp_path / "o" / "metadata.json"))["status"] == "infeasible"

    def test_iteration_cap(self, tmp_path) :
        config = write_config(tmp_path, problem=scalar_doc())
        assert main(["synthesize", "--config", config, "--out", str(tmp_path / "o"), "--t-max", "2"]) == 1


class TestSimulate :

    def test_artifacts(self, tmp_path) :
        config = write_config(tmp_path, problem=scalar_doc(a=0.5), policy={"K" : [[-0.5]]}, **SMALL_RUN)
        assert main(["simulate", "--config", config, "--out", str(tmp_path / "o")]) == 0
        curves = CsvFile.readFile(str(tmp_path / "o" / "curves.csv"))
        rollouts = CsvFile.readFile(str(tmp_path / "o" / "rollouts.csv"))
        assert curves[0] == ["policy", "t", "mean_S2_over_t", "sd"]
        assert len(rollouts) == 9
        summary = JsonFile.readFile(str(tmp_path / "o" / "summary.json"))
        assert summary["policies"]["policy"]["gamma_N_sq"] == pytest.approx(2.0, rel=1e-9)

    def test_single_rep_has_zero_spread(self, tmp_path) :
        config = write_config(tmp_path, problem=scalar_doc(a=0.5), policy={"K" : [[-0.5]]}, **SMALL_RUN)
        assert main(["simulate", "--config", config, "--out", str(tmp_path / "o"), "--reps", "1"]) == 0
        curves = CsvFile.readFile(str(tmp_path / "o" / "curves.csv"))
        assert all(float(row[3]) == 0.0 for row in curves[1:])

    def test_rerun_is_byte_identical(self, tmp_path) :
        config = write_config(tmp_path, problem=scalar_doc(a=0.5), policy={"K" : [[-0.5]]}, **SMALL_RUN)
        main(["simulate", "--config", config, "--out", str(tmp_path / "a")])
        main(["simulate", "--config", config, "--out", str(tmp_path / "b")])
        for name in ("curves.csv", "rollouts.csv", "summary.json") :
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestCompare :

    def test_from_solution(self, tmp_path) :
        config = write_config(tmp_path, problem=scalar_doc())
        assert main(["synthesize", "--config", config, "--out", str(tmp_path / "s"), "--t-max", "5000"]) == 0
        config = write_config(tmp_path, problem=scalar_doc(), solution_path="s/solution.json", **SMALL_RUN)
        assert main(["compare", "--config", config, "--out", str(tmp_path / "c")]) == 0
        summary = JsonFile.readFile(str(tmp_path / "c" / "summary.json"))
        comparison = summary["policies"]["comparison"]
        assert comparison["gamma_N_ratio"] == pytest.approx(0.8, rel=1e-2)
        assert comparison["J_ratio"] > 1.0


class TestCertify :

    def test_deadbeat(self, tmp_path) :
        config = write_config(tmp_path, problem=scalar_doc(a=0.5), policy={"K" : [[-0.5]]})
        assert main(["certify", "--config", config, "--out", str(tmp_path / "o")]) == 0
        report = JsonFile.readFile(str(tmp_path / "o" / "drift_report.json"))
        assert report["violations"] == 0

    def test_negative_control(self, tmp_path) :
        config = write_config(tmp_path, problem=scalar_doc(a=0.5), policy={"K" : [[-0.5]]})
        assert main(["certify", "--config", config, "--out", str(tmp_path / "o"), "--negative-control"]) == 4

    def test_heavy_tail_without_fourth_moment(self, tmp_path) :
        noise = {"type" : "student_t", "nu" : 3, "cov" : [[1.0]]}
        config = write_config(tmp_path, problem=scalar_doc(a=0.5, noise=noise), policy={"K" : [[-0.5]]})
        assert main(["certify", "--config", config, "--out", str(tmp_path / "o")]) == 3


class TestRandgen :

    def test_without_config(self, tmp_path) :
        assert main(["randgen", "--n", "4", "--m", "2", "--seed", "7", "--out", str(tmp_path)]) == 0
        doc = JsonFile.readFile(str(tmp_path / "problem.json"))
        assert len(doc["problem"]["A"]) == 4
        assert doc["instance"]["seed"] == 7

    def test_generated_problem_is_usable(self, tmp_path) :
        main(["randgen", "--n", "3", "--m", "1", "--out", str(tmp_path / "g")])
        config = write_config(tmp_path, problem_path="g/problem.json")
        assert main(["certify", "--config", config, "--out", str(tmp_path / "o"), "--order", "2"]) == 0


class TestErrors :

    def test_unknown_key(self, tmp_path) :
        config = write_config(tmp_path, problem=scalar_doc(), plots=True)
        assert main(["synthesize", "--config", config, "--out", str(tmp_path / "o")]) == 3

    def test_missing_config(self, tmp_path) :
        assert main(["synthesize", "--out", str(tmp_path / "o")]) == 3

    def test_config_not_found(self, tmp_path) :
        assert main(["simulate", "--config", str(tmp_path / "none.json")]) == 3

    def test_unknown_command(self) :
        assert main(["plot"]) == 3

    def test_negative_variance(self, tmp_path, monkeypatch) :
        monkeypatch.setattr("ErgodicRiskLQR.Simulate.gamma_N_sq", lambda *args, **kwargs : _clamp(-1.0, 1.0, "gamma_N^2"))
        config = write_config(tmp_path, problem=scalar_doc(a=0.5), policy={"K" : [[-0.5]]}, **SMALL_RUN)
        assert main(["simulate", "--config", config, "--out", str(tmp_path / "o")]) == 3

    def test_rank_deficient_bank(self, tmp_path) :
        (tmp_path / "bank.csv").write_text("w0,w1\n1.0,2.0\n-1.0,-2.0\n2.0,4.0\n-2.0,-4.0\n")
        noise = {"type" : "empirical", "samples_path" : "bank.csv"}
        problem = {**scalar_doc(a=0.5, noise=noise), "A" : [[0.5, 0.0], [0.0, 0.5]], "B" : [[1.0], [0.0]],
                   "H" : [[1.0, 0.0], [0.0, 1.0]], "Q" : [[1.0, 0.0], [0.0, 1.0]], "Qc" : [[1.0, 0.0], [0.0, 1.0]]}
        config = write_config(tmp_path, problem=problem, policy={"K" : [[-0.5, 0.0]]}, **SMALL_RUN)
        assert main(["simulate", "--config", config, "--out", str(tmp_path / "o")]) == 3
