import json
import math

import numpy as np
import pytest

from mixest.cli import main, matrix_from_json, matrix_to_json


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def matrix_json(m):
    return matrix_to_json(np.asarray(m, dtype=complex))


def problem_file(tmp_path, rho1, rho2, prior=None, name="problem.json", options=None):
    obj = {"rho1": matrix_json(rho1), "rho2": matrix_json(rho2)}
    obj["prior"] = prior or {"kind": "uniform"}
    if options:
        obj["options"] = options
    return write_json(tmp_path / name, obj)


def orthogonal_pure_problem(tmp_path):
    return problem_file(tmp_path, np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))


class TestSolve:
    def test_orthogonal_pure_benchmark(self, tmp_path, capsys):
        problem = orthogonal_pure_problem(tmp_path)
        assert main(["solve", "--problem", problem]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["kind"] == "qubit"
        assert result["mean_variance"] == pytest.approx(1 / 18, abs=1e-12)
        estimates = sorted(o["estimate"] for o in result["outcomes"])
        assert estimates == pytest.approx([1 / 3, 2 / 3], abs=1e-12)

    def test_identical_states_exit_two(self, tmp_path, capsys):
        problem = problem_file(tmp_path, np.eye(2) / 2, np.eye(2) / 2)
        assert main(["solve", "--problem", problem]) == 2
        assert "error" in capsys.readouterr().err

    def test_commuting_qutrit(self, tmp_path, capsys):
        problem = problem_file(tmp_path, np.diag([0.5, 0.3, 0.2]), np.diag([0.2, 0.3, 0.5]))
        assert main(["solve", "--problem", problem]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["kind"] == "commuting"
        assert len(result["outcomes"]) == 3
        for o in result["outcomes"]:
            effect = matrix_from_json(o["effect"])
            off = effect - np.diag(np.diag(effect))
            assert np.max(np.abs(off)) < 1e-9

    def test_unreduced_exit_three(self, tmp_path, capsys):
        rng = np.random.default_rng(42)
        x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        rho1 = x @ x.conj().T
        rho1 /= np.trace(rho1).real
        y = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        rho2 = y @ y.conj().T
        rho2 /= np.trace(rho2).real
        problem = problem_file(tmp_path, rho1, rho2)
        assert main(["solve", "--problem", problem]) == 3
        captured = capsys.readouterr()
        result = json.loads(captured.out)
        assert result["kind"] == "unreduced"
        assert not result["positivity_ok"]
        assert "unsolved" in captured.err

    def test_prior_override_inline(self, tmp_path, capsys):
        problem = orthogonal_pure_problem(tmp_path)
        arg = json.dumps({"kind": "trunc_reciprocal", "t_bmax": math.log(2.0)})
        assert main(["solve", "--problem", problem, "--prior", arg]) == 0
        result = json.loads(capsys.readouterr().out)
        estimates = [o["estimate"] for o in result["outcomes"]]
        assert max(estimates) > 2 / 3  # reciprocal prior leans toward 1

    def test_parse_error_exit_two(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{ not json")
        assert main(["solve", "--problem", str(bad)]) == 2

    def test_table_prior_from_file(self, tmp_path, capsys):
        prior = {"kind": "table", "lambda": [0.0, 0.5, 1.0], "density": [0.2, 1.0, 0.4]}
        problem = problem_file(tmp_path, np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), prior=prior)
        assert main(["solve", "--problem", problem]) == 0
        result = json.loads(capsys.readouterr().out)
        assert 0.0 < result["mean_variance"] < 1 / 12

    def test_explore_reports_random_baseline(self, tmp_path, capsys):
        problem = orthogonal_pure_problem(tmp_path)
        assert main(["solve", "--problem", problem, "--explore", "25", "--seed", "3"]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["explore_count"] == 25
        assert result["explore_best_random_q"] <= result["q_value"] + 1e-9


class TestSweepGamma:
    def test_zero_crossings_at_right_angles(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["sweep-gamma", "--rb", "0.8", "--points", "4", "--out", str(out)]) == 0
        rows = out.read_text().strip().splitlines()
        assert rows[0] == "gamma,alpha0,q_max"
        table = {round(float(r.split(",")[0]), 9): float(r.split(",")[1]) for r in rows[1:]}
        assert abs(table[round(math.pi / 2, 9)]) < 1e-9
        assert abs(table[round(-math.pi / 2, 9)]) < 1e-9

    def test_rb_zero_gives_zero_column(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["sweep-gamma", "--rb", "0.0", "--points", "12", "--out", str(out)]) == 0
        for row in out.read_text().strip().splitlines()[1:]:
            assert abs(float(row.split(",")[1])) < 1e-9

    def test_tilt_sign_structure(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["sweep-gamma", "--rb", "0.8", "--points", "8", "--out", str(out)]) == 0
        table = {
            round(float(r.split(",")[0]), 9): float(r.split(",")[1])
            for r in out.read_text().strip().splitlines()[1:]
        }
        assert table[round(-math.pi / 4, 9)] > 0.1
        assert table[round(math.pi / 4, 9)] < -0.1

    def test_bad_rb_exit_two(self):
        assert main(["sweep-gamma", "--rb", "1.5", "--points", "4"]) == 2


class TestSimulate:
    def test_matches_analytic_value(self, tmp_path):
        problem = orthogonal_pure_problem(tmp_path)
        out = tmp_path / "sim.csv"
        assert main(
            ["simulate", "--problem", problem, "--n-trials", "20000", "--seed", "7", "--out", str(out)]
        ) == 0
        header, row = out.read_text().strip().splitlines()
        assert header == "seed,n_trials,empirical_mse,analytic_mean_variance,std_error"
        seed, n, mse, mv, err = row.split(",")
        assert (int(seed), int(n)) == (7, 20000)
        assert float(mv) == pytest.approx(1 / 18, abs=1e-12)
        assert abs(float(mse) - float(mv)) <= 4 * float(err)

    def test_fixed_seed_is_byte_identical(self, tmp_path):
        problem = orthogonal_pure_problem(tmp_path)
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        trials_a = tmp_path / "ta.csv"
        trials_b = tmp_path / "tb.csv"
        args = ["simulate", "--problem", problem, "--n-trials", "2000", "--seed", "9"]
        assert main(args + ["--out", str(first), "--trials-out", str(trials_a)]) == 0
        assert main(args + ["--out", str(second), "--trials-out", str(trials_b)]) == 0
        assert first.read_bytes() == second.read_bytes()
        assert trials_a.read_bytes() == trials_b.read_bytes()

    def test_invalid_povm_file_exit_two(self, tmp_path):
        problem = orthogonal_pure_problem(tmp_path)
        povm = write_json(
            tmp_path / "povm.json",
            {"effects": [matrix_json(0.5 * np.eye(2)), matrix_json(0.4 * np.eye(2))]},
        )
        assert main(["simulate", "--problem", problem, "--povm", povm]) == 2

    def test_round_trip_scoring(self, tmp_path, capsys):
        rng = np.random.default_rng(5)
        v = rng.normal(size=3)
        v *= 0.8 / np.linalg.norm(v)
        w = rng.normal(size=3)
        w *= 0.5 / np.linalg.norm(w)
        paulis = [
            np.array([[0, 1], [1, 0]], dtype=complex),
            np.array([[0, -1j], [1j, 0]], dtype=complex),
            np.array([[1, 0], [0, -1]], dtype=complex),
        ]
        rho1 = 0.5 * (np.eye(2) + sum(vi * p for vi, p in zip(v, paulis)))
        rho2 = 0.5 * (np.eye(2) + sum(wi * p for wi, p in zip(w, paulis)))
        problem = problem_file(tmp_path, rho1, rho2)
        assert main(["solve", "--problem", problem]) == 0
        solved = json.loads(capsys.readouterr().out)
        povm_file = write_json(
            tmp_path / "povm.json", {"effects": [o["effect"] for o in solved["outcomes"]]}
        )
        out = tmp_path / "sim.csv"
        assert main(
            [
                "simulate", "--problem", problem, "--povm", povm_file,
                "--n-trials", "10", "--seed", "1", "--out", str(out),
            ]
        ) == 0
        row = out.read_text().strip().splitlines()[1]
        analytic = float(row.split(",")[3])
        assert analytic == pytest.approx(solved["mean_variance"], abs=1e-10)


class TestDecoherence:
    def test_reports_prior_mean(self, capsys):
        assert main(
            [
                "decoherence", "--s", "0.5", "--t", "1.0", "--bmax", str(math.log(2.0)),
                "--n-trials", "5000", "--seed", "2",
            ]
        ) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["prior_mean"] == pytest.approx(0.7213475204444817, abs=1e-10)
        assert result["simulation"]["consistent"]
        assert all(0.0 <= b <= math.log(2.0) + 1e-9 for b in result["b_plugin_estimates"])

    def test_uniform_flag_matches_solve(self, tmp_path, capsys):
        assert main(
            [
                "decoherence", "--s", "0.5", "--t", "1.0", "--bmax", "0.7",
                "--uniform-prior", "--n-trials", "10", "--seed", "0",
            ]
        ) == 0
        dec = json.loads(capsys.readouterr().out)
        problem = problem_file(tmp_path, np.diag([1.0, 0.0]), np.diag([0.5, 0.5]))
        assert main(["solve", "--problem", problem]) == 0
        solved = json.loads(capsys.readouterr().out)
        assert dec["mean_variance"] == pytest.approx(solved["mean_variance"], abs=1e-12)

    def test_bad_parameter_exit_two(self):
        assert main(["decoherence", "--s", "2.0", "--t", "1.0", "--bmax", "1.0"]) == 2


class TestSelftest:
    def test_runs_clean(self, capsys):
        assert main(["selftest", "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert "8/8 checks passed" in out
