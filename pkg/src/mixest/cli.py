"""Command-line interface: solve, simulate, sweep-gamma, decoherence, selftest.

File formats
------------
Matrix JSON: ``{"dim": d, "re": [[...]], "im": [[...]]}`` (row-major).
Problem JSON: ``{"rho1": M, "rho2": M, "prior": P, "options": {...}}``.
Prior JSON: ``{"kind": "uniform"}``, ``{"kind": "trunc_reciprocal",
"t_bmax": x}`` or ``{"kind": "table", "lambda": [...], "density": [...]}``.
POVM JSON: ``{"effects": [M, ...]}``.

Exit codes: 0 on success, 2 on input errors, 3 when no reduction yields a
valid measurement.  stdout carries data only; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .bayes import EstimationReport, Prior, q_functional
from .errors import EstimationError, ParseError, BadParameter, UnsolvedCase
from .highdim import (
    ReductionKind,
    ReductionOutcome,
    embed_and_check,
    solve_commuting,
    solve_pure_plus_noise,
    solve_two_dim_support,
    support_rank,
)
from .policy import DEFAULT_POLICY
from .qubit import PlanarGeometry, optimal_alpha, optimal_pvm
from .randutil import random_povm
from .simulate import DecoherenceModel, run_simulation, solve_decay_estimation
from .states import DensityMatrix, Povm, commutator_norm, validate_povm, validate_state


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": m.shape[0], "re": np.real(m).tolist(), "im": np.imag(m).tolist()}


def matrix_from_json(obj) -> np.ndarray:
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad matrix object: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise ParseError(f"matrix entries do not match dim={dim}")
    return re + 1j * im


def prior_from_json(obj) -> Prior:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ParseError("prior JSON needs a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "uniform":
            return Prior.uniform()
        if kind == "trunc_reciprocal":
            return Prior.truncated_reciprocal(float(obj["t_bmax"]))
        if kind == "table":
            return Prior.from_table(obj["lambda"], obj["density"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad prior parameters: {exc}") from exc
    raise ParseError(f"unknown prior kind {kind!r}")


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc


def _prior_from_arg(arg: str | None) -> Prior | None:
    if arg is None:
        return None
    text = arg.strip()
    if text.startswith("{"):
        try:
            return prior_from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"prior argument is not valid JSON: {exc}") from exc
    return prior_from_json(_load_json(arg))


def load_problem(path: str, prior_override: Prior | None = None):
    obj = _load_json(path)
    try:
        rho1 = validate_state(matrix_from_json(obj["rho1"]))
        rho2 = validate_state(matrix_from_json(obj["rho2"]))
    except KeyError as exc:
        raise ParseError(f"problem file misses {exc}") from exc
    prior = prior_override or prior_from_json(obj.get("prior", {"kind": "uniform"}))
    options = obj.get("options", {})
    return rho1, rho2, prior, options


def load_povm(path: str) -> Povm:
    obj = _load_json(path)
    if "effects" not in obj:
        raise ParseError("POVM file needs an 'effects' list")
    return validate_povm([matrix_from_json(e) for e in obj["effects"]])


def _report_json(kind: str, report: EstimationReport, extra: dict | None = None) -> dict:
    out = {
        "kind": kind,
        "positivity_ok": True,
        "degenerate": report.degenerate,
        "q_value": report.score.q_value,
        "mean_variance": report.score.mean_variance,
        "outcomes": [
            {
                "effect": matrix_to_json(e.matrix),
                "prob": o.prob,
                "estimate": o.estimate,
                "variance": o.variance,
                "never_occurs": o.never_occurs,
            }
            for e, o in zip(report.povm, report.score.per_outcome)
        ],
    }
    if report.alpha0 is not None:
        out["alpha0"] = report.alpha0
    if extra:
        out.update(extra)
    return out


def _is_pure_plus_noise(rho1: DensityMatrix, rho2: DensityMatrix) -> np.ndarray | None:
    d = rho1.dim
    if np.max(np.abs(rho2.matrix - np.eye(d) / d)) > 1e-10:
        return None
    evals, vecs = np.linalg.eigh(rho1.matrix)
    if evals[-1] < 1.0 - 1e-10:
        return None
    return vecs[:, -1]


def dispatch_solve(rho1, rho2, prior, explore: int = 0, seed: int = 0) -> dict:
    """Route a problem to the right solver and build the output record."""
    if rho1.dim != rho2.dim:
        raise BadParameter(f"states have different dimensions {rho1.dim} vs {rho2.dim}")
    if rho1.dim == 2:
        report = optimal_pvm(prior, rho1, rho2)
        result = _report_json("qubit", report)
    else:
        psi = _is_pure_plus_noise(rho1, rho2)
        if psi is not None:
            # checked before the commuting route, which would also apply
            # (white noise commutes with everything) but reports the
            # finer-grained eigenbasis measurement at the same score
            outcome = solve_pure_plus_noise(prior, psi, rho1.dim)
        elif commutator_norm(rho1, rho2) < DEFAULT_POLICY.commute_tol:
            outcome = solve_commuting(prior, rho1, rho2)
        elif support_rank(rho1, rho2) <= 2:
            outcome = solve_two_dim_support(prior, rho1, rho2)
        else:
            outcome = embed_and_check(prior, rho1, rho2)
        result = _outcome_json(outcome)
    if explore > 0:
        rng = np.random.default_rng(seed)
        best = -math.inf
        for _ in range(explore):
            povm = random_povm(rng, rho1.dim, n_effects=min(rho1.dim + 2, 6))
            best = max(best, q_functional(povm, prior, rho1, rho2).q_value)
        result["explore_best_random_q"] = best
        result["explore_count"] = explore
    return result


def _outcome_json(outcome: ReductionOutcome) -> dict:
    if outcome.kind is ReductionKind.UNREDUCED:
        return {
            "kind": outcome.kind.value,
            "positivity_ok": False,
            "certificate": outcome.certificate,
            "min_eigenvalue": outcome.min_eigenvalue,
            "candidate_effects": [matrix_to_json(m) for m in outcome.candidate_effects],
            "reduced_q": outcome.reduced_q,
        }
    extra = {
        "certificate": outcome.certificate,
        "reduced_q": outcome.reduced_q,
    }
    out = _report_json(outcome.kind.value, outcome.report, extra)
    out["degenerate"] = outcome.degenerate
    return out


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_solve(args) -> int:
    rho1, rho2, prior, options = load_problem(args.problem, _prior_from_arg(args.prior))
    explore = int(args.explore or options.get("explore", 0))
    result = dispatch_solve(rho1, rho2, prior, explore=explore, seed=args.seed)
    _write_text(args.out, json.dumps(result, indent=2) + "\n")
    if result["kind"] == "unreduced":
        print(
            f"unsolved case: {result['certificate']}",
            file=sys.stderr,
        )
        raise UnsolvedCase(result["certificate"])
    return 0


def cmd_simulate(args) -> int:
    rho1, rho2, prior, _ = load_problem(args.problem, _prior_from_arg(args.prior))
    if args.povm == "optimal":
        result = dispatch_solve(rho1, rho2, prior)
        if "outcomes" not in result:
            raise UnsolvedCase("no valid measurement to simulate")
        povm = validate_povm([matrix_from_json(o["effect"]) for o in result["outcomes"]])
    else:
        povm = load_povm(args.povm)
    want_records = args.trials_out is not None
    result = run_simulation(povm, prior, rho1, rho2, args.n_trials, args.seed, return_records=want_records)
    summary, records = result if want_records else (result, [])
    header = "seed,n_trials,empirical_mse,analytic_mean_variance,std_error\n"
    row = (
        f"{summary.seed},{summary.n_trials},{_fmt(summary.empirical_mse)},"
        f"{_fmt(summary.analytic_mean_variance)},{_fmt(summary.std_error)}\n"
    )
    _write_text(args.out, header + row)
    if args.trials_out is not None:
        lines = ["trial,true_lambda,outcome_index,estimate,squared_error"]
        lines += [
            f"{i},{_fmt(r.true_lambda)},{r.outcome_index},{_fmt(r.estimate)},{_fmt(r.squared_error)}"
            for i, r in enumerate(records)
        ]
        _write_text(args.trials_out, "\n".join(lines) + "\n")
    if not summary.consistent:
        print(
            f"warning: empirical MSE {summary.empirical_mse:.6g} deviates from analytic "
            f"{summary.analytic_mean_variance:.6g} by more than four standard errors",
            file=sys.stderr,
        )
    return 0


def cmd_sweep_gamma(args) -> int:
    if not (0.0 <= args.rb < 1.0):
        raise BadParameter(f"rb must lie in [0, 1), got {args.rb}")
    if args.points < 2:
        raise BadParameter("need at least two sweep points")
    if not (0.0 < args.delta_r):
        raise BadParameter("delta-r must be positive")
    lines = ["gamma,alpha0,q_max"]
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    for k in range(1, args.points + 1):
        gamma = -math.pi + 2.0 * math.pi * k / args.points
        geom = PlanarGeometry(args.delta_r, args.rb, gamma, e1, e2, 0.25)
        sol = optimal_alpha(geom)
        lines.append(f"{_fmt(gamma)},{_fmt(sol.alpha)},{_fmt(sol.q_max)}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_decoherence(args) -> int:
    if args.rho0 is not None:
        rho0 = validate_state(matrix_from_json(_load_json(args.rho0)))
    else:
        rho0 = validate_state(np.diag([1.0, 0.0]).astype(complex))
    model = DecoherenceModel(s=args.s, t=args.t, b_max=args.bmax, rho0=rho0)
    decay = solve_decay_estimation(model, uniform_prior=args.uniform_prior)
    summary = run_simulation(
        decay.report.povm, decay.prior, model.rho0, model.equilibrium, args.n_trials, args.seed
    )
    result = _report_json("decoherence", decay.report)
    result.update(
        {
            "prior_mean": decay.prior.mean,
            "prior_second_moment": decay.prior.second_moment,
            "t_bmax": model.t_bmax,
            "b_plugin_estimates": list(decay.b_estimates),
            "simulation": {
                "seed": summary.seed,
                "n_trials": summary.n_trials,
                "empirical_mse": summary.empirical_mse,
                "analytic_mean_variance": summary.analytic_mean_variance,
                "std_error": summary.std_error,
                "consistent": summary.consistent,
            },
        }
    )
    _write_text(None, json.dumps(result, indent=2) + "\n")
    if args.out is not None:
        header = "seed,n_trials,empirical_mse,analytic_mean_variance,std_error\n"
        row = (
            f"{summary.seed},{summary.n_trials},{_fmt(summary.empirical_mse)},"
            f"{_fmt(summary.analytic_mean_variance)},{_fmt(summary.std_error)}\n"
        )
        _write_text(args.out, header + row)
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return run_selftest(seed=args.seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixest",
        description="Bayesian-optimal single-copy estimation of a mixing parameter",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="compute the optimal measurement for a problem file")
    p_solve.add_argument("--problem", required=True, help="problem JSON file")
    p_solve.add_argument("--prior", help="prior JSON string or file (overrides the problem file)")
    p_solve.add_argument("--explore", type=int, default=0,
                         help="score N random POVMs for comparison (exploratory, no claim)")
    p_solve.add_argument("--seed", type=int, default=0)
    p_solve.add_argument("--out", help="write JSON here instead of stdout")
    p_solve.set_defaults(func=cmd_solve)

    p_sim = sub.add_parser("simulate", help="Monte Carlo check of a measurement")
    p_sim.add_argument("--problem", required=True)
    p_sim.add_argument("--prior")
    p_sim.add_argument("--povm", default="optimal", help="'optimal' or a POVM JSON file")
    p_sim.add_argument("--n-trials", type=int, default=100000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", help="summary CSV (default stdout)")
    p_sim.add_argument("--trials-out", help="optional per-trial CSV")
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep-gamma", help="optimal angle across geometries")
    p_sweep.add_argument("--rb", type=float, required=True)
    p_sweep.add_argument("--points", type=int, default=361)
    p_sweep.add_argument("--delta-r", type=float, default=1.0 / 6.0, dest="delta_r")
    p_sweep.add_argument("--out")
    p_sweep.set_defaults(func=cmd_sweep_gamma)

    p_dec = sub.add_parser("decoherence", help="decay-rate estimation end to end")
    p_dec.add_argument("--s", type=float, required=True)
    p_dec.add_argument("--t", type=float, required=True)
    p_dec.add_argument("--bmax", type=float, required=True)
    p_dec.add_argument("--rho0", help="initial-state matrix JSON file (default excited state)")
    p_dec.add_argument("--uniform-prior", action="store_true")
    p_dec.add_argument("--n-trials", type=int, default=100000)
    p_dec.add_argument("--seed", type=int, default=0)
    p_dec.add_argument("--out", help="also write the summary CSV here")
    p_dec.set_defaults(func=cmd_decoherence)

    p_self = sub.add_parser("selftest", help="run the built-in property checks")
    p_self.add_argument("--seed", type=int, default=0)
    p_self.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnsolvedCase:
        return 3
    except EstimationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
