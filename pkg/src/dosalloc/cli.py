"""Command-line front end: ``dosalloc <command> --config scenario.yaml``.

Exit status is 0 on success, 1 when a condition check reports a failed
verdict (the output is still complete) and 2 on any error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import mdp as mdp_mod
from .config import INDEXES, Scenario, load_scenario
from .errors import DosAllocError
from .model import build_ladder, ladder_step, spectral_check, steady_state
from .montecarlo import SimConfig, simulate_policy, simulate_schedule
from .schedule import ArrivalProfile, dropout_bounds
from .static_opt import (check_average_conditions, check_eigen_floor,
                         check_normal_matrix_conditions, check_terminal_conditions,
                         solve_static, sweep)

SWEEP_COLUMNS = ("power", "attacks", "dropout_beta", "value_trace")


def _fmt(x) -> str:
    return f"{x:.10g}"


def _matrix_text(M) -> str:
    return "\n".join("  [" + ", ".join(f"{v: .6f}" for v in row) + "]" for row in np.asarray(M))


def _alpha(sc: Scenario, args):
    return args.alpha_override if args.alpha_override is not None else sc.alpha


def _ladder(sc: Scenario):
    ss = steady_state(sc.system)
    return ss, build_ladder(sc.system, ss, sc.T)


class Result:
    """Rendered command output plus exit status."""

    def __init__(self, data: dict, text: str, status: int = 0, csv_rows=None):
        self.data = data
        self.text = text
        self.status = status
        self.csv_rows = csv_rows

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.data, indent=2, sort_keys=True) + "\n"
        if fmt == "csv":
            if self.csv_rows is None:
                raise DosAllocError("csv output is only available for sweep")
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for row in self.csv_rows:
                w.writerow([_fmt(row[0]), row[1], _fmt(row[2]), _fmt(row[3])])
            return buf.getvalue()
        return self.text.rstrip("\n") + "\n"


def cmd_steady_state(sc: Scenario, args) -> Result:
    ss = steady_state(sc.system)
    inc = ladder_step(sc.system, ss.Pbar) - ss.Pbar
    spec = spectral_check(sc.system)
    data = {"Pbar": ss.Pbar.tolist(), "iterations": ss.iterations, "residual": ss.residual,
            "first_increment": inc.tolist(), "eigs_AtA": spec.eigs_AtA.tolist(),
            "A_normal": spec.is_normal}
    text = (f"Pbar (after {ss.iterations} iterations, residual {ss.residual:.3e}):\n"
            f"{_matrix_text(ss.Pbar)}\n"
            f"h(Pbar) - Pbar:\n{_matrix_text(inc)}\n"
            f"eigenvalues of A'A: {', '.join(_fmt(e) for e in spec.eigs_AtA)}")
    return Result(data, text)


def _report_text(rep) -> str:
    lines = [f"{rep.name}: {'PASS' if rep.passed else 'FAIL'}"]
    for c in rep.conditions:
        lines.append(f"  [{'pass' if c.passed else 'FAIL'}] {c.id}: margin {c.margin:.6g}"
                     + (f" ({c.note})" if c.note else ""))
    lines += [f"  note: {n}" for n in rep.notes]
    return "\n".join(lines)


def cmd_check(sc: Scenario, args) -> Result:
    ch, budget = sc.require_channel(), sc.require_budget()
    bounds = dropout_bounds(ch, budget, _alpha(sc, args))
    if sc.index == "terminal":
        _, ladder = _ladder(sc)
        main = check_terminal_conditions(ladder, bounds, budget, sc.T)
    else:
        main = check_average_conditions(bounds, budget, sc.T)
    normal = check_normal_matrix_conditions(sc.system, budget, bounds)
    floor = check_eigen_floor(sc.system)
    data = {"index": sc.index, "alpha": bounds.alpha, "beta_lo": bounds.beta_lo,
            "beta_hi": bounds.beta_hi, "report": main.as_dict(),
            "normal_matrix": normal.as_dict(), "eigen_floor": floor}
    text = "\n".join([
        f"dropout: alpha={_fmt(bounds.alpha)} beta_lo={_fmt(bounds.beta_lo)} "
        f"beta_hi={_fmt(bounds.beta_hi)}",
        _report_text(main),
        _report_text(normal),
        f"lambda_min(A'A) >= 1: {'yes' if floor else 'no'}",
    ])
    return Result(data, text, status=0 if main.passed else 1)


def _static(sc: Scenario, args):
    _, ladder = _ladder(sc)
    sol = solve_static(ladder, sc.require_channel(), sc.require_budget(), sc.T, sc.index,
                       _alpha(sc, args))
    return ladder, sol


def cmd_solve_static(sc: Scenario, args) -> Result:
    _, sol = _static(sc, args)
    data = {"index": sol.index, "power": sol.power, "attacks": sol.attacks, "value": sol.value,
            "method": sol.method, "schedule": list(sol.schedule.powers),
            "conditions": sol.report.as_dict() if sol.report else None}
    text = (f"index {sol.index}: delta* = {sol.power:.4f}, n = {sol.attacks}, "
            f"value = {sol.value:.4f} ({sol.method})\n"
            f"attack pattern: {''.join(map(str, sol.schedule.pattern()))}")
    return Result(data, text)


def _grid(sc: Scenario, args):
    if args.grid:
        try:
            start, stop, num = args.grid.split(":")
            return np.linspace(float(start), float(stop), int(num))
        except ValueError:
            raise DosAllocError(f"--grid expects START:STOP:NUM, got {args.grid!r}") from None
    if sc.sweep is not None:
        return np.linspace(sc.sweep["start"], sc.sweep["stop"], sc.sweep["num"])
    b = sc.require_budget()
    return np.linspace(b.delta_lo, b.delta_hi, 31)


def cmd_sweep(sc: Scenario, args) -> Result:
    _, ladder = _ladder(sc)
    rows = sweep(ladder, sc.require_channel(), sc.require_budget(), sc.T, _grid(sc, args),
                 sc.index, _alpha(sc, args))
    data = {"index": sc.index, "columns": list(SWEEP_COLUMNS), "rows": [list(r) for r in rows]}
    text = "\n".join(f"{p:10.4f} {n:4d} {b:.6f} {v:.6f}" for p, n, b, v in rows)
    return Result(data, text, csv_rows=rows)


def _policy_result(sc: Scenario, tradeoff: bool) -> Result:
    _, ladder = _ladder(sc)
    problem = sc.mdp_problem(ladder, tradeoff)
    policy = mdp_mod.solve(problem)
    tree = mdp_mod.decision_tree(policy)
    monotone = mdp_mod.verify_monotone(policy)
    tree["monotone"] = monotone
    lines = [f"{'tradeoff' if tradeoff else 'budget'} MDP, index {problem.index}, T = {problem.T}",
             f"value u*_1 = {policy.value:.6f}",
             f"value in index units = {policy.normalized_value:.6f}",
             f"decisions monotone in rung: {'yes' if monotone else 'no'}"]
    for stage in tree["stages"][:-1]:
        for node in stage["nodes"]:
            st = node["state"]
            where = f"rung {st['rung']}" + (f", energy {st['energy']:g}" if "energy" in st else "")
            lines.append(f"  k={stage['stage']} {where}: power {node['action']:g}")
    return Result(tree, "\n".join(lines))


def cmd_mdp(sc: Scenario, args) -> Result:
    return _policy_result(sc, tradeoff=False)


def cmd_tradeoff(sc: Scenario, args) -> Result:
    return _policy_result(sc, tradeoff=True)


def cmd_simulate(sc: Scenario, args) -> Result:
    trials = args.trials if args.trials is not None else sc.trials
    seed = args.seed if args.seed is not None else sc.seed
    cfg = SimConfig(trials=trials, seed=seed, T=sc.T)
    if sc.mode == "static":
        ladder, sol = _static(sc, args)
        prof = ArrivalProfile.from_schedule(sc.require_channel(), sol.schedule,
                                            dropout_bounds(sc.require_channel(), sc.require_budget(),
                                                           _alpha(sc, args)).alpha)
        rep = simulate_schedule(ladder, prof, cfg)
        analytic = sol.value
        empirical = rep.mean_terminal if sc.index == "terminal" else rep.mean_average
        se = rep.std_err_terminal if sc.index == "terminal" else rep.std_err_average
    else:
        _, ladder = _ladder(sc)
        problem = sc.mdp_problem(ladder, sc.mode == "tradeoff")
        policy = mdp_mod.solve(problem)
        rep = simulate_policy(problem, policy, cfg)
        analytic, empirical, se = policy.normalized_value, rep.mean_objective, rep.std_err_objective
    z = (empirical - analytic) / se if se > 0 else 0.0
    data = {"mode": sc.mode, "index": sc.index, "trials": trials, "seed": seed,
            "analytic": analytic, "empirical": empirical, "std_err": se, "z": z,
            "mean_terminal": rep.mean_terminal, "mean_average": rep.mean_average,
            "rung_histogram": rep.rung_histogram.tolist()}
    text = (f"{sc.mode} {sc.index}: analytic {analytic:.6f}, empirical {empirical:.6f} "
            f"+/- {se:.6f} ({trials} trials, seed {seed}, z = {z:.2f})")
    return Result(data, text)


COMMANDS = {
    "steady-state": cmd_steady_state,
    "check": cmd_check,
    "solve-static": cmd_solve_static,
    "sweep": cmd_sweep,
    "mdp": cmd_mdp,
    "tradeoff": cmd_tradeoff,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dosalloc",
                                     description="DoS attack power allocation against remote estimation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario YAML file")
        p.add_argument("--index", choices=INDEXES, help="override run.index")
        p.add_argument("--alpha-override", type=float, help="no-attack dropout probability")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out", help="write output to this file instead of stdout")
        p.add_argument("--format", choices=("text", "csv", "json"),
                       default="csv" if name == "sweep" else "text")
        if name == "sweep":
            p.add_argument("--grid", help="power grid START:STOP:NUM")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.config)
        if args.index:
            sc.index = args.index
        result = COMMANDS[args.command](sc, args)
        out = result.render(args.format)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(out)
        else:
            sys.stdout.write(out)
    except (DosAllocError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return result.status


if __name__ == "__main__":
    sys.exit(main())
