"""Acceptance suite: one check per reproduction criterion.

Every check prints a single ``[PASS]`` / ``[FAIL]`` line with the numbers it
compared. Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import csv
import io
import sys
import time

import numpy as np
import pytest
from scipy.stats import ortho_group

from dosalloc.channel import ChannelModel
from dosalloc.mdp import (ActionSet, MdpProblem, backward_induction, brute_force_policy,
                          tradeoff_induction, verify_monotone)
from dosalloc.model import (SystemModel, build_ladder, ladder_step, spectral_check,
                            steady_state)
from dosalloc.montecarlo import SimConfig, simulate_policy, simulate_schedule
from dosalloc.schedule import (ArrivalProfile, PowerBudget, brute_force_schedule,
                               canonical_average_schedule, canonical_terminal_schedule,
                               dropout_bounds, expected_average)
from dosalloc.static_opt import (attack_count_range, check_average_conditions,
                                 check_normal_matrix_conditions, check_terminal_conditions,
                                 normal_matrix_upper_bound, solve_static, solve_static_average,
                                 solve_static_terminal, sweep, v_profile_closed, v_profile_numeric)

CHANNEL = ChannelModel(delta_s=10, G_s=1, G_a=1, sigma2=2, L=20)
HIGH = PowerBudget(200, 20, 50)
LOW = PowerBudget(50, 2, 20)
TABLE = ActionSet([0, 5, 10, 15], [0.1, 0.3, 0.7, 0.9])
REPORTED = {
    "terminal_low": 17.5865,
    "average_low": 3.2435,
    "dynamic": 8.0256,
    "tradeoff": 5.3325,
}


def example_system(A=((1.2, 0.1), (0.0, 1.0))):
    return SystemModel(np.array(A), np.eye(2), np.diag([1.0, 2.0]), 0.5 * np.eye(2))


def ladder_for(T, A=((1.2, 0.1), (0.0, 1.0))):
    sys_ = example_system(A)
    return build_ladder(sys_, steady_state(sys_), T)


class Check:
    """Collects named sub-checks and the runtime of one criterion."""

    def __init__(self, limit_s):
        self.limit = limit_s
        self.parts = []
        self.t0 = time.perf_counter()

    def __call__(self, name, ok, detail=""):
        self.parts.append((name, bool(ok), detail))

    def finish(self):
        elapsed = time.perf_counter() - self.t0
        self("runtime", elapsed < self.limit, f"{elapsed:.2f}s < {self.limit}s")
        return all(ok for _, ok, _ in self.parts)

    def summary(self):
        return "; ".join(f"{n}{'' if ok else ' (FAILED)'}: {d}" if d else f"{n}{'' if ok else ' (FAILED)'}"
                         for n, ok, d in self.parts)


def c01_steady_state(chk):
    sys_ = example_system()
    ss = steady_state(sys_)
    inc = ladder_step(sys_, ss.Pbar) - ss.Pbar
    err = float(np.max(np.abs(inc - np.array([[1.1709, 0.0418], [0.0418, 2.0]]))))
    chk("h(Pbar)-Pbar", err <= 1e-3, f"max error {err:.2e}")
    eigs = spectral_check(sys_).eigs_AtA
    err = float(np.max(np.abs(eigs - [0.9788, 1.4712])))
    chk("eig(A'A)", err <= 1e-3, f"{eigs[0]:.4f}, {eigs[1]:.4f}")


def c02_terminal_high_band(chk):
    ladder = ladder_for(30)
    bounds = dropout_bounds(CHANNEL, HIGH, alpha=0.0)
    rep = check_terminal_conditions(ladder, bounds, HIGH, 30)
    chk("conditions pass", rep.passed,
        ", ".join(f"{c.id} margin {c.margin:.4g}" for c in rep.conditions))
    sol = solve_static_terminal(ladder, CHANNEL, HIGH, 30, alpha=0.0)
    chk("delta*=20", sol.power == 20, f"{sol.power:g}")
    chk("closed form", sol.method == "closed_form", sol.method)
    rows = sweep(ladder, CHANNEL, HIGH, 30, np.linspace(20, 50, 31), "terminal", alpha=0.0)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["power", "attacks", "dropout_beta", "value_trace"])
    w.writerows(rows)
    parsed = list(csv.DictReader(io.StringIO(buf.getvalue())))
    arg = float(max(parsed, key=lambda r: float(r["value_trace"]))["power"])
    chk("sweep argmax", arg == 20, f"{arg:g}")


def c03_terminal_low_band(chk):
    ladder = ladder_for(30)
    sol = solve_static_terminal(ladder, CHANNEL, LOW, 30)
    chk("conditions fail", not sol.report.passed)
    chk("exhaustion", sol.method == "exhaustion")
    chk("delta*=50/6", abs(sol.power - 50 / 6) < 1e-9, f"{sol.power:.4f}")
    chk("n=6", sol.attacks == 6, str(sol.attacks))
    chk("value", abs(sol.value - REPORTED["terminal_low"]) <= 1e-3,
        f"{sol.value:.4f} vs {REPORTED['terminal_low']}")


def c04_average_high_band(chk):
    ladder = ladder_for(15)
    bounds = dropout_bounds(CHANNEL, HIGH, alpha=0.0)
    rep = check_average_conditions(bounds, HIGH, 15)
    chk("conditions pass", rep.passed)
    sol = solve_static_average(ladder, CHANNEL, HIGH, 15, alpha=0.0)
    chk("delta*=20", sol.power == 20, f"{sol.power:g}")
    chk("closed form", sol.method == "closed_form", sol.method)


def c05_average_low_band(chk):
    ladder = ladder_for(30)
    sol = solve_static_average(ladder, CHANNEL, LOW, 30)
    chk("conditions fail", not sol.report.passed)
    chk("exhaustion", sol.method == "exhaustion")
    chk("delta*=50/8", abs(sol.power - 50 / 8) < 1e-9, f"{sol.power:.4f}")
    chk("n=8", sol.attacks == 8, str(sol.attacks))
    chk("value", abs(sol.value - REPORTED["average_low"]) <= 1e-3,
        f"{sol.value:.4f} vs {REPORTED['average_low']}")


def c06_dynamic(chk):
    pol = backward_induction(MdpProblem(5, TABLE, ladder_for(5), 60, "average"))
    chk("value", abs(pol.normalized_value - REPORTED["dynamic"]) <= 1e-3,
        f"{pol.normalized_value:.4f} (total {pol.value:.4f})")


def c07_tradeoff(chk):
    pol = tradeoff_induction(MdpProblem(5, TABLE, ladder_for(5), None, "average", 0.35))
    chk("value", abs(pol.normalized_value - REPORTED["tradeoff"]) <= 1e-3,
        f"{pol.normalized_value:.4f} (total {pol.value:.4f})")
    chk("monotone", verify_monotone(pol))


def c08_schedule_oracle(chk):
    ladder = ladder_for(10)
    bad = []
    count = 0
    for alpha in (0.0, 0.05, 0.2):
        for beta in (0.5, 0.8, 0.95):
            for T in range(1, 11):
                for n in range(T + 1):
                    count += 1
                    best, val = brute_force_schedule(ladder, alpha, beta, n, T, "terminal")
                    if best.pattern() != canonical_terminal_schedule(n, T, 1).pattern():
                        bad.append(("terminal", alpha, beta, T, n))
                    _, val = brute_force_schedule(ladder, alpha, beta, n, T, "average")
                    cav = expected_average(ladder, ArrivalProfile.from_pattern(
                        canonical_average_schedule(n, T, 1).pattern(), alpha, beta))
                    if abs(cav - val) > 1e-12 * max(1.0, abs(val)):
                        bad.append(("average", alpha, beta, T, n))
    chk("trailing / centred blocks optimal", not bad, f"{count} cases, {len(bad)} mismatches {bad[:3]}")


def c09_v_equivalence(chk):
    worst = 0.0
    shapes = 0
    for alpha, theta, beta in [(0.05, 0.8, 0.78), (0.0, 0.9, 0.5), (0.2, 0.6, 0.95), (0.1, 0.99, 0.3)]:
        for s in range(1, 7):
            for m in (s, s - 1):
                for n in range(s + 1, 13):
                    shapes += 1
                    d = np.abs(v_profile_closed(m, n, s, alpha, theta, beta)
                               - v_profile_numeric(m, n, s, alpha, theta, beta))
                    worst = max(worst, float(d.max()))
    chk("closed == numeric", worst <= 1e-10, f"{shapes} shapes, max gap {worst:.2e}")


def _small_problems():
    ladder = ladder_for(3)
    for T in (1, 2, 3):
        for levels, drop in (([0, 1], (0.1, 0.6)), ([0, 1, 2], (0.1, 0.5, 0.8)),
                             ([0, 2, 3], (0.0, 0.7, 0.95)), ([0, 1, 2], (0.3, 0.3, 0.9))):
            acts = ActionSet(levels, drop)
            for index in ("terminal", "average"):
                for budget in (0, 1, 2, 3, 4, 6):
                    yield MdpProblem(T, acts, ladder, budget, index)
                for omega in (0.0, 0.1, 0.5, 3.0):
                    yield MdpProblem(T, acts, ladder, None, index, omega)


def c10_policy_oracle(chk):
    bad = 0
    count = 0
    for p in _small_problems():
        count += 1
        val, _ = brute_force_policy(p)
        pol = tradeoff_induction(p) if p.tradeoff else backward_induction(p)
        if abs(pol.value - val) > 1e-12 * max(1.0, abs(val)):
            bad += 1
    chk("induction == exhaustive", bad == 0, f"{count} instances, {bad} mismatches")


def c11_dynamic_vs_static(chk):
    T = 7
    A = ((1.01, 3.0), (0.0, 1.0))
    ladder = ladder_for(T, A)
    ch = ChannelModel(delta_s=2, G_s=1, G_a=1, sigma2=0.5, L=20)
    acts = ActionSet.from_channel([0.0] + [2 + 0.25 * j for j in range(33)], ch)
    gaps = []
    for D in range(15, 21):
        static = solve_static(ladder, ch, PowerBudget(D, 2, 10), T, "average").value
        dyn = backward_induction(MdpProblem(T, acts, ladder, D, "average")).normalized_value
        gaps.append(dyn - static)
    chk("dynamic >= static", min(gaps) >= -1e-9,
        "gaps " + ", ".join(f"{g:.3f}" for g in gaps))


def _within(chk, name, mean, se, exact):
    z = (mean - exact) / se
    chk(name, abs(z) <= 4, f"analytic {exact:.4f}, simulated {mean:.4f}, z={z:+.2f}")


def c12_monte_carlo(chk):
    trials = 10**6
    ladder = ladder_for(30)
    for seed, (name, budget) in enumerate((("terminal low band", LOW), ("average low band", LOW))):
        index = "terminal" if name.startswith("terminal") else "average"
        sol = solve_static(ladder, CHANNEL, budget, 30, index)
        rep = simulate_schedule(ladder, ArrivalProfile.from_schedule(CHANNEL, sol.schedule),
                                SimConfig(trials, 100 + seed))
        mean, se = ((rep.mean_terminal, rep.std_err_terminal) if index == "terminal"
                    else (rep.mean_average, rep.std_err_average))
        _within(chk, name, mean, se, sol.value)
    short = ladder_for(5)
    for seed, p in enumerate((MdpProblem(5, TABLE, short, 60, "average"),
                              MdpProblem(5, TABLE, short, None, "average", 0.35))):
        pol = backward_induction(p) if not p.tradeoff else tradeoff_induction(p)
        rep = simulate_policy(p, pol, SimConfig(trials, 200 + seed))
        _within(chk, "tradeoff policy" if p.tradeoff else "budget policy",
                rep.mean_objective, rep.std_err_objective, pol.normalized_value)


def _random_normal_instance(rng):
    while True:
        ch = ChannelModel(rng.uniform(2, 10), 1, 1, rng.uniform(0.5, 3), int(rng.integers(5, 40)))
        lo = rng.uniform(0.5, 10)
        hi = lo * (1 + rng.uniform(1e-6, 1e-2))
        n = int(rng.integers(1, 6))
        D = lo * n + rng.uniform(0, 0.5 * lo)
        if D < hi:
            continue
        budget = PowerBudget(D, lo, hi)
        bounds = dropout_bounds(ch, budget, alpha=0.0)
        upper = normal_matrix_upper_bound(bounds, attack_count_range(budget).n_hi)
        if not upper > 1.0001:
            continue
        d = int(rng.integers(1, 4))
        if rng.random() < 0.5:  # symmetric: U diag U'
            U = ortho_group.rvs(d, random_state=rng) if d > 1 else np.eye(1)
            sv = np.sqrt(rng.uniform(1.0, upper, size=d)) * rng.choice([-1.0, 1.0], size=d)
            A = U @ np.diag(sv) @ U.T
        else:  # scaled orthogonal
            O = ortho_group.rvs(d, random_state=rng) if d > 1 else np.eye(1)
            A = np.sqrt(rng.uniform(1.0, upper)) * O
        sys_ = SystemModel(A, np.eye(d), np.diag(rng.uniform(0.5, 2, size=d)), np.eye(d))
        if not check_normal_matrix_conditions(sys_, budget, bounds).passed:
            continue
        return sys_, budget, bounds


def c13_relaxation(chk):
    rng = np.random.default_rng(2024)
    passed = 0
    N = 200
    for _ in range(N):
        sys_, budget, bounds = _random_normal_instance(rng)
        nbar = attack_count_range(budget).n_hi
        T = int(rng.integers(nbar, nbar + 15))
        ladder = build_ladder(sys_, steady_state(sys_), T)
        passed += check_terminal_conditions(ladder, bounds, budget, T).passed
    chk("implied conditions hold", passed == N, f"{passed}/{N}")


CRITERIA = [
    (1, "steady state of the example system", c01_steady_state, 1),
    (2, "terminal index, strong attacker", c02_terminal_high_band, 5),
    (3, "terminal index, weak attacker", c03_terminal_low_band, 5),
    (4, "average index, strong attacker", c04_average_high_band, 10),
    (5, "average index, weak attacker", c05_average_low_band, 10),
    (6, "dynamic allocation under a budget", c06_dynamic, 2),
    (7, "dynamic allocation with power cost", c07_tradeoff, 2),
    (8, "schedule shapes vs exhaustive placement", c08_schedule_oracle, 120),
    (9, "cumulative-gap closed form", c09_v_equivalence, 60),
    (10, "policies vs exhaustive policy search", c10_policy_oracle, 60),
    (11, "dynamic beats static", c11_dynamic_vs_static, 60),
    (12, "Monte Carlo agreement", c12_monte_carlo, 120),
    (13, "normal-matrix conditions imply general ones", c13_relaxation, 60),
]


def run_criterion(num, title, fn, limit):
    chk = Check(limit)
    fn(chk)
    ok = chk.finish()
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} ({title}): {chk.summary()}"
    return ok, line


@pytest.mark.parametrize("num,title,fn,limit", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(num, title, fn, limit, capsys):
    ok, line = run_criterion(num, title, fn, limit)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
