"""Optimal constant attack power: sufficient-condition checks, closed forms
and exhaustion search over the attack count.

With a constant power ``delta`` the attacker can strike ``floor(Delta/delta)``
times; the optimal placement of those strikes is known (trailing block for
the terminal index, centred block for the average index), so the only
remaining decision is the count ``n`` and the largest power that still
affords ``n`` strikes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel, dropout_prob
from .errors import Infeasible, MalformedCdf, MalformedPartition, UnsupportedShape
from .model import ErrorLadder, SystemModel, spectral_check
from .schedule import (
    ArrivalProfile,
    AttackSchedule,
    DropoutBounds,
    PowerBudget,
    average_partition,
    canonical_average_schedule,
    canonical_terminal_schedule,
    dropout_bounds,
    expected_average,
    occupancy,
    terminal_closed_form,
)

FLOOR_RTOL = 1e-12
V_TOL = 1e-12
TIE_TOL = 1e-12


def floor_guard(x: float) -> int:
    """``floor`` that does not drop exact quotients such as ``50 / (50/6)``."""
    return math.floor(x + FLOOR_RTOL * abs(x))


@dataclass(frozen=True)
class AttackCountRange:
    n_hi: int
    n_lo: int


def attack_count_range(budget: PowerBudget) -> AttackCountRange:
    return AttackCountRange(n_hi=floor_guard(budget.Delta / budget.delta_lo),
                            n_lo=floor_guard(budget.Delta / budget.delta_hi))


@dataclass(frozen=True)
class Condition:
    """One inequality of a sufficient-condition set.

    ``margin <= 0`` exactly when the inequality holds.
    """

    id: str
    passed: bool
    lhs: float
    margin: float
    note: str = ""


@dataclass(frozen=True)
class ConditionReport:
    name: str
    conditions: tuple
    notes: tuple = ()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, cid: str) -> Condition:
        for c in self.conditions:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "conditions": [
                {"id": c.id, "passed": c.passed, "lhs": c.lhs, "margin": c.margin, "note": c.note}
                for c in self.conditions
            ],
            "notes": list(self.notes),
        }


def _le_zero(cid, value, tol=0.0, note=""):
    return Condition(cid, bool(value <= tol), float(value), float(value), note)


@dataclass(frozen=True)
class Candidate:
    power: float
    attacks: int
    beta: float
    value: float


@dataclass(frozen=True)
class StaticSolution:
    power: float
    attacks: int
    schedule: AttackSchedule
    value: float
    method: str
    index: str
    report: ConditionReport | None = None
    candidates: tuple = field(default=())


# -- terminal index ----------------------------------------------------------

def check_terminal_conditions(ladder: ErrorLadder, bounds: DropoutBounds,
                              budget: PowerBudget, T: int) -> ConditionReport:
    """Sufficient conditions for "more strikes is better" (terminal index).

    1. ``Tr(H^t)`` nondecreasing in ``t = 1..T``.
    2. ``sum_{i<nbar} (b_hi^i - b_lo^i)
       + (alpha b_hi^(nbar-1) - b_lo^nbar) sum_{i=0}^{T-nbar} alpha^i <= 0``.
    """
    diffs = np.asarray(ladder.diffs[:T])
    scale = max(1.0, float(np.max(np.abs(diffs), initial=0.0)))
    drop = float(np.max(diffs[:-1] - diffs[1:], initial=-np.inf)) if diffs.size > 1 else -np.inf
    if not np.isfinite(drop):
        drop = 0.0
    c1 = _le_zero("trace-increments-nondecreasing", drop, tol=1e-10 * scale,
                  note="largest decrease between consecutive Tr(H^t)")

    a, bl, bh = bounds.alpha, bounds.beta_lo, bounds.beta_hi
    nbar = attack_count_range(budget).n_hi
    lhs = math.fsum(bh**i - bl**i for i in range(1, nbar))
    lhs += (a * bh ** (nbar - 1) - bl**nbar) * math.fsum(a**i for i in range(0, T - nbar + 1))
    c2 = _le_zero("dropout-balance", lhs)
    return ConditionReport("terminal-more-strikes", (c1, c2))


def check_eigen_floor(sys: SystemModel) -> bool:
    """``lambda_min(A'A) >= 1``, which implies nondecreasing trace increments."""
    return spectral_check(sys).min_eig >= 1.0 - 1e-10


def normal_matrix_upper_bound(bounds: DropoutBounds, n_hi: int) -> float:
    bh, bl = bounds.beta_hi, bounds.beta_lo
    ratio = (bh - bl) / bl ** (n_hi + 1)
    if ratio < 0:
        return math.nan
    return (1.0 - math.sqrt(ratio)) / bh


def check_normal_matrix_conditions(sys: SystemModel, budget: PowerBudget,
                                   bounds: DropoutBounds) -> ConditionReport:
    """Earlier, stricter conditions for the no-loss channel (``alpha = 0``).

    ``A`` normal and every eigenvalue of ``A'A`` strictly inside
    ``(1, upper)``. The upper bound is implemented as published; its
    original source is known to carry a typo, which is not repaired here.
    """
    spec = spectral_check(sys)
    nbar = attack_count_range(budget).n_hi
    upper = normal_matrix_upper_bound(bounds, nbar)
    c1 = Condition("A-normal", spec.is_normal, spec.normality_gap,
                   spec.normality_gap - 1e-10, "max |A'A - AA'|")
    lo_gap = 1.0 - spec.eigs_AtA[0]
    hi_gap = spec.eigs_AtA[-1] - upper if not math.isnan(upper) else math.inf
    margin = max(lo_gap, hi_gap)
    c2 = Condition("AtA-eigenvalue-band", bool(margin < 0), float(spec.eigs_AtA[-1]), float(margin),
                   f"band (1, {upper:.6g})")
    notes = ("upper bound used verbatim from the published normal-matrix result",)
    if bounds.alpha != 0:
        notes += (f"stated for alpha = 0; alpha = {bounds.alpha:.6g} here",)
    return ConditionReport("normal-matrix", (c1, c2), notes)


def power_maximizing_count(budget: PowerBudget, n: int) -> float:
    """Largest admissible power that still affords exactly ``n`` strikes."""
    if n < 1:
        raise Infeasible("n must be >= 1")
    power = min(budget.Delta / n, budget.delta_hi)
    if power < budget.delta_lo * (1 - FLOOR_RTOL) or floor_guard(budget.Delta / power) != n:
        raise Infeasible(
            f"no power in [{budget.delta_lo}, {budget.delta_hi}] gives exactly {n} strikes")
    return power


def _candidates(ladder, ch, budget, T, alpha, value_fn):
    rng = attack_count_range(budget)
    out = []
    ns = range(rng.n_lo, min(rng.n_hi, T) + 1)
    for n in ns:
        try:
            power = power_maximizing_count(budget, n)
        except Infeasible:
            continue
        beta = dropout_prob(ch, power)
        out.append(Candidate(power, n, beta, value_fn(alpha, beta, n, power)))
    if not out:
        # every affordable count exceeds the horizon: strike every step at full power
        power = budget.delta_hi
        beta = dropout_prob(ch, power)
        out.append(Candidate(power, T, beta, value_fn(alpha, beta, T, power)))
    return out


def _best(cands):
    best = cands[0]
    for c in cands[1:]:  # ascending n, so ties move to the larger count
        if c.value >= best.value - TIE_TOL:
            best = c
    return best


def _closed_form_power(budget: PowerBudget) -> tuple:
    rng = attack_count_range(budget)
    if rng.n_lo < rng.n_hi:
        return power_maximizing_count(budget, rng.n_hi), rng.n_hi
    return budget.delta_hi, rng.n_hi


def solve_static_terminal(ladder: ErrorLadder, ch: ChannelModel, budget: PowerBudget, T: int,
                          alpha: float | None = None) -> StaticSolution:
    """Optimal constant power for the terminal index.

    Uses the closed form when :func:`check_terminal_conditions` passes and
    the strike count fits in the horizon, otherwise searches the at most
    ``T`` candidate counts.
    """
    bounds = dropout_bounds(ch, budget, alpha)
    a = bounds.alpha
    report = check_terminal_conditions(ladder, bounds, budget, T)

    def value(a_, b_, n_, _power):
        return terminal_closed_form(ladder, a_, b_, n_, T)

    cands = tuple(_candidates(ladder, ch, budget, T, a, value))
    power, n = _closed_form_power(budget)
    if report.passed and n <= T:
        beta = dropout_prob(ch, power)
        val = terminal_closed_form(ladder, a, beta, n, T)
        method = "closed_form"
    else:
        best = _best(cands)
        power, n, val = best.power, best.attacks, best.value
        method = "exhaustion"
    return StaticSolution(power=power, attacks=n,
                          schedule=canonical_terminal_schedule(n, T, power), value=val,
                          method=method, index="terminal", report=report, candidates=cands)


# -- average index -----------------------------------------------------------

def _pattern_profile(m, n, s, alpha, drop):
    return ArrivalProfile.from_pattern([0] * m + [1] * n + [0] * s, alpha, drop)


def v_profile_numeric(m: int, n: int, s: int, alpha: float, theta: float, beta: float) -> np.ndarray:
    """Cumulative occupancy gap ``V_i``, ``i = 0..T-1``, between two centred schedules.

    The first schedule strikes ``n`` times with dropout ``theta`` after ``m``
    idle steps, the second ``n + 1`` times with dropout ``beta``; both have
    horizon ``T = m + n + s``. ``V_i >= 0`` for every ``i`` means the first
    schedule's induced error is stochastically smaller.
    """
    if min(m, n) < 0 or s < 1:
        raise MalformedPartition(f"need m, n >= 0 and s >= 1, got ({m}, {n}, {s})")
    T = m + n + s
    p1 = occupancy(_pattern_profile(m, n, s, alpha, theta))
    p2 = occupancy(_pattern_profile(m, n + 1, s - 1, alpha, beta))
    F = (p1 - p2).sum(axis=1)
    return np.cumsum(F)[:T]


def v_profile_closed(m: int, n: int, s: int, alpha: float, theta: float, beta: float) -> np.ndarray:
    """Piecewise closed form of :func:`v_profile_numeric` for ``1 <= s < n``.

    Covers the two centred shapes ``m = s`` and ``m = s - 1``.
    """
    if not (1 <= s < n and m in (s, s - 1)):
        raise UnsupportedShape(f"closed form needs 1 <= s < n and m in (s, s-1); got ({m}, {n}, {s})")
    a, th, be = alpha, theta, beta
    T, N = m + n + s, n + s

    def cross(lo, hi, i):
        return math.fsum(a**j * (be ** (i - j + 1) - th ** (i - j + 1)) for j in range(lo, hi + 1))

    V = np.empty(T)
    for i in range(T):
        if i <= s - 1:
            v = (n - i + 1) * be ** (i + 1) - (n - i) * th ** (i + 1) - a ** (i + 1) + 2 * cross(1, i, i)
        elif i <= n:
            head = (n - i + 1) * be ** (i + 1) - (n - i) * th ** (i + 1) + 2 * cross(1, s - 1, i)
            if m == s:
                v = head + a**s * be ** (i - s + 1) - 2 * a**s * th ** (i - s + 1)
            else:
                v = head - a**s * th ** (i + 1 - s)
        elif i <= N - 1:
            tail = (2 * cross(i - n + 1, s - 1, i)
                    + (i - n + 1) * a ** (i - n) * be ** (n + 1)
                    - (i - n) * a ** (i - n + 1) * th**n)
            if m == s:
                v = tail + a**s * be ** (i - s + 1) - 2 * a**s * th ** (i - s + 1)
            else:
                v = tail - a**s * th ** (i - s + 1)
        else:
            v = (T - i) * (a ** (i - n) * be ** (n + 1) - a ** (i - n + 1) * th**n)
        V[i] = v
    return V


def check_average_conditions(bounds: DropoutBounds, budget: PowerBudget, T: int,
                             interior: bool = False) -> ConditionReport:
    """Sufficient conditions for "more strikes is better" (average index).

    1. ``2 alpha b_hi^(nbar-1) - b_lo^nbar <= 0``.
    2. ``V_i(m, n, s, b_hi, b_lo) >= 0`` for all ``i`` at ``n = nbar - 1``
       and ``n = nlo`` with the centred partition, evaluated numerically.

    ``interior=True`` additionally checks every ``n`` in between.
    """
    a, bl, bh = bounds.alpha, bounds.beta_lo, bounds.beta_hi
    rng = attack_count_range(budget)
    nbar, nlo = rng.n_hi, rng.n_lo
    c1 = _le_zero("dropout-balance", 2 * a * bh ** (nbar - 1) - bl**nbar)

    if interior:
        ns = list(range(nlo, nbar))
    else:
        ns = sorted({nbar - 1, nlo})
    conds = [c1]
    notes = []
    for n in ns:
        if not nlo <= n <= nbar - 1:
            continue
        if T - n < 1:
            notes.append(f"n={n}: no room for an extra strike within T={T}; skipped")
            continue
        m, s = average_partition(n, T)
        vmin = float(v_profile_numeric(m, n, s, a, bh, bl).min())
        conds.append(Condition(f"cumulative-gap-nonnegative[n={n}]", bool(vmin >= -V_TOL),
                               vmin, -vmin, f"partition m={m}, s={s}"))
    if len(conds) == 1:
        notes.append("no strike count in range; condition 2 holds vacuously")
    return ConditionReport("average-more-strikes", tuple(conds), tuple(notes))


def solve_static_average(ladder: ErrorLadder, ch: ChannelModel, budget: PowerBudget, T: int,
                         alpha: float | None = None) -> StaticSolution:
    """Optimal constant power for the average index (centred schedules)."""
    bounds = dropout_bounds(ch, budget, alpha)
    a = bounds.alpha
    report = check_average_conditions(bounds, budget, T)

    def value(a_, b_, n_, _power):
        m, s = average_partition(n_, T)
        return expected_average(ladder, _pattern_profile(m, n_, s, a_, b_))

    cands = tuple(_candidates(ladder, ch, budget, T, a, value))
    power, n = _closed_form_power(budget)
    if report.passed and n <= T:
        val = value(a, dropout_prob(ch, power), n, power)
        method = "closed_form"
    else:
        best = _best(cands)
        power, n, val = best.power, best.attacks, best.value
        method = "exhaustion"
    return StaticSolution(power=power, attacks=n,
                          schedule=canonical_average_schedule(n, T, power), value=val,
                          method=method, index="average", report=report, candidates=cands)


def solve_static(ladder, ch, budget, T, index="terminal", alpha=None) -> StaticSolution:
    if index == "terminal":
        return solve_static_terminal(ladder, ch, budget, T, alpha)
    if index == "average":
        return solve_static_average(ladder, ch, budget, T, alpha)
    raise ValueError(f"unknown index {index!r}")


def sweep(ladder: ErrorLadder, ch: ChannelModel, budget: PowerBudget, T: int, powers,
          index: str = "terminal", alpha: float | None = None) -> list:
    """Index value of the best placement at each constant power in ``powers``.

    Rows are ``(power, attacks, dropout_beta, value_trace)``; the strike
    count is ``floor(Delta / power)`` capped at ``T``.
    """
    a = dropout_bounds(ch, budget, alpha).alpha
    rows = []
    for power in powers:
        power = float(power)
        n = min(floor_guard(budget.Delta / power), T)
        beta = dropout_prob(ch, power)
        if index == "terminal":
            val = terminal_closed_form(ladder, a, beta, n, T)
        elif index == "average":
            m, s = average_partition(n, T)
            val = expected_average(ladder, _pattern_profile(m, n, s, a, beta))
        else:
            raise ValueError(f"unknown index {index!r}")
        rows.append((power, n, beta, val))
    return rows


# -- stochastic order --------------------------------------------------------

def _validate_cdf(cdf, name):
    cdf = np.asarray(cdf, dtype=float)
    if cdf.ndim != 1 or cdf.size == 0:
        raise MalformedCdf(f"{name} must be a non-empty vector")
    if np.any(np.diff(cdf) < -1e-12):
        raise MalformedCdf(f"{name} is not nondecreasing")
    if abs(cdf[-1] - 1.0) > 1e-9:
        raise MalformedCdf(f"{name} ends at {cdf[-1]!r}, not 1")
    return cdf


def stochastic_dominance(cdf_x, cdf_y) -> bool:
    """True when X is smaller than Y in the usual stochastic order."""
    x = _validate_cdf(cdf_x, "cdf_x")
    y = _validate_cdf(cdf_y, "cdf_y")
    if x.size != y.size:
        raise MalformedCdf("CDFs must share a support")
    return bool(np.all(x >= y - 1e-12))


def induced_cdf(profile: ArrivalProfile) -> np.ndarray:
    """CDF over ladder rungs of the time-averaged occupancy distribution."""
    return np.cumsum(occupancy(profile).mean(axis=1))

