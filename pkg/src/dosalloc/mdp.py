"""Finite-horizon MDPs for dynamic attack power allocation.

Two problems share one machinery:

* budget mode: state ``(rung, remaining energy)``, actions limited to the
  remaining energy, solved by plain backward induction;
* tradeoff mode: no budget, each unit of power costs ``omega`` in the
  reward, solved by monotone backward induction (actions pruned from below
  by the previous rung's optimal action).

Powers and energies are integer multiples of ``ActionSet.scale`` so the
reachable energy set is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import ChannelModel, dropout_prob
from .errors import EmptyActionSet, InsufficientEnergy, InvalidModel, LadderTooShort, TooLarge
from .model import ErrorLadder
from .static_opt import Condition, ConditionReport

DEFAULT_SCALE = 1e-4
TIE_RTOL = 1e-12
BRUTE_FORCE_LIMIT = 10**7


def _to_units(x: float, scale: float) -> int:
    u = round(x / scale)
    if abs(u * scale - x) > 1e-9 * max(1.0, abs(x)):
        raise InvalidModel(f"{x!r} is not a multiple of the fixed-point scale {scale!r}")
    return int(u)


@dataclass(frozen=True)
class ActionSet:
    """Discrete attack power levels with their dropout probabilities.

    ``units`` are the levels in integer multiples of ``scale``.
    """

    levels: tuple
    dropout: tuple
    scale: float = DEFAULT_SCALE
    units: tuple = field(init=False)

    def __post_init__(self):
        levels = tuple(float(x) for x in self.levels)
        dropout = tuple(float(b) for b in self.dropout)
        if len(levels) != len(dropout):
            raise InvalidModel("levels and dropout must have the same length")
        if not levels or levels[0] != 0.0:
            raise InvalidModel("action set must contain 0 as its smallest level")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise InvalidModel("levels must be strictly increasing")
        if any(not 0.0 <= b <= 1.0 for b in dropout):
            raise InvalidModel("dropout probabilities must lie in [0, 1]")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "dropout", dropout)
        object.__setattr__(self, "units", tuple(_to_units(x, self.scale) for x in levels))

    @classmethod
    def from_channel(cls, levels, ch: ChannelModel, scale: float = DEFAULT_SCALE,
                     alpha: float | None = None) -> ActionSet:
        levels = [float(x) for x in levels]
        drop = [float(dropout_prob(ch, x)) for x in levels]
        if alpha is not None:
            drop[0] = float(alpha)
        out = cls(levels, drop, scale)
        if any(b <= a for a, b in zip(drop, drop[1:])):
            raise InvalidModel("channel-derived dropout is not strictly increasing")
        return out

    def __len__(self):
        return len(self.levels)

    def beta(self, level: float) -> float:
        return self.dropout[self.index(level)]

    def index(self, level: float) -> int:
        u = _to_units(level, self.scale)
        try:
            return self.units.index(u)
        except ValueError:
            raise InvalidModel(f"{level!r} is not an action level") from None


class MdpState(NamedTuple):
    rung: int
    energy: int | None = None  # fixed-point units; None in tradeoff mode


@dataclass(frozen=True)
class MdpProblem:
    """Finite-horizon attack MDP.

    ``index`` picks the reward ("terminal" or "average"); setting ``omega``
    switches to tradeoff mode (no budget, power costs ``omega`` per unit).
    """

    horizon: int
    actions: ActionSet
    ladder: ErrorLadder
    budget: float | None = None
    index: str = "average"
    omega: float | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise InvalidModel("horizon must be >= 1")
        if self.ladder.T < self.horizon:
            raise LadderTooShort(f"ladder covers {self.ladder.T} rungs, need {self.horizon}")
        if self.index not in ("terminal", "average"):
            raise InvalidModel(f"unknown index {self.index!r}")
        if self.omega is None:
            if self.budget is None or self.budget < 0:
                raise InvalidModel("budget mode needs a nonnegative budget")
            _to_units(self.budget, self.actions.scale)
        elif not self.omega >= 0:
            raise InvalidModel("omega must be >= 0")

    @property
    def T(self) -> int:
        return self.horizon

    @property
    def tradeoff(self) -> bool:
        return self.omega is not None

    @property
    def budget_units(self) -> int | None:
        return None if self.tradeoff else _to_units(self.budget, self.actions.scale)

    def initial_state(self) -> MdpState:
        return MdpState(0, self.budget_units)

    def allowed(self, state: MdpState) -> list:
        """Indices of actions allowed in ``state``."""
        if state.energy is None:
            return list(range(len(self.actions)))
        return [j for j, u in enumerate(self.actions.units) if u <= state.energy]


@dataclass
class MdpPolicy:
    """Stage-indexed decision and value tables; ``value`` is ``u*_1(s_1)``."""

    problem: MdpProblem
    decision: dict
    value_table: dict
    value: float

    @property
    def normalized_value(self) -> float:
        """Value in units of the index: divided by ``T`` for the average index."""
        return self.value / self.problem.T if self.problem.index == "average" else self.value

    def action(self, k: int, state: MdpState) -> float:
        return self.decision[(k, state)]


def transition(problem: MdpProblem, state: MdpState, action: float) -> list:
    """Successor distribution ``[(state, prob), ...]`` after playing ``action``."""
    j = problem.actions.index(action)
    beta = problem.actions.dropout[j]
    energy = state.energy
    if energy is not None:
        if problem.actions.units[j] > energy:
            raise InsufficientEnergy(f"action {action} exceeds remaining energy")
        energy -= problem.actions.units[j]
    return [(MdpState(state.rung + 1, energy), beta), (MdpState(0, energy), 1.0 - beta)]


def expected_trace(problem: MdpProblem, rung: int, j: int) -> float:
    """``Tr E[P_k]`` when the previous error is rung ``rung`` and action ``j`` is played."""
    beta = problem.actions.dropout[j]
    t = problem.ladder.traces
    return (1.0 - beta) * t[0] + beta * t[rung + 1]


def _reward(problem: MdpProblem, k: int, rung: int, j: int) -> float:
    T = problem.T
    if k > T:
        return 0.0
    r = expected_trace(problem, rung, j) if (problem.index == "average" or k == T) else 0.0
    if problem.tradeoff:
        r -= problem.omega * problem.actions.levels[j]
    return r


def stage_reward(problem: MdpProblem, k: int, state: MdpState, action: float) -> float:
    return _reward(problem, k, state.rung, problem.actions.index(action))


def reachable_states(problem: MdpProblem) -> list:
    """``S^k`` for ``k = 1..T+1``: rungs ``0..k-1`` times reachable energies."""
    T = problem.T
    if problem.tradeoff:
        return [None] + [[MdpState(i) for i in range(k)] for k in range(1, T + 2)]
    energies = {problem.budget_units}
    out = [None]
    for k in range(1, T + 2):
        ordered = sorted(energies, reverse=True)
        out.append([MdpState(i, e) for e in ordered for i in range(k)])
        energies = {e - u for e in ordered for u in problem.actions.units if u <= e}
    return out


def _q_values(problem, k, state, acts, u_next):
    betas = problem.actions.dropout
    units = problem.actions.units
    out = []
    for j in acts:
        if state.energy is None:
            e = None
        else:
            e = state.energy - units[j]
        cont = 0.0
        if k < problem.T:  # u_{T+1} is identically zero
            cont = betas[j] * u_next[MdpState(state.rung + 1, e)] + (1 - betas[j]) * u_next[MdpState(0, e)]
        out.append(_reward(problem, k, state.rung, j) + cont)
    return out


def _argmax_set(qs, acts):
    best = max(qs)
    tol = TIE_RTOL * max(1.0, abs(best))
    return [j for q, j in zip(qs, acts) if q >= best - tol], best


def backward_induction(problem: MdpProblem) -> MdpPolicy:
    """Exact backward induction over the per-stage reachable state sets.

    Ties are broken toward the smallest power.
    """
    T = problem.T
    S = reachable_states(problem)
    levels = problem.actions.levels
    value_table = {(T + 1, s): 0.0 for s in S[T + 1]}
    decision = {}
    for k in range(T, 0, -1):
        u_next = {s: value_table[(k + 1, s)] for s in S[k + 1]}
        for s in S[k]:
            acts = problem.allowed(s)
            if not acts:
                raise EmptyActionSet(f"no allowed action at stage {k}, state {s}")
            qs = _q_values(problem, k, s, acts, u_next)
            winners, best = _argmax_set(qs, acts)
            decision[(k, s)] = levels[winners[0]]
            value_table[(k, s)] = best
    s1 = problem.initial_state()
    return MdpPolicy(problem, decision, value_table, value_table[(1, s1)])


def tradeoff_induction(problem: MdpProblem, omega: float | None = None, prune: bool = True) -> MdpPolicy:
    """Monotone backward induction for the tradeoff problem.

    Within each stage the rungs are visited in increasing order and the
    candidate actions at rung ``i + 1`` are restricted to those at least as
    large as the largest maximiser at rung ``i``. ``prune=False`` gives the
    plain sweep over all actions.
    """
    if omega is not None:
        problem = MdpProblem(problem.horizon, problem.actions, problem.ladder, None,
                             problem.index, float(omega))
    if not problem.tradeoff:
        raise InvalidModel("tradeoff_induction needs omega")
    T = problem.T
    levels = problem.actions.levels
    all_acts = list(range(len(levels)))
    value_table = {(T + 1, MdpState(i)): 0.0 for i in range(T + 1)}
    decision = {}
    for k in range(T, 0, -1):
        u_next = {MdpState(i): value_table[(k + 1, MdpState(i))] for i in range(k + 1)}
        acts = all_acts
        for i in range(k):
            s = MdpState(i)
            qs = _q_values(problem, k, s, acts, u_next)
            winners, best = _argmax_set(qs, acts)
            decision[(k, s)] = levels[winners[0]]
            value_table[(k, s)] = best
            if prune:
                acts = [j for j in all_acts if j >= winners[-1]]
    return MdpPolicy(problem, decision, value_table, value_table[(1, MdpState(0))])


def solve(problem: MdpProblem) -> MdpPolicy:
    return tradeoff_induction(problem) if problem.tradeoff else backward_induction(problem)


def verify_monotone(policy: MdpPolicy) -> bool:
    """Decisions nondecreasing in the rung at every stage (and energy level)."""
    groups = {}
    for (k, s), a in policy.decision.items():
        groups.setdefault((k, s.energy), []).append((s.rung, a))
    for items in groups.values():
        items.sort()
        if any(b[1] < a[1] for a, b in zip(items, items[1:])):
            return False
    return True


def check_superadditivity(problem: MdpProblem, k: int) -> ConditionReport:
    """Structural conditions behind monotone optimal decisions at stage ``k``.

    Evaluated on rungs ``0..k-1`` and all actions:

    1. reward nondecreasing in rung for every action;
    2. tail probabilities ``q(j|s,a)`` nondecreasing in rung;
    3. reward superadditive on rung x action;
    4. ``q(j|., .)`` superadditive for every ``j``;
    5. terminal reward nondecreasing in rung.
    """
    if not problem.tradeoff:
        raise InvalidModel("superadditivity is checked in tradeoff mode")
    if not 1 <= k <= problem.T:
        raise ValueError("stage out of range")
    A = len(problem.actions)
    rungs = range(k)
    R = np.array([[_reward(problem, k, i, j) for j in range(A)] for i in rungs])
    beta = np.asarray(problem.actions.dropout)
    scale = max(1.0, float(np.max(np.abs(R))))
    tol = 1e-12 * scale

    def qtail(jr, i, a):
        if jr == 0:
            return 1.0
        return beta[a] if i + 1 >= jr else 0.0

    def super_gap(g):
        # min over s+ >= s-, a+ >= a- of g(s+,a+) + g(s-,a-) - g(s+,a-) - g(s-,a+)
        worst = 0.0
        n_s, n_a = g.shape
        for sp in range(n_s):
            for sm in range(sp):
                d = g[sp] - g[sm]
                for ap in range(n_a):
                    for am in range(ap):
                        worst = min(worst, d[ap] - d[am])
        return worst

    def mono_gap(g):
        return float(np.min(np.diff(g, axis=0), initial=0.0)) if g.shape[0] > 1 else 0.0

    Qt = [np.array([[qtail(jr, i, a) for a in range(A)] for i in rungs]) for jr in range(k + 2)]
    c1 = mono_gap(R)
    c2 = min(mono_gap(q) for q in Qt)
    c3 = super_gap(R)
    c4 = min(super_gap(q) for q in Qt)
    c5 = 0.0  # terminal reward is identically zero

    def cond(cid, gap, t):
        return Condition(cid, bool(gap >= -t), gap, -gap)

    return ConditionReport(f"monotone-structure[k={k}]", (
        cond("reward-nondecreasing-in-rung", c1, tol),
        cond("tail-nondecreasing-in-rung", c2, 1e-12),
        cond("reward-superadditive", c3, tol),
        cond("tail-superadditive", c4, 1e-12),
        cond("terminal-reward-nondecreasing", c5, 0.0),
    ))


def evaluate_policy(problem: MdpProblem, decision: dict) -> float:
    """Expected total reward of a deterministic Markov policy by forward propagation."""
    dist = {problem.initial_state(): 1.0}
    total = 0.0
    for k in range(1, problem.T + 1):
        nxt = {}
        for s, p in dist.items():
            a = decision[(k, s)]
            j = problem.actions.index(a)
            total += p * _reward(problem, k, s.rung, j)
            for s2, q in transition(problem, s, a):
                if q > 0:
                    nxt[s2] = nxt.get(s2, 0.0) + p * q
        dist = nxt
    return total


def brute_force_policy(problem: MdpProblem, limit: int = BRUTE_FORCE_LIMIT):
    """Exhaustive search over deterministic Markov policies.

    Only states reachable with positive probability are assigned actions, so
    the search enumerates every distinct policy restricted to its own
    reachable set. Returns ``(value, decision)``.
    """
    T = problem.T
    levels = problem.actions.levels
    count = [0]
    best = [-math.inf, None]

    def rec(k, frontier, decision):
        if k > T:
            count[0] += 1
            if count[0] > limit:
                raise TooLarge(f"more than {limit} policies")
            val = evaluate_policy(problem, decision)
            if val > best[0] + TIE_RTOL * max(1.0, abs(val)):
                best[0], best[1] = val, dict(decision)
            return
        states = sorted(frontier)
        choices = [problem.allowed(s) for s in states]
        if any(not c for c in choices):
            raise EmptyActionSet(f"no allowed action at stage {k}")
        for combo in _product(choices):
            nxt = set()
            for s, j in zip(states, combo):
                decision[(k, s)] = levels[j]
                for s2, q in transition(problem, s, levels[j]):
                    if q > 0:
                        nxt.add(s2)
            rec(k + 1, nxt, decision)
        for s in states:
            decision.pop((k, s), None)

    rec(1, {problem.initial_state()}, {})
    return best[0], best[1]


def _product(choices):
    if not choices:
        yield ()
        return
    head, *rest = choices
    for j in head:
        for tail in _product(rest):
            yield (j,) + tail


def decision_tree(policy: MdpPolicy) -> dict:
    """Stage-indexed graph of the states visited by ``policy``.

    Each node records its state, the chosen action and the successor
    distribution; stage ``T + 1`` nodes are leaves.
    """
    problem = policy.problem
    scale = problem.actions.scale
    T = problem.T

    def node_id(k, s):
        return f"k{k}-r{s.rung}" + ("" if s.energy is None else f"-e{s.energy}")

    def state_doc(s):
        doc = {"rung": s.rung}
        if s.energy is not None:
            doc["energy"] = round(s.energy * scale, 10)
        return doc

    stages = []
    frontier = {problem.initial_state()}
    for k in range(1, T + 2):
        nodes = []
        nxt = set()
        for s in sorted(frontier, key=lambda s: (s.rung, -(s.energy or 0))):
            node = {"id": node_id(k, s), "state": state_doc(s)}
            if k <= T:
                a = policy.decision[(k, s)]
                node["action"] = a
                node["value"] = policy.value_table[(k, s)]
                succ = []
                for s2, q in transition(problem, s, a):
                    if q > 0:
                        succ.append({"to": node_id(k + 1, s2), "prob": q})
                        nxt.add(s2)
                node["next"] = succ
            nodes.append(node)
        stages.append({"stage": k, "nodes": nodes})
        frontier = nxt
    return {
        "mode": "tradeoff" if problem.tradeoff else "budget",
        "index": problem.index,
        "horizon": T,
        "value": policy.value,
        "normalized_value": policy.normalized_value,
        "root": node_id(1, problem.initial_state()),
        "stages": stages,
    }
