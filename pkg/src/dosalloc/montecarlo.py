"""Monte Carlo simulation of the remote error recursion.

Only the rung index is simulated: a received packet resets the error to
``Pbar`` (rung 0), a dropped one moves it one rung up the ladder. Traces
are then looked up from the ladder.

Trials are processed in fixed-size chunks, each with its own Philox stream
keyed by ``(seed, chunk index)``, so results depend only on the seed and
the trial count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, LadderTooShort, UnreachableState
from .mdp import MdpPolicy, MdpProblem, MdpState
from .model import ErrorLadder
from .schedule import ArrivalProfile

CHUNK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int = 0
    T: int | None = None

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be an integer >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class SimReport:
    """Sample means and standard errors (sample std / sqrt(trials)).

    ``rung_histogram[k-1, i]`` counts trials whose error sits on rung ``i``
    at step ``k``. ``mean_objective`` is filled by policy rollouts only.
    """

    trials: int
    mean_terminal: float
    mean_average: float
    std_err_terminal: float
    std_err_average: float
    rung_histogram: np.ndarray
    mean_objective: float | None = None
    std_err_objective: float | None = None
    extra: dict = field(default_factory=dict)


class _Moments:
    """Mergeable mean / sum of squared deviations (Chan et al. update)."""

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add(self, x: np.ndarray):
        nb = x.size
        # shift by the first sample so a constant chunk has exactly zero spread
        d = x - x[0]
        mb = float(x[0] + np.mean(d))
        m2b = float(np.sum((d - np.mean(d)) ** 2))
        n = self.n + nb
        delta = mb - self.mean
        self.mean += delta * nb / n
        self.m2 += m2b + delta * delta * self.n * nb / n
        self.n = n

    def std_err(self) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.n - 1)) / math.sqrt(self.n)


def _chunks(cfg: SimConfig):
    done = 0
    c = 0
    while done < cfg.trials:
        size = min(CHUNK, cfg.trials - done)
        rng = np.random.Generator(np.random.Philox(key=[int(cfg.seed), c]))
        yield rng, size
        done += size
        c += 1


def _resolve_T(cfg: SimConfig, T: int, ladder: ErrorLadder) -> int:
    if cfg.T is not None and cfg.T != T:
        raise DimensionMismatch(f"config horizon {cfg.T} does not match {T}")
    if ladder.T < T:
        raise LadderTooShort(f"ladder covers {ladder.T} rungs, need {T}")
    return T


def simulate_schedule(ladder: ErrorLadder, profile: ArrivalProfile, cfg: SimConfig) -> SimReport:
    """Simulate ``cfg.trials`` independent runs of a fixed arrival profile."""
    T = _resolve_T(cfg, profile.T, ladder)
    traces = np.asarray(ladder.traces)
    pt = profile.ptilde
    hist = np.zeros((T, T + 1), dtype=np.int64)
    term, avg = _Moments(), _Moments()
    for rng, n in _chunks(cfg):
        rung = np.zeros(n, dtype=np.int64)
        total = np.zeros(n)
        for k in range(T):
            arrived = rng.random(n) < pt[k]
            rung = np.where(arrived, 0, rung + 1)
            total += traces[rung]
            hist[k] += np.bincount(rung, minlength=T + 1)
        term.add(traces[rung])
        avg.add(total / T)
    return SimReport(cfg.trials, term.mean, avg.mean, term.std_err(), avg.std_err(), hist)


def simulate_policy(problem: MdpProblem, policy: MdpPolicy, cfg: SimConfig) -> SimReport:
    """Roll out ``policy`` on ``problem``.

    ``mean_objective`` estimates ``policy.normalized_value``: the realised
    index (trace at ``T`` or time-averaged trace) minus the power cost in
    tradeoff mode, divided by ``T`` for the average index as the policy
    value is.

    Raises
    ------
    UnreachableState
        If a visited state has no entry in the decision table.
    """
    T = _resolve_T(cfg, problem.T, problem.ladder)
    traces = np.asarray(problem.ladder.traces)
    acts = problem.actions
    levels = np.asarray(acts.levels)
    units = np.asarray(acts.units, dtype=np.int64)
    drop = np.asarray(acts.dropout)
    omega = problem.omega or 0.0
    budget = problem.budget_units
    hist = np.zeros((T, T + 1), dtype=np.int64)
    term, avg, obj = _Moments(), _Moments(), _Moments()

    for rng, n in _chunks(cfg):
        rung = np.zeros(n, dtype=np.int64)
        energy = np.full(n, budget if budget is not None else 0, dtype=np.int64)
        total = np.zeros(n)
        cost = np.zeros(n)
        for k in range(1, T + 1):
            keys = np.stack([rung, energy], axis=1)
            uniq, inv = np.unique(keys, axis=0, return_inverse=True)
            inv = inv.ravel()
            choice = np.empty(len(uniq), dtype=np.int64)
            for u, (r, e) in enumerate(uniq):
                state = MdpState(int(r), None if budget is None else int(e))
                try:
                    a = policy.decision[(k, state)]
                except KeyError:
                    raise UnreachableState(f"policy has no action for stage {k}, state {state}") from None
                choice[u] = acts.index(a)
            j = choice[inv]
            arrived = rng.random(n) >= drop[j]
            rung = np.where(arrived, 0, rung + 1)
            energy = energy - units[j] if budget is not None else energy
            total += traces[rung]
            cost += omega * levels[j]
            hist[k - 1] += np.bincount(rung, minlength=T + 1)
        final = traces[rung]
        term.add(final)
        avg.add(total / T)
        if problem.index == "average":
            obj.add((total - cost) / T)
        else:
            obj.add(final - cost)
    return SimReport(cfg.trials, term.mean, avg.mean, term.std_err(), avg.std_err(), hist,
                     mean_objective=obj.mean, std_err_objective=obj.std_err())
