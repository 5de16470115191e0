"""Attack schedules, occupancy probabilities and analytic error indexes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .channel import ChannelModel, dropout_prob
from .errors import InvalidModel, LadderTooShort, TooLarge
from .model import ErrorLadder

COLUMN_SUM_TOL = 1e-9
BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True)
class AttackSchedule:
    powers: tuple

    def __post_init__(self):
        powers = tuple(float(p) for p in self.powers)
        if any(p < 0 for p in powers):
            raise InvalidModel("attack powers must be >= 0")
        object.__setattr__(self, "powers", powers)

    @property
    def T(self) -> int:
        return len(self.powers)

    @property
    def attacks(self) -> int:
        return sum(p > 0 for p in self.powers)

    @property
    def energy(self) -> float:
        return math.fsum(self.powers)

    def pattern(self) -> tuple:
        return tuple(int(p > 0) for p in self.powers)


@dataclass(frozen=True)
class PowerBudget:
    """Total energy ``Delta`` and per-attack power bounds ``[delta_lo, delta_hi]``."""

    Delta: float
    delta_lo: float
    delta_hi: float

    def __post_init__(self):
        if not 0 < self.delta_lo <= self.delta_hi <= self.Delta:
            raise InvalidModel(
                "need 0 < delta_lo <= delta_hi <= Delta, got "
                f"{self.delta_lo}, {self.delta_hi}, {self.Delta}")

    def admits(self, schedule: AttackSchedule, rtol: float = 1e-12) -> bool:
        if schedule.energy > self.Delta * (1 + rtol):
            return False
        lo, hi = self.delta_lo * (1 - rtol), self.delta_hi * (1 + rtol)
        return all(p == 0 or lo <= p <= hi for p in schedule.powers)


@dataclass(frozen=True)
class DropoutBounds:
    """Dropout probabilities attached to a budget.

    ``alpha`` is the no-attack dropout, ``beta_lo`` the dropout at the
    weakest admissible power ``delta_lo`` and ``beta_hi`` the dropout at
    the strongest one ``delta_hi`` (so ``beta_lo <= beta_hi``).
    """

    alpha: float
    beta_lo: float
    beta_hi: float


def dropout_bounds(ch: ChannelModel, budget: PowerBudget, alpha: float | None = None) -> DropoutBounds:
    a = dropout_prob(ch, 0.0) if alpha is None else float(alpha)
    b_lo = dropout_prob(ch, budget.delta_lo)
    b_hi = dropout_prob(ch, budget.delta_hi)
    if not b_lo <= b_hi:
        raise InvalidModel("channel dropout must increase with attack power")
    return DropoutBounds(alpha=a, beta_lo=b_lo, beta_hi=b_hi)


@dataclass(frozen=True)
class ArrivalProfile:
    """Per-step arrival probabilities ``p~_1..p~_T`` (``p~_0 = 1`` implicit)."""

    ptilde: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.ptilde, dtype=float).ravel()
        if np.any((p < 0) | (p > 1)):
            raise InvalidModel("arrival probabilities must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "ptilde", p)

    @property
    def T(self) -> int:
        return self.ptilde.size

    @classmethod
    def from_schedule(cls, ch: ChannelModel, schedule: AttackSchedule,
                      alpha: float | None = None) -> ArrivalProfile:
        """Arrival profile of ``schedule``; ``alpha`` overrides the no-attack dropout."""
        drop = np.asarray(dropout_prob(ch, np.asarray(schedule.powers)), dtype=float)
        if alpha is not None:
            drop = np.where(np.asarray(schedule.powers) > 0, drop, alpha)
        return cls(1.0 - drop)

    @classmethod
    def from_pattern(cls, pattern, alpha: float, beta: float) -> ArrivalProfile:
        """Profile of a 0/1 attack pattern with fixed dropouts ``alpha``/``beta``."""
        lam = np.asarray(pattern, dtype=bool)
        return cls(np.where(lam, 1.0 - beta, 1.0 - alpha))


def occupancy(profile: ArrivalProfile) -> np.ndarray:
    """``p[i, k-1] = Pr(P_k = h^i(Pbar))`` as a ``(T+1) x T`` matrix.

    ``p[i, k-1] = p~_{k-i} * q~_{k-i+1} ... q~_k`` for ``i <= k`` with
    ``q~ = 1 - p~`` and ``p~_0 = 1``.
    """
    pt = profile.ptilde
    T = pt.size
    q = 1.0 - pt
    p = np.zeros((T + 1, T))
    prev = np.zeros(T + 1)
    prev[0] = 1.0  # P_0 = Pbar
    for k in range(T):
        col = np.zeros(T + 1)
        col[0] = pt[k]
        col[1:] = prev[:-1] * q[k]
        p[:, k] = col
        prev = col
    dev = np.max(np.abs(p.sum(axis=0) - 1.0), initial=0.0)
    if dev > COLUMN_SUM_TOL:
        raise ArithmeticError(f"occupancy column sum off by {dev:.3e}")
    return p


def _check_ladder(ladder: ErrorLadder, T: int):
    if ladder.T < T:
        raise LadderTooShort(f"ladder covers {ladder.T} rungs, need {T}")


def expected_terminal(ladder: ErrorLadder, profile: ArrivalProfile) -> float:
    """``Tr E[P_T]``."""
    T = profile.T
    _check_ladder(ladder, T)
    return float(occupancy(profile)[:, -1] @ ladder.traces[:T + 1])


def expected_average(ladder: ErrorLadder, profile: ArrivalProfile) -> float:
    """``(1/T) sum_k Tr E[P_k]``."""
    T = profile.T
    _check_ladder(ladder, T)
    return float(np.mean(ladder.traces[:T + 1] @ occupancy(profile)))


def terminal_closed_form(ladder: ErrorLadder, alpha: float, beta: float, n: int, T: int) -> float:
    """Terminal index of the trailing-block schedule with ``n`` attacks."""
    if not 0 <= n <= T:
        raise ValueError("need 0 <= n <= T")
    _check_ladder(ladder, T)
    t = ladder.traces
    total = math.fsum((1 - beta) * beta**i * t[i] for i in range(n))
    total += alpha ** (T - n) * beta**n * t[T]
    total += math.fsum((1 - alpha) * alpha ** (i - n) * beta**n * t[i] for i in range(n, T))
    return total


def canonical_terminal_schedule(n: int, T: int, power: float) -> AttackSchedule:
    if not 0 <= n <= T:
        raise ValueError("need 0 <= n <= T")
    return AttackSchedule((0.0,) * (T - n) + (float(power),) * n)


def average_partition(n: int, T: int) -> tuple:
    """``(m, s)``: leading / trailing idle steps around a centred block."""
    m = (T - n) // 2
    return m, T - n - m


def canonical_average_schedule(n: int, T: int, power: float) -> AttackSchedule:
    if not 0 <= n <= T:
        raise ValueError("need 0 <= n <= T")
    m, s = average_partition(n, T)
    return AttackSchedule((0.0,) * m + (float(power),) * n + (0.0,) * s)


def index_value(ladder: ErrorLadder, profile: ArrivalProfile, index: str) -> float:
    if index == "terminal":
        return expected_terminal(ladder, profile)
    if index == "average":
        return expected_average(ladder, profile)
    raise ValueError(f"unknown index {index!r}")


def brute_force_schedule(ladder: ErrorLadder, alpha: float, beta: float, n: int, T: int,
                         index: str = "terminal", tie_tol: float = 1e-12):
    """Best placement of ``n`` unit attacks among ``T`` steps, by enumeration.

    Returns ``(AttackSchedule, value)``; the schedule holds 1.0 at attacked
    steps. Ties (within ``tie_tol``) go to the lexicographically smallest
    schedule.
    """
    if not 0 <= n <= T:
        raise ValueError("need 0 <= n <= T")
    if math.comb(T, n) > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"C({T},{n}) placements exceed {BRUTE_FORCE_LIMIT}")
    _check_ladder(ladder, T)
    best_pat, best_val = None, -np.inf
    for pos in combinations(range(T), n):
        pat = [0] * T
        for p in pos:
            pat[p] = 1
        pat = tuple(pat)
        val = index_value(ladder, ArrivalProfile.from_pattern(pat, alpha, beta), index)
        if val > best_val + tie_tol:
            best_pat, best_val = pat, val
        elif abs(val - best_val) <= tie_tol:
            best_val = max(best_val, val)
            best_pat = min(best_pat, pat)
    return AttackSchedule(best_pat), float(best_val)
