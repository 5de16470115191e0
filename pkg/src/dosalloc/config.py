"""Scenario files for the command-line tool.

A scenario is a YAML mapping with four blocks::

    system:            # plant; matrices are row-major nested lists
      A: [[1.2, 0.1], [0, 1]]
      C: [[1, 0], [0, 1]]
      Q: [[1, 0], [0, 2]]
      R: [[0.5, 0], [0, 0.5]]
    channel:           # optional when budget.dropout is given
      delta_s: 10
      sigma2: 2
      L: 20
    budget:
      Delta: 50
      delta_lo: 2
      delta_hi: 20
      levels: [0, 5, 10, 15]          # power levels for the MDP
      dropout: [0.1, 0.3, 0.7, 0.9]   # explicit dropout per level
      alpha: 0                        # no-attack dropout override
    run:
      T: 30
      index: terminal                 # or average
      mode: static                    # static | dynamic | tradeoff
      omega: 0.35
      trials: 100000
      seed: 0

Numbers may be written as YAML numbers or as decimal strings such as
``"0.35"``. Any problem is reported as a :class:`ConfigError` naming the
offending field, e.g. ``budget.delta_lo: expected a number``.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np
import yaml

from .channel import ChannelModel
from .errors import ConfigError, DosAllocError
from .mdp import ActionSet, MdpProblem
from .model import ErrorLadder, SystemModel
from .schedule import PowerBudget

INDEXES = ("terminal", "average")
MODES = ("static", "dynamic", "tradeoff")


def _num(value, path: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Decimal(value.strip()))
        except InvalidOperation:
            pass
    raise ConfigError(path, f"expected a number, got {value!r}")


def _int(value, path: str) -> int:
    x = _num(value, path)
    if x != int(x):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return int(x)


def _matrix(value, path: str) -> np.ndarray:
    if isinstance(value, (int, float, str)) and not isinstance(value, bool):
        return np.array([[_num(value, path)]])
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a non-empty list of rows")
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list):
            row = [row] if len(value) == 1 else None
        if row is None:
            raise ConfigError(f"{path}[{i}]", "expected a list")
        rows.append([_num(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)])
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(path, "rows have different lengths")
    return np.array(rows)


def _block(doc: dict, name: str, required: bool = True) -> dict:
    blk = doc.get(name)
    if blk is None:
        if required:
            raise ConfigError(name, "missing block")
        return {}
    if not isinstance(blk, dict):
        raise ConfigError(name, "expected a mapping")
    return blk


def _require(blk: dict, block: str, key: str):
    if key not in blk:
        raise ConfigError(f"{block}.{key}", "missing field")
    return blk[key]


@dataclass
class Scenario:
    """Parsed scenario; optional parts are ``None`` when absent."""

    system: SystemModel
    channel: ChannelModel | None
    budget: PowerBudget | None
    Delta: float | None
    levels: list | None
    dropout: list | None
    alpha: float | None
    T: int
    index: str
    mode: str
    omega: float | None
    trials: int
    seed: int
    sweep: dict | None

    def require_channel(self) -> ChannelModel:
        if self.channel is None:
            raise ConfigError("channel", "this command needs a channel block")
        return self.channel

    def require_budget(self) -> PowerBudget:
        if self.budget is None:
            raise ConfigError("budget", "this command needs Delta, delta_lo and delta_hi")
        return self.budget

    def action_set(self) -> ActionSet:
        if self.levels is None:
            raise ConfigError("budget.levels", "missing field")
        if self.dropout is not None:
            return ActionSet(self.levels, self.dropout)
        return ActionSet.from_channel(self.levels, self.require_channel(), alpha=self.alpha)

    def mdp_problem(self, ladder: ErrorLadder, tradeoff: bool) -> MdpProblem:
        acts = self.action_set()
        if tradeoff:
            if self.omega is None:
                raise ConfigError("run.omega", "tradeoff mode needs omega")
            return MdpProblem(self.T, acts, ladder, None, self.index, self.omega)
        if self.Delta is None:
            raise ConfigError("budget.Delta", "missing field")
        return MdpProblem(self.T, acts, ladder, self.Delta, self.index)


def parse_scenario(doc) -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a mapping with system/channel/budget/run blocks")
    sysb = _block(doc, "system")
    mats = {k: _matrix(_require(sysb, "system", k), f"system.{k}") for k in ("A", "C", "Q", "R")}
    if "n" in sysb and _int(sysb["n"], "system.n") != mats["A"].shape[0]:
        raise ConfigError("system.n", "does not match the size of A")
    try:
        system = SystemModel(**mats)
    except DosAllocError as exc:
        raise ConfigError("system", str(exc)) from exc

    chb = _block(doc, "channel", required=False)
    channel = None
    if chb:
        kw = {"delta_s": _num(_require(chb, "channel", "delta_s"), "channel.delta_s")}
        for key in ("G_s", "G_a", "sigma2"):
            if key in chb:
                kw[key] = _num(chb[key], f"channel.{key}")
        if "L" in chb:
            kw["L"] = _int(chb["L"], "channel.L")
        try:
            channel = ChannelModel(**kw)
        except DosAllocError as exc:
            raise ConfigError("channel", str(exc)) from exc

    bb = _block(doc, "budget", required=False)
    Delta = _num(bb["Delta"], "budget.Delta") if "Delta" in bb else None
    budget = None
    if Delta is not None and "delta_lo" in bb and "delta_hi" in bb:
        try:
            budget = PowerBudget(Delta, _num(bb["delta_lo"], "budget.delta_lo"),
                                 _num(bb["delta_hi"], "budget.delta_hi"))
        except DosAllocError as exc:
            raise ConfigError("budget", str(exc)) from exc
    levels = dropout = None
    if "levels" in bb:
        if not isinstance(bb["levels"], list):
            raise ConfigError("budget.levels", "expected a list")
        levels = [_num(x, f"budget.levels[{i}]") for i, x in enumerate(bb["levels"])]
    if "dropout" in bb:
        if not isinstance(bb["dropout"], list):
            raise ConfigError("budget.dropout", "expected a list")
        dropout = [_num(x, f"budget.dropout[{i}]") for i, x in enumerate(bb["dropout"])]
        if levels is None or len(levels) != len(dropout):
            raise ConfigError("budget.dropout", "needs budget.levels of the same length")
    alpha = _num(bb["alpha"], "budget.alpha") if "alpha" in bb else None

    rb = _block(doc, "run")
    T = _int(_require(rb, "run", "T"), "run.T")
    if T < 1:
        raise ConfigError("run.T", "must be >= 1")
    index = str(rb.get("index", "terminal"))
    if index not in INDEXES:
        raise ConfigError("run.index", f"expected one of {INDEXES}, got {index!r}")
    mode = str(rb.get("mode", "static"))
    if mode not in MODES:
        raise ConfigError("run.mode", f"expected one of {MODES}, got {mode!r}")
    omega = _num(rb["omega"], "run.omega") if "omega" in rb else None
    trials = _int(rb.get("trials", 100_000), "run.trials")
    seed = _int(rb.get("seed", 0), "run.seed")
    sweep = rb.get("sweep")
    if sweep is not None and not isinstance(sweep, dict):
        raise ConfigError("run.sweep", "expected a mapping with start, stop, num")
    if sweep is not None:
        sweep = {"start": _num(_require(sweep, "run.sweep", "start"), "run.sweep.start"),
                 "stop": _num(_require(sweep, "run.sweep", "stop"), "run.sweep.stop"),
                 "num": _int(sweep.get("num", 31), "run.sweep.num")}

    return Scenario(system, channel, budget, Delta, levels, dropout, alpha, T, index, mode,
                    omega, trials, seed, sweep)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read file ({exc.strerror})") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else str(path)
        raise ConfigError(where, "invalid YAML") from exc
    return parse_scenario(doc)
