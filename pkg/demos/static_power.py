"""
Choosing one constant attack power
==================================

With energy Delta and power delta the jammer can strike floor(Delta/delta)
times. Lower power means more strikes, each less effective. The solver
first tests sufficient conditions for "more strikes is better"; when they
fail it searches the few possible strike counts.
"""

from dosalloc import ChannelModel, PowerBudget, SystemModel, build_ladder, steady_state
from dosalloc.static_opt import solve_static, sweep
import numpy as np

plant = SystemModel([[1.2, 0.1], [0.0, 1.0]], np.eye(2), np.diag([1.0, 2.0]), 0.5 * np.eye(2))
ladder = build_ladder(plant, steady_state(plant), 30)
ch = ChannelModel(delta_s=10, sigma2=2, L=20)

weak = PowerBudget(Delta=50, delta_lo=2, delta_hi=20)
for index in ("terminal", "average"):
    sol = solve_static(ladder, ch, weak, 30, index)
    print(f"{index:8s}: power {sol.power:.4f}, {sol.attacks} strikes, value {sol.value:.4f} via {sol.method}")
    for c in sol.report.conditions:
        print(f"          {c.id}: {'pass' if c.passed else 'fail'} (margin {c.margin:.3g})")

# the trace as a function of the constant power (data behind the curves)
for power, n, beta, value in sweep(ladder, ch, weak, 30, np.linspace(2, 20, 10), "terminal"):
    print(f"  power {power:6.2f}  n={n:2d}  beta={beta:.4f}  trace {value:8.4f}")
