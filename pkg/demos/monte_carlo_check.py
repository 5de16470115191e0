"""
Checking the formulas by simulation
===================================

The expected traces above are exact. Simulating the packet process and the
rung walk confirms them within sampling error.
"""

import numpy as np

from dosalloc import ArrivalProfile, ChannelModel, PowerBudget, SystemModel, build_ladder, steady_state
from dosalloc.mdp import ActionSet, MdpProblem, backward_induction
from dosalloc.montecarlo import SimConfig, simulate_policy, simulate_schedule
from dosalloc.static_opt import solve_static

plant = SystemModel([[1.2, 0.1], [0.0, 1.0]], np.eye(2), np.diag([1.0, 2.0]), 0.5 * np.eye(2))
ladder = build_ladder(plant, steady_state(plant), 30)
ch = ChannelModel(delta_s=10, sigma2=2, L=20)

sol = solve_static(ladder, ch, PowerBudget(50, 2, 20), 30, "terminal")
rep = simulate_schedule(ladder, ArrivalProfile.from_schedule(ch, sol.schedule), SimConfig(200_000, seed=1))
print(f"static: exact {sol.value:.4f}  simulated {rep.mean_terminal:.4f} +/- {rep.std_err_terminal:.4f}")

problem = MdpProblem(5, ActionSet([0, 5, 10, 15], [0.1, 0.3, 0.7, 0.9]), ladder, 60, "average")
policy = backward_induction(problem)
rep = simulate_policy(problem, policy, SimConfig(200_000, seed=2))
print(f"dynamic: exact {policy.normalized_value:.4f}  simulated {rep.mean_objective:.4f} "
      f"+/- {rep.std_err_objective:.4f}")
