"""
Paying for power instead of budgeting it
========================================

Without a hard energy cap, each unit of power costs omega. The state is
just the rung, and the optimal power never decreases as the error grows,
which lets the solver skip small powers at higher rungs.
"""

import numpy as np

from dosalloc import SystemModel, build_ladder, steady_state
from dosalloc.mdp import (ActionSet, MdpProblem, check_superadditivity, tradeoff_induction,
                          verify_monotone)

plant = SystemModel([[1.2, 0.1], [0.0, 1.0]], np.eye(2), np.diag([1.0, 2.0]), 0.5 * np.eye(2))
ladder = build_ladder(plant, steady_state(plant), 5)
levels = ActionSet([0, 5, 10, 15], [0.1, 0.3, 0.7, 0.9])

problem = MdpProblem(5, levels, ladder, index="average", omega=0.35)
policy = tradeoff_induction(problem)
print("value per step:", round(policy.normalized_value, 4), "monotone:", verify_monotone(policy))
for k in range(1, 6):
    print(k, [policy.decision[(k, s)] for s in sorted(s for (kk, s) in policy.decision if kk == k)])

# the structural conditions behind monotonicity
print(check_superadditivity(problem, 3).passed)

# a dropout map that is not increasing in power breaks them
shuffled = ActionSet([0, 5, 10, 15], [0.1, 0.7, 0.3, 0.9])
rep = check_superadditivity(MdpProblem(5, shuffled, ladder, index="average", omega=0.35), 3)
print([(c.id, c.passed) for c in rep.conditions])
