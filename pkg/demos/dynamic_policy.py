"""
Reacting to acknowledgements
============================

If the jammer sees whether each packet got through, it can pick the next
power from the current error rung and its remaining energy. Backward
induction over the (rung, energy) states gives the optimal policy.
"""

import json

import numpy as np

from dosalloc import SystemModel, build_ladder, steady_state
from dosalloc.mdp import ActionSet, MdpProblem, backward_induction, decision_tree

plant = SystemModel([[1.2, 0.1], [0.0, 1.0]], np.eye(2), np.diag([1.0, 2.0]), 0.5 * np.eye(2))
ladder = build_ladder(plant, steady_state(plant), 5)

levels = ActionSet([0, 5, 10, 15], [0.1, 0.3, 0.7, 0.9])
problem = MdpProblem(horizon=5, actions=levels, ladder=ladder, budget=60, index="average")
policy = backward_induction(problem)
print("mean trace over the horizon:", round(policy.normalized_value, 4))

tree = decision_tree(policy)
for stage in tree["stages"][:-1]:
    for node in stage["nodes"]:
        print(stage["stage"], node["state"], "->", node["action"])

# the full tree is JSON-ready
print(len(json.dumps(tree)), "bytes of JSON")
