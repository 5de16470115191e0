"""
The error ladder of a remote estimator
======================================

When every packet arrives, the remote error covariance sits at the
steady-state value Pbar. Each dropped packet pushes it one rung up the
ladder Pbar, h(Pbar), h^2(Pbar), ... This script builds that ladder for a
small two-state plant.
"""

import numpy as np

from dosalloc import SystemModel, build_ladder, ladder_step, spectral_check, steady_state

A = [[1.2, 0.1], [0.0, 1.0]]
plant = SystemModel(A, np.eye(2), np.diag([1.0, 2.0]), 0.5 * np.eye(2))

ss = steady_state(plant)
print("Pbar after", ss.iterations, "iterations:\n", ss.Pbar)

# first increment of the ladder
print("h(Pbar) - Pbar:\n", ladder_step(plant, ss.Pbar) - ss.Pbar)

# A'A has one eigenvalue below one, so increasing trace increments are
# not automatic for this plant; check them directly
rep = spectral_check(plant)
print("eig(A'A):", rep.eigs_AtA, "normal:", rep.is_normal)

ladder = build_ladder(plant, ss, 10)
for i, (t, d) in enumerate(zip(ladder.traces[1:], ladder.diffs)):
    print(f"rung {i + 1:2d}: trace {t:9.3f}  increment {d:8.3f}")
