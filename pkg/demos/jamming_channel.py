"""
How jamming power turns into packet loss
========================================

The sensor transmits at power delta_s. A jammer adds interference, lowering
the SINR; with BPSK-like bit errors and L-bit packets the drop probability
climbs steeply with jamming power.
"""

import numpy as np

from dosalloc import ChannelModel, dropout_prob, power_for_dropout

ch = ChannelModel(delta_s=10, G_s=1, G_a=1, sigma2=2, L=20)

print("no-attack dropout:", dropout_prob(ch, 0.0))
for p in (2, 5, 10, 20, 50):
    print(f"power {p:5.1f} -> dropout {dropout_prob(ch, p):.5f}")

# the inverse map: which power gives a 50 % drop rate?
p_half = power_for_dropout(ch, 0.5, 0.0, 50.0)
print("power for 50% dropout:", p_half)

# vectorised evaluation over a grid
grid = np.linspace(0, 20, 5)
print(np.column_stack([grid, dropout_prob(ch, grid)]))
