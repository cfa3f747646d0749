"""Steer the optical gradient play to a set point with state feedback on the prices.

The controller adds a feedback term to the steady-state price so the
linearized error dynamics decay at the chosen rates.  With a constant
disturbance on the power update, proportional feedback leaves an offset;
the integral-augmented controller removes it.
"""

import numpy as np

from gamedesign import OpticalOsnrGame
from gamedesign.control import ControllerSpec, reachability_rank, regulate, steady_state_price
from gamedesign.core import drift

game = OpticalOsnrGame([[2.47e-3, 2.61e-3], [2.36e-3, 2.5e-3]], 4.3e-7, [0.485, 0.48], [1.0, 1.0])
x_ref = np.array([0.0134, 0.0128])
print("steady-state price:", np.round(steady_state_price(game, x_ref), 3))
print("controllability rank from the price inputs:", reachability_rank(game, [70.0, 70.0], x_ref).rank)

tr = regulate(game, ControllerSpec(x_ref, 5.0), 0.99 * x_ref, dt=1e-2, T=10.0, record_every=100)
for t, err in zip(tr.t, np.linalg.norm(tr.x - x_ref, axis=1)):
    print(f"  t={t:5.1f}  |x - x_ref| = {err:.2e}")

d = 0.1 * np.linalg.norm(drift(game, x_ref)) * np.ones(2) / np.sqrt(2)
run = dict(dt=1e-6, T=5e-3, record_every=1000, disturbance=d)
p = regulate(game, ControllerSpec(x_ref, 2e4), x_ref, **run).meta["final_error"]
i = regulate(game, ControllerSpec(x_ref, 2e4, 1e8, "integral-augmented"), x_ref, **run).meta["final_error"]
print(f"\nconstant disturbance {np.linalg.norm(d):.2f}: proportional offset {p:.1e}, integral offset {i:.1e}")
