"""Two optical channels negotiate power through posted prices.

Starting from low prices, the link runs the coupled loop: channels follow
their cost gradients quickly while the prices drift slowly in the direction
that raises total utility.  The prices settle near 73 and 77, the powers near
0.0134 and 0.0128 mW, and both channels sit at about 23 dB OSNR.
"""

import numpy as np

from gamedesign import OpticalOsnrGame
from gamedesign.pricing import TwoTimescaleConfig, lyapunov_monitor, run_pricing_loop

game = OpticalOsnrGame([[2.47e-3, 2.61e-3], [2.36e-3, 2.5e-3]], 4.3e-7, [0.485, 0.48], [1.0, 1.0])
cfg = TwoTimescaleConfig(epsilon=0.01, dt_fast=5e-5, outer_step=5e4, outer_iters=50)

full = run_pricing_loop(game, [18.35, 19.23], cfg, assume_settled=False, x0=[4.3e-4, 4.3e-4])
settled = run_pricing_loop(game, [18.35, 19.23], cfg, assume_settled=True)

print("outer   alpha_1   alpha_2     x_1 [mW]   x_2 [mW]   OSNR_1  OSNR_2")
for k in range(0, len(full), 10):
    a, x, m = full.alpha[k], full.x[k], full.metric[k]
    print(f"{k:5d}  {a[0]:8.2f}  {a[1]:8.2f}   {x[0]:.6f}   {x[1]:.6f}   {m[0]:6.2f}  {m[1]:6.2f}")

print("\nsettled-game limit:", np.round(settled.alpha[-1], 2), np.round(settled.x[-1], 6))
mon = lyapunov_monitor(settled, game)
print(f"largest step-to-step rise of -W on the settled loop: {mon['max_increment']:.2e}")

# a single fast step per price update is too coarse: the monitor notices
coarse = TwoTimescaleConfig(epsilon=1.0, dt_fast=5e-5, outer_step=5e4, outer_iters=50)
bad = lyapunov_monitor(run_pricing_loop(game, [18.35, 19.23], coarse, assume_settled=False, x0=[4.3e-4, 4.3e-4]), game)
print(f"epsilon = 1: relative rise {bad['relative_increment']:.1e}, flagged = {bad['flagged']}")
