"""Pick an operating point, then compute the prices that make it an equilibrium.

For linear pricing the price for player i is its marginal utility at the
target.  Solving the priced game from an arbitrary start lands back on the
target.  Quadratic pricing has no marginal charge at zero, so that target
cannot be reached by any price.
"""

import numpy as np

from gamedesign import OpticalOsnrGame, SeparableLogGame, WirelessSirGame
from gamedesign.design import design_price, wireless_qos_boundary_price
from gamedesign.catalog import sir_vector, wireless_ne
from gamedesign.solver import certify, solve_ne

optical = OpticalOsnrGame([[2.47e-3, 2.61e-3], [2.36e-3, 2.5e-3]], 4.3e-7, [0.485, 0.48], [1.0, 1.0])
target = np.array([0.0134, 0.0128])
res = design_price(optical, target)
x = solve_ne(optical, res.alpha, [4.3e-4, 4.3e-4]).x
print("optical prices for", target, "->", np.round(res.alpha, 3))
print("  equilibrium under those prices:", x, " error", np.max(np.abs(x - target)))

cert = certify(optical, res.alpha, region=([0.0067, 0.0063], [0.0202, 0.0189]))
for name, e in cert.to_dict().items():
    print(f"  {name:15s} holds={e['holds']!s:5s} margin={e['margin']:.5g}")

wireless = WirelessSirGame([1.0, 0.6, 0.8], 0.1, 24.0, [1.0, 1.0, 1.0], sbar=[3.0, 3.0, 3.0])
qos = wireless_qos_boundary_price(wireless)
print("\nwireless prices putting every SIR exactly on 3:", np.round(qos.alpha, 4))
print("  SIR at the priced equilibrium:", sir_vector(wireless_ne(wireless, qos.alpha), wireless))

quad = SeparableLogGame([3.0, 2.0], 1.0, pricing_kind="quadratic-sum")
bad = design_price(quad, [0.0, 0.0])
print("\nquadratic pricing at the origin:", bad.reason)
