"""Pricing mechanisms for noncooperative games.

Design static prices that place a Nash equilibrium at a target, regulate the
gradient play to a set point, and run welfare-seeking price dynamics using
only equilibrium observations.
"""

__version__ = "0.1.0"

from .catalog import (  # noqa: E402
    OpticalOsnrGame,
    SeparableLogGame,
    WirelessSirGame,
    osnr_H,
    osnr_ne,
    osnr_vector,
    qos_matrix,
    qos_vector,
    separable_ne,
    sir,
    sir_vector,
    wireless_A,
    wireless_ne,
)
from .control import ControllerSpec, LinearizedPlant, game_flow, linearize, reachability_rank, regulate, regulation_gain, steady_state_price  # noqa: E402
from .core import (  # noqa: E402
    ConstraintSet,
    DiffSettings,
    GameSpec,
    OpaqueFamily,
    cost,
    costs,
    jacobian_Q,
    kkt_residual,
    pseudo_gradient,
)
from .design import DesignResult, design_price, wireless_qos_boundary_price  # noqa: E402
from .errors import *  # noqa: E402,F401,F403
from .oracles import OracleResult, brute_ne, brute_welfare_max  # noqa: E402
from .pricing import (  # noqa: E402
    PenaltySpec,
    TwoTimescaleConfig,
    lyapunov_monitor,
    penalty_price_rhs,
    price_ode_rhs,
    run_penalty_loop,
    run_pricing_loop,
    welfare,
    welfare_gradient,
)
from .solver import CertificateReport, SolverSettings, certify, equilibrium, ne_map_jacobian, solve_ne  # noqa: E402
from .trajectory import Trajectory  # noqa: E402
