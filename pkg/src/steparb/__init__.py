"""Two-asset option hedging through a singularly perturbed reaction-diffusion problem.

Pipeline: transform the two-asset pricing PDE to eps^2 u_xx - u_t = u(u-A)(u-B)
on a fixed interval, march it by Crank-Nicolson, verify the step-structure
conditions, build the explicit (delta1, delta2) hedge, exercise it along Monte
Carlo paths, and extract implied-volatility skew curves from the resulting
prices.
"""

from . import black_scholes, csls, hedging, market_model, pde, smile, transform
from .black_scholes import QuoteContext, VanillaCall, bs_delta, bs_implied_vol, bs_price
from .csls import CslsReport, CubicRoots, check_conditions, compare_to_limit, compute_J, transition_point
from .errors import (
    ConfigError,
    EmptyCurveError,
    IterLimitError,
    NoCrossingError,
    NonFiniteError,
    NoSolutionError,
    NotConvergedError,
    OutOfCorridorError,
    PicardDivergedError,
    SharpeGapZeroError,
    StepArbError,
)
from .hedging import (
    HedgePosition,
    HedgeSimResult,
    compute_delta1,
    compute_delta2,
    diffusion_residual,
    simulate_hedged_portfolio,
    surface_gradient,
)
from .market_model import MarketParams, PathEnsemble, sharpe_gap, simulate_paths
from .pde import Grid1D, SolutionSurface, SolverConfig, march_to_stationary, solve_classical_bs, solve_semilinear
from .smile import SmileCurve, SmilePoint, build_smile, implied_curve, price_curve
from .transform import (
    ContractSpec,
    DerivedConstants,
    boundary_values,
    corridor_prices,
    cubic_nonlinearity,
    derive_constants,
    from_computational,
    price_from_grid_value,
    s2_from_coords,
    terminal_profile,
    to_computational,
)

__version__ = "0.1.0"
