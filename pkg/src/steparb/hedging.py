"""Two-asset hedge construction and Monte Carlo verification of its behaviour.

The position (delta1, delta2) is built so the dW coefficient of the portfolio
increment vanishes identically:

    delta1 = V_S1 + (sigma2 S2 / (sigma1 S1)) * V_S2 - delta2 * sigma2 S2 / (sigma1 S1)
    delta2 = -exp(-r tau) * U (U - A)(U - B) / (S2 * lambda),   U = exp(r tau) V,

where lambda is the Sharpe-gap coefficient.  At r = 0 delta2 reduces to
V (V - A)(V - B) / (S2 (mu2 - mu1 sigma2/sigma1)).  The simulator rebalances a
portfolio Pi = V - delta1 S1 - delta2 S2 along generated paths and accumulates
the tracking error of dPi - r Pi dt.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .black_scholes import QuoteContext, VanillaCall, bs_price
from .errors import OutOfCorridorError, SharpeGapZeroError
from .market_model import MarketParams, PathEnsemble
from .pde import SolutionSurface
from .transform import ContractSpec, DerivedConstants, to_computational

__all__ = [
    "HedgePosition",
    "HedgeSimResult",
    "compute_delta2",
    "compute_delta1",
    "diffusion_residual",
    "surface_gradient",
    "simulate_hedged_portfolio",
]

_LAMBDA_FLOOR = 1e-14


@dataclass(frozen=True)
class HedgePosition:
    """Holdings of both assets and the portfolio value Pi = V - d1*S1 - d2*S2."""

    delta1: float
    delta2: float
    portfolio_value: float


@dataclass(frozen=True)
class HedgeSimResult:
    """Per-path tracking errors and the arbitrage bookkeeping of one simulation.

    tracking_error[i] is the path-i sum of (dPi - r Pi dt) over rebalance
    intervals; corridor_exit flags paths truncated by the cancellation clause.
    Terminal-payoff statistics cover completed (non-exited) paths.
    """

    tracking_error: np.ndarray
    corridor_exit: np.ndarray
    initial_value: float
    bs_reference: float
    terminal_payoff_mean: float
    terminal_payoff_positive_mean: float
    mean_abs_tracking: float
    mean_tracking: float
    n_paths: int
    rebalance_dt: float

    def to_json(self, **kwargs) -> str:
        payload = asdict(self)
        payload["tracking_error"] = [float(v) for v in self.tracking_error]
        payload["corridor_exit"] = [bool(v) for v in self.corridor_exit]
        return json.dumps(payload, sort_keys=True, **kwargs)


def compute_delta2(V: float, S2: float, tau: float, params: MarketParams, dc: DerivedConstants) -> float:
    """Second-asset holding that turns the pricing equation into the cubic problem.

    Raises SharpeGapZeroError when the market prices of risk coincide: the
    strategy does not exist in an arbitrage-free market.
    """
    if abs(dc.lam) < _LAMBDA_FLOOR:
        raise SharpeGapZeroError("sharpe gap is zero: equal costs of risk, no strategy")
    if S2 <= 0:
        raise ValueError("S2 must be positive")
    U = math.exp(params.r * tau) * V
    return -math.exp(-params.r * tau) * U * (U - dc.A) * (U - dc.B) / (S2 * dc.lam)


def compute_delta1(
    V_S1: float, V_S2: float, S1: float, S2: float, delta2: float, params: MarketParams
) -> float:
    """First-asset holding cancelling the diffusion term; classical delta when delta2 = V_S2 = 0."""
    if S1 <= 0:
        raise ValueError("S1 must be positive")
    coupling = params.sigma2 * S2 / (params.sigma1 * S1)
    return V_S1 + coupling * V_S2 - delta2 * coupling


def diffusion_residual(
    V_S1: float, V_S2: float, S1: float, S2: float, delta1: float, delta2: float, params: MarketParams
) -> float:
    """dW coefficient sigma1 S1 V_S1 + sigma2 S2 V_S2 - delta1 sigma1 S1 - delta2 sigma2 S2.

    Exactly zero (to rounding) for positions built by compute_delta1/compute_delta2.
    """
    return (
        params.sigma1 * S1 * V_S1
        + params.sigma2 * S2 * V_S2
        - delta1 * params.sigma1 * S1
        - delta2 * params.sigma2 * S2
    )


def surface_gradient(
    surface: SolutionSurface,
    S1: float,
    t: float,
    dc: DerivedConstants,
    contract: ContractSpec,
):
    """Value and S1-slope of the mapped-back price at (S1, t) from the solved grid.

    V = exp(-r tau) * U interpolated linearly in y1 and tau; the slope follows
    the chain rule V_S1 = exp(-r tau) * U_y1 * alpha1 / S1 with U_y1 from
    centred differences (one-sided at the grid edges).
    """
    y1, tau = to_computational(S1, t, dc, contract)
    grid = surface.grid
    if y1 < grid.a - 1e-12 or y1 > grid.b + 1e-12:
        raise OutOfCorridorError(f"y1={y1:.6g} outside [{grid.a:.6g}, {grid.b:.6g}]")
    u = surface.profile_at(tau)
    nodes = grid.nodes
    h = grid.h

    slopes = np.empty_like(u)
    slopes[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    slopes[0] = (u[1] - u[0]) / h
    slopes[-1] = (u[-1] - u[-2]) / h

    j = int(np.clip(np.searchsorted(nodes, y1) - 1, 0, len(nodes) - 2))
    w = np.clip((y1 - nodes[j]) / h, 0.0, 1.0)
    u_here = (1.0 - w) * u[j] + w * u[j + 1]
    slope_here = (1.0 - w) * slopes[j] + w * slopes[j + 1]

    # c1 = alpha1*(r - sigma1^2/2) and eps^2 = sigma1^2 alpha1^2/2 pin down r
    rate = dc.c1 / contract.alpha1 + (dc.eps / contract.alpha1) ** 2
    disc = math.exp(-rate * tau)
    return disc * u_here, disc * slope_here * contract.alpha1 / S1


def _corridor_bounds(tau, dc, contract):
    c = dc.c1 / contract.alpha1
    return (
        math.exp(contract.k_minus / contract.alpha1 - c * tau),
        math.exp(contract.k_plus / contract.alpha1 - c * tau),
    )


def simulate_hedged_portfolio(
    ensemble: PathEnsemble,
    surface: SolutionSurface,
    params: MarketParams,
    dc: DerivedConstants,
    contract: ContractSpec,
    force_delta2_zero: bool = False,
    rebalance_stride: int = 1,
    ledger_path=None,
) -> HedgeSimResult:
    """Rebalance the hedge along each path and accumulate tracking errors.

    At every rebalance date (every ``rebalance_stride``-th path step) the
    position is rebuilt from the surface value/slope and the current prices;
    between dates the holdings are frozen and dPi = dV - d1 dS1 - d2 dS2 is
    accumulated per path step with compensated summation.  Paths leaving the
    corridor are truncated there and flagged (contract cancellation clause).

    force_delta2_zero selects the classical one-asset hedge (delta2 = 0), the
    textbook replication control.
    """
    if rebalance_stride < 1:
        raise ValueError("rebalance_stride must be at least 1")
    if not force_delta2_zero and abs(dc.lam) < _LAMBDA_FLOOR:
        raise SharpeGapZeroError("sharpe gap is zero: equal costs of risk, no strategy")

    times = ensemble.times
    n_paths = ensemble.n_paths
    n_steps = ensemble.n_steps
    T = contract.maturity
    r = params.r
    ledger_rows = []

    def value_slope(s1, t):
        return surface_gradient(surface, s1, t, dc, contract)

    v0, _ = value_slope(ensemble.s1[0, 0], 0.0)
    bs_ref = bs_price(
        QuoteContext(spot=float(ensemble.s1[0, 0]), rate=r, time_to_expiry=T),
        VanillaCall(strike=contract.strike, maturity=T),
        params.sigma1,
    )

    tracking = np.zeros(n_paths)
    exited = np.zeros(n_paths, dtype=bool)
    payoffs = []
    for p in range(n_paths):
        s1 = ensemble.s1[p]
        s2 = ensemble.s2[p]
        total = 0.0
        comp = 0.0  # Kahan compensation
        d1 = d2 = 0.0
        v_prev = None
        for k in range(n_steps):
            t_k = times[k]
            tau_k = T - t_k
            lo, hi = _corridor_bounds(tau_k, dc, contract)
            if not lo <= s1[k] <= hi:
                exited[p] = True
                break
            lo_n, hi_n = _corridor_bounds(T - times[k + 1], dc, contract)
            if not lo_n <= s1[k + 1] <= hi_n:
                # truncate at the exit: the contract cancels there
                exited[p] = True
                break
            if v_prev is None or k % rebalance_stride == 0:
                v_k, slope_k = value_slope(s1[k], t_k)
                d2 = 0.0 if force_delta2_zero else compute_delta2(v_k, s2[k], tau_k, params, dc)
                d1 = compute_delta1(slope_k, 0.0, s1[k], s2[k], d2, params)
            else:
                v_k, _ = value_slope(s1[k], t_k)
            pi_k = v_k - d1 * s1[k] - d2 * s2[k]
            v_next, _ = value_slope(s1[k + 1], times[k + 1])
            d_pi = (v_next - v_k) - d1 * (s1[k + 1] - s1[k]) - d2 * (s2[k + 1] - s2[k])
            increment = d_pi - r * pi_k * (times[k + 1] - t_k)
            y = increment - comp
            t_sum = total + y
            comp = (t_sum - total) - y
            total = t_sum
            if ledger_path is not None:
                ledger_rows.append(
                    [p, float(t_k), float(s1[k]), float(s2[k]), v_k, d1, d2, pi_k, increment]
                )
            v_prev = v_k
        tracking[p] = total
        if not exited[p]:
            payoffs.append(max(s1[-1] - contract.strike, 0.0))

    if ledger_path is not None:
        with open(ledger_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["path", "time", "s1", "s2", "v", "delta1", "delta2", "pi", "tracking_increment"]
            )
            writer.writerows(ledger_rows)

    payoffs = np.array(payoffs) if payoffs else np.zeros(0)
    positive = payoffs[payoffs > 0]
    return HedgeSimResult(
        tracking_error=tracking,
        corridor_exit=exited,
        initial_value=v0,
        bs_reference=bs_ref,
        terminal_payoff_mean=float(payoffs.mean()) if payoffs.size else float("nan"),
        terminal_payoff_positive_mean=float(positive.mean()) if positive.size else 0.0,
        mean_abs_tracking=float(np.mean(np.abs(tracking))),
        mean_tracking=float(np.mean(tracking)),
        n_paths=n_paths,
        rebalance_dt=float(times[1] - times[0]) * rebalance_stride,
    )
