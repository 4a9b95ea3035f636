"""Price-vs-strike curves for both strategies and implied-volatility skew extraction.

For each strike the step heights A = (exp(K+/alpha1) - X)/2, B = 2A change, so
the transformed problem is re-derived and re-solved per point.  Implied
volatilities of the step-strategy prices frequently have no solution (the whole
point: those prices violate one-asset no-arbitrage bounds); such points are
first-class flagged outcomes and the skew fit uses OK points only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .black_scholes import QuoteContext, VanillaCall, bs_implied_vol, bs_price
from .errors import EmptyCurveError, IterLimitError, NoSolutionError, StepArbError
from .hedging import surface_gradient
from .market_model import MarketParams
from .pde import Grid1D, SolverConfig, solve_semilinear
from .transform import (
    ContractSpec,
    boundary_values,
    cubic_nonlinearity,
    derive_constants,
    terminal_profile,
)

__all__ = ["SmilePoint", "SmileCurve", "price_curve", "implied_curve", "build_smile"]

VOL_OK = "OK"
VOL_NO_SOLUTION = "NO_SOLUTION"
VOL_ITER_LIMIT = "ITER_LIMIT"


@dataclass
class SmilePoint:
    strike: float
    price_classical: float
    price_arbitrage: float
    implied_vol: float | None = None
    vol_status: str = VOL_NO_SOLUTION
    note: str = ""


@dataclass
class SmileCurve:
    """One maturity slice: points ordered by strike plus the fitted skew slope."""

    maturity: float
    spot: float
    points: list
    skew: float | None = None

    def __post_init__(self):
        strikes = [p.strike for p in self.points]
        if any(b <= a for a, b in zip(strikes, strikes[1:])):
            raise ValueError("strikes must be strictly increasing")

    def to_csv(self, path, header_lines=()) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["strike", "price_classical", "price_arbitrage", "implied_vol", "vol_status"])
            for p in self.points:
                writer.writerow(
                    [
                        repr(float(p.strike)),
                        repr(float(p.price_classical)),
                        repr(float(p.price_arbitrage)),
                        "" if p.implied_vol is None else repr(float(p.implied_vol)),
                        p.vol_status,
                    ]
                )


def _solve_point(strike, maturity, spot, params, contract_template, grid, cfg, linear):
    contract = replace(contract_template, strike=strike, maturity=maturity)
    dc = derive_constants(params, contract)
    cubic = cubic_nonlinearity(dc)
    u0 = terminal_profile(grid.nodes, dc, contract)
    bc = boundary_values(dc)
    f, fp = (None, None) if linear else (cubic, cubic.derivative)
    surface = solve_semilinear(grid, dc.eps, f, fp, u0, bc[0], bc[1], maturity, cfg)
    value, _ = surface_gradient(surface, spot, 0.0, dc, contract)
    return value


def price_curve(
    strikes,
    spot: float,
    params: MarketParams,
    contract_template: ContractSpec,
    cfg: SolverConfig,
    grid: Grid1D | None = None,
    maturity: float | None = None,
    linear: bool = False,
) -> list[SmilePoint]:
    """Solve the step problem per strike and quote both strategies at the spot.

    The classical comparison curve uses sigma1 as its reference volatility.
    Solver failures flag the point and the curve continues.  ``linear`` drops
    the reaction term (control mode: both columns should then agree).
    """
    strikes = list(strikes)
    if any(b <= a for a, b in zip(strikes, strikes[1:])):
        raise ValueError("strikes must be strictly increasing")
    if any(x <= 0 for x in strikes):
        raise ValueError("strikes must be positive")
    T = contract_template.maturity if maturity is None else maturity
    if grid is None:
        grid = Grid1D.uniform(contract_template.k_minus, contract_template.k_plus, 101)

    points = []
    for x in strikes:
        classical = bs_price(
            QuoteContext(spot=spot, rate=params.r, time_to_expiry=T),
            VanillaCall(strike=x, maturity=T),
            params.sigma1,
        )
        try:
            arb = _solve_point(x, T, spot, params, contract_template, grid, cfg, linear)
            note = ""
        except (StepArbError, ValueError) as exc:
            arb = float("nan")
            note = f"solver: {exc}"
        if np.isfinite(arb) and not 0.0 <= arb <= spot:
            note = (note + "; " if note else "") + "price outside [0, spot]"
        points.append(SmilePoint(strike=x, price_classical=classical, price_arbitrage=arb, note=note))
    return points


def implied_curve(
    points_by_maturity: dict,
    spot: float,
    params: MarketParams,
    fit_window=(0.8, 1.2),
) -> list[SmileCurve]:
    """Invert each maturity's step-strategy prices and fit the skew slope.

    ``points_by_maturity`` maps maturity to its list of SmilePoint (prices
    filled).  The skew is the least-squares slope of implied vol against strike
    over OK points with strike inside fit_window * spot.  Raises
    EmptyCurveError when no maturity yields a single OK point.
    """
    curves = []
    any_ok = False
    for maturity in sorted(points_by_maturity):
        pts = points_by_maturity[maturity]
        for p in pts:
            if not np.isfinite(p.price_arbitrage):
                p.implied_vol, p.vol_status = None, VOL_NO_SOLUTION
                continue
            ctx = QuoteContext(spot=spot, rate=params.r, time_to_expiry=maturity)
            call = VanillaCall(strike=p.strike, maturity=maturity)
            try:
                p.implied_vol = bs_implied_vol(ctx, call, p.price_arbitrage)
                p.vol_status = VOL_OK
            except NoSolutionError:
                p.implied_vol, p.vol_status = None, VOL_NO_SOLUTION
            except IterLimitError:
                p.implied_vol, p.vol_status = None, VOL_ITER_LIMIT
        lo, hi = fit_window[0] * spot, fit_window[1] * spot
        fit_pts = [
            (p.strike, p.implied_vol)
            for p in pts
            if p.vol_status == VOL_OK and lo <= p.strike <= hi
        ]
        skew = None
        if len(fit_pts) >= 2:
            xs = np.array([s for s, _ in fit_pts])
            vs = np.array([v for _, v in fit_pts])
            skew = float(np.polyfit(xs, vs, 1)[0])
        if any(p.vol_status == VOL_OK for p in pts):
            any_ok = True
        curves.append(SmileCurve(maturity=maturity, spot=spot, points=pts, skew=skew))
    if not any_ok:
        raise EmptyCurveError("no implied volatility could be computed on any curve")
    return curves


def build_smile(
    params: MarketParams,
    contract_template: ContractSpec,
    spot: float,
    strikes,
    maturities,
    cfg: SolverConfig,
    grid: Grid1D | None = None,
    fit_window=(0.8, 1.2),
) -> list[SmileCurve]:
    """End-to-end: per-maturity price curves, implied vols, skew fits."""
    if any(t <= 0 for t in maturities):
        raise ValueError("maturities must be positive")
    by_t = {
        t: price_curve(strikes, spot, params, contract_template, cfg, grid=grid, maturity=t)
        for t in maturities
    }
    return implied_curve(by_t, spot, params, fit_window=fit_window)
