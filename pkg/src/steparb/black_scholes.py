"""Classical one-asset call pricing: closed form, delta, and implied-volatility inversion.

The normal CDF is evaluated through scipy.special.ndtr (erf based, absolute error
near 1e-16), which comfortably meets the 1e-12 accuracy the inversion relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtr

from .errors import IterLimitError, NoSolutionError

__all__ = [
    "VanillaCall",
    "QuoteContext",
    "bs_price",
    "bs_delta",
    "bs_implied_vol",
    "SIGMA_MAX",
]

# Inversion bracket: volatilities outside [SIGMA_MIN, SIGMA_MAX] are treated as
# non-solutions (prices that close to the bounds carry no usable information).
SIGMA_MIN = 1e-6
SIGMA_MAX = 10.0
_MAX_ITER = 200


@dataclass(frozen=True)
class VanillaCall:
    """European call: strike and maturity of the contract."""

    strike: float
    maturity: float

    def __post_init__(self):
        if self.strike <= 0:
            raise ValueError("strike must be positive")
        if self.maturity <= 0:
            raise ValueError("maturity must be positive")


@dataclass(frozen=True)
class QuoteContext:
    """Point of evaluation: spot, riskless rate, remaining time to expiry."""

    spot: float
    rate: float
    time_to_expiry: float

    def __post_init__(self):
        if self.spot <= 0:
            raise ValueError("spot must be positive")
        if self.time_to_expiry < 0:
            raise ValueError("time_to_expiry must be non-negative")


def _d1_d2(spot, strike, rate, sigma, tau):
    srt = sigma * math.sqrt(tau)
    d1 = (math.log(spot / strike) + (rate + 0.5 * sigma * sigma) * tau) / srt
    return d1, d1 - srt


def bs_price(ctx: QuoteContext, call: VanillaCall, sigma: float) -> float:
    """Closed-form call value; exact payoff (spot - strike)^+ at expiry.

    sigma = 0 with time remaining returns the deterministic limit
    (spot - strike*exp(-r*tau))^+.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    tau = ctx.time_to_expiry
    if tau == 0:
        return max(ctx.spot - call.strike, 0.0)
    disc = math.exp(-ctx.rate * tau)
    if sigma == 0:
        return max(ctx.spot - call.strike * disc, 0.0)
    d1, d2 = _d1_d2(ctx.spot, call.strike, ctx.rate, sigma, tau)
    return ctx.spot * ndtr(d1) - call.strike * disc * ndtr(d2)


def bs_delta(ctx: QuoteContext, call: VanillaCall, sigma: float) -> float:
    """Hedge ratio dV/dS of the classical model; payoff slope at expiry."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    tau = ctx.time_to_expiry
    if tau == 0 or sigma == 0:
        strike = call.strike * (math.exp(-ctx.rate * tau) if tau > 0 else 1.0)
        if ctx.spot > strike:
            return 1.0
        return 0.5 if ctx.spot == strike else 0.0
    d1, _ = _d1_d2(ctx.spot, call.strike, ctx.rate, sigma, tau)
    return float(ndtr(d1))


def _vega(ctx, call, sigma):
    d1, _ = _d1_d2(ctx.spot, call.strike, ctx.rate, sigma, ctx.time_to_expiry)
    return ctx.spot * math.sqrt(ctx.time_to_expiry) * math.exp(-0.5 * d1 * d1) / math.sqrt(2 * math.pi)


def bs_implied_vol(ctx: QuoteContext, call: VanillaCall, observed_price: float) -> float:
    """Invert the call formula for sigma by safeguarded Newton on [1e-6, 10].

    Raises NoSolutionError when the observed price sits at or outside the
    no-arbitrage bounds [(spot - strike*exp(-r*tau))^+, spot], or needs a
    volatility beyond SIGMA_MAX.  Near-bound prices are an expected outcome for
    the step-structure strategy, not a crash.  Raises IterLimitError after 200
    iterations without meeting |price(sigma) - observed| <= 1e-10*max(1, observed).
    """
    tau = ctx.time_to_expiry
    if tau <= 0:
        raise ValueError("time_to_expiry must be positive for implied vol")
    lower = max(ctx.spot - call.strike * math.exp(-ctx.rate * tau), 0.0)
    if observed_price <= lower or observed_price >= ctx.spot:
        raise NoSolutionError(
            f"price {observed_price} outside arbitrage bounds ({lower}, {ctx.spot})"
        )
    lo, hi = SIGMA_MIN, SIGMA_MAX
    f_lo = bs_price(ctx, call, lo) - observed_price
    f_hi = bs_price(ctx, call, hi) - observed_price
    if f_lo > 0 or f_hi < 0:
        # price below the sigma->0 value or above the sigma_max value
        raise NoSolutionError(
            f"price {observed_price} not bracketed by sigma in [{lo}, {hi}]"
        )

    tol = 1e-10 * max(1.0, observed_price)
    sigma = 0.5 * (lo + hi)
    for _ in range(_MAX_ITER):
        diff = bs_price(ctx, call, sigma) - observed_price
        if abs(diff) <= tol:
            return sigma
        if diff > 0:
            hi = sigma
        else:
            lo = sigma
        vega = _vega(ctx, call, sigma)
        if vega > 0:
            candidate = sigma - diff / vega
            if lo < candidate < hi:
                sigma = candidate
                continue
        sigma = 0.5 * (lo + hi)  # bisection safeguard
    raise IterLimitError(f"implied vol did not converge in {_MAX_ITER} iterations")
