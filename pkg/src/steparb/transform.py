"""Variable changes between financial and computational coordinates, and derived constants.

The chain, for a direct time tau = T - t:

    x1 = alpha1 * ln S1                     y1 = x1 + c1 * tau
    x2 = alpha2 * ln(S2^sigma1 / S1^sigma2) y2 = x2 + c2 * tau
    V  = exp(-r * tau) * U

with shifts c1 = alpha1*(r - sigma1^2/2) and
c2 = alpha2*(mu2*sigma1 - mu1*sigma2 + sigma1*sigma2*(sigma1 - sigma2)/2).
In these coordinates the pricing problem becomes

    eps^2 * U_y1y1 - U_tau = f(U),   f(U) = U (U - A) (U - B),

with eps^2 = sigma1^2 * alpha1^2 / 2, on the fixed interval [K-, K+].  No y2
derivatives appear, so y2 is carried as a parameter only.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .market_model import MarketParams, sharpe_gap

__all__ = [
    "ContractSpec",
    "DerivedConstants",
    "Cubic",
    "derive_constants",
    "to_computational",
    "from_computational",
    "corridor_prices",
    "s2_from_coords",
    "y2_from_prices",
    "price_from_grid_value",
    "grid_value_from_price",
    "terminal_profile",
    "cubic_nonlinearity",
    "boundary_values",
]

logger = logging.getLogger(__name__)

# The frozen Dirichlet data at K+ assume sigma1^2 * T is small; warn above this.
BOUNDARY_FREEZE_WARN = 0.01


@dataclass(frozen=True)
class ContractSpec:
    """Strike, maturity, corridor exponents and coordinate scales.

    The corridor in computational coordinates is the fixed interval
    [k_minus, k_plus]; in prices it is the moving band of corridor_prices().
    k_plus must satisfy exp(k_plus/alpha1) > strike so the step height is positive.
    """

    strike: float
    maturity: float
    k_minus: float
    k_plus: float
    alpha1: float = 1.0
    alpha2: float = 1.0

    def __post_init__(self):
        if self.strike <= 0:
            raise ValueError("strike must be positive")
        if self.maturity <= 0:
            raise ValueError("maturity must be positive")
        if not self.k_minus < 0 < self.k_plus:
            raise ValueError("need k_minus < 0 < k_plus")
        if self.alpha1 <= 0 or self.alpha2 <= 0:
            raise ValueError("alpha scales must be positive")
        if math.exp(self.k_plus / self.alpha1) <= self.strike:
            raise ValueError("exp(k_plus/alpha1) must exceed the strike")

    @classmethod
    def from_corridor_prices(cls, strike, maturity, s_minus, s_plus, alpha1=1.0, alpha2=1.0):
        """Build a spec from the tau=0 corridor prices (S-, S+)."""
        if not 0 < s_minus < s_plus:
            raise ValueError("need 0 < s_minus < s_plus")
        return cls(
            strike=strike,
            maturity=maturity,
            k_minus=alpha1 * math.log(s_minus),
            k_plus=alpha1 * math.log(s_plus),
            alpha1=alpha1,
            alpha2=alpha2,
        )


@dataclass(frozen=True)
class DerivedConstants:
    """All constants derived from (MarketParams, ContractSpec).

    A is the step half-height, B = 2A the step height; x0 = (K- + K+)/2 is the
    predicted transition coordinate and s0 = sqrt(s_minus * s_plus) its price
    image; lam is the Sharpe-gap coefficient.
    """

    c1: float
    c2: float
    eps: float
    A: float
    B: float
    x0: float
    s_minus: float
    s_plus: float
    s0: float
    lam: float

    def to_json(self, **kwargs) -> str:
        return json.dumps(asdict(self), sort_keys=True, **kwargs)


def derive_constants(
    params: MarketParams,
    contract: ContractSpec,
    freeze_warn_threshold: float = BOUNDARY_FREEZE_WARN,
) -> DerivedConstants:
    """Compute shifts, the small parameter, step heights and corridor landmarks.

    Emits a log warning when sigma1^2 * T exceeds ``freeze_warn_threshold``:
    the time-frozen boundary data are then a questionable approximation.
    """
    a1, a2 = contract.alpha1, contract.alpha2
    s1v, s2v = params.sigma1, params.sigma2
    sq_t = s1v * s1v * contract.maturity
    if sq_t >= freeze_warn_threshold:
        logger.warning(
            "sigma1^2 * T = %.4g >= %.4g: frozen boundary values are a rough approximation",
            sq_t,
            freeze_warn_threshold,
        )
    c1 = a1 * (params.r - 0.5 * s1v * s1v)
    c2 = a2 * (params.mu2 * s1v - params.mu1 * s2v + 0.5 * s1v * s2v * (s1v - s2v))
    eps = math.sqrt(0.5) * s1v * a1
    s_plus = math.exp(contract.k_plus / a1)
    s_minus = math.exp(contract.k_minus / a1)
    if s_plus <= contract.strike:
        raise ValueError("exp(k_plus/alpha1) must exceed the strike")
    half = 0.5 * (s_plus - contract.strike)
    return DerivedConstants(
        c1=c1,
        c2=c2,
        eps=eps,
        A=half,
        B=2.0 * half,
        x0=0.5 * (contract.k_minus + contract.k_plus),
        s_minus=s_minus,
        s_plus=s_plus,
        s0=math.sqrt(s_minus * s_plus),
        lam=sharpe_gap(params),
    )


def to_computational(S1: float, t: float, dc: DerivedConstants, contract: ContractSpec):
    """Map (S1, t) to (y1, tau): tau = T - t, y1 = alpha1*ln(S1) + c1*tau."""
    if S1 <= 0:
        raise ValueError("S1 must be positive")
    if not 0 <= t <= contract.maturity:
        raise ValueError("t must lie in [0, maturity]")
    tau = contract.maturity - t
    return contract.alpha1 * math.log(S1) + dc.c1 * tau, tau


def from_computational(y1: float, tau: float, dc: DerivedConstants, contract: ContractSpec):
    """Exact inverse of to_computational."""
    if not 0 <= tau <= contract.maturity:
        raise ValueError("tau must lie in [0, maturity]")
    return math.exp((y1 - dc.c1 * tau) / contract.alpha1), contract.maturity - tau


def corridor_prices(tau: float, dc: DerivedConstants, contract: ContractSpec):
    """Moving corridor (S-(tau), S+(tau)) = exp(K±/alpha1 - (c1/alpha1) tau)."""
    if not 0 <= tau <= contract.maturity:
        raise ValueError("tau must lie in [0, maturity]")
    c = dc.c1 / contract.alpha1
    return (
        math.exp(contract.k_minus / contract.alpha1 - c * tau),
        math.exp(contract.k_plus / contract.alpha1 - c * tau),
    )


def s2_from_coords(
    y1: float,
    y2: float,
    tau: float,
    dc: DerivedConstants,
    params: MarketParams,
    contract: ContractSpec,
) -> float:
    """Invert the coordinate pair for the second asset price.

    S2 = exp((y2 - c2*tau)/(alpha2*sigma1) + sigma2*(y1 - c1*tau)/(alpha1*sigma1)).
    """
    a1, a2 = contract.alpha1, contract.alpha2
    return math.exp(
        (y2 - dc.c2 * tau) / (a2 * params.sigma1)
        + params.sigma2 * (y1 - dc.c1 * tau) / (a1 * params.sigma1)
    )


def y2_from_prices(
    S1: float,
    S2: float,
    t: float,
    dc: DerivedConstants,
    params: MarketParams,
    contract: ContractSpec,
) -> float:
    """Forward map for the second coordinate: y2 = alpha2*(sigma1 lnS2 - sigma2 lnS1) + c2 tau."""
    if S1 <= 0 or S2 <= 0:
        raise ValueError("prices must be positive")
    tau = contract.maturity - t
    return contract.alpha2 * (params.sigma1 * math.log(S2) - params.sigma2 * math.log(S1)) + dc.c2 * tau


def price_from_grid_value(U, tau: float, r: float):
    """Undo the dependent-variable change: V = exp(-r*tau) * U."""
    return math.exp(-r * tau) * U


def grid_value_from_price(V, tau: float, r: float):
    """U = exp(r*tau) * V, the inverse of price_from_grid_value."""
    return math.exp(r * tau) * V


def terminal_profile(y1, dc: DerivedConstants, contract: ContractSpec):
    """Payoff in computational coordinates: (exp(y1/alpha1) - strike)^+ at tau = 0."""
    y = np.asarray(y1, dtype=float)
    if np.any(y < contract.k_minus - 1e-12) or np.any(y > contract.k_plus + 1e-12):
        raise ValueError("y1 outside [k_minus, k_plus]")
    out = np.maximum(np.exp(y / contract.alpha1) - contract.strike, 0.0)
    return float(out) if np.isscalar(y1) else out


@dataclass(frozen=True)
class Cubic:
    """The bistable nonlinearity f(u) = u (u - A) (u - B) and its derivative."""

    A: float
    B: float

    def __call__(self, u):
        return u * (u - self.A) * (u - self.B)

    def derivative(self, u):
        return 3.0 * u * u - 2.0 * (self.A + self.B) * u + self.A * self.B


def cubic_nonlinearity(dc: DerivedConstants) -> Cubic:
    """Reaction term of the transformed pricing problem, with step heights from dc."""
    return Cubic(A=dc.A, B=dc.B)


def boundary_values(dc: DerivedConstants):
    """Time-frozen Dirichlet data (0, 2A) at (K-, K+); valid while sigma1^2 T is small."""
    return 0.0, dc.B
