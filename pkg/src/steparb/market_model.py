"""Market parameters and path generation for two assets driven by one Wiener process.

Both asset prices follow geometric Brownian motions

    dS_i = mu_i S_i dt + sigma_i S_i dW,   i = 1, 2,

with the *same* dW.  A single normal draw per step updates both prices through the
exact lognormal solution, so the only simulation error in a hedging experiment is
the discreteness of rebalancing, never the paths themselves.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["MarketParams", "PathEnsemble", "sharpe_gap", "simulate_paths"]


@dataclass(frozen=True)
class MarketParams:
    """Drifts, volatilities and the riskless rate (all per year).

    The assets must differ in volatility: with sigma1 == sigma2 the two price
    processes are perfectly redundant and the second-asset hedge degenerates.
    """

    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    r: float

    def __post_init__(self):
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ValueError("volatilities must be positive")
        if self.sigma1 == self.sigma2:
            raise ValueError("sigma1 and sigma2 must differ")


@dataclass(frozen=True)
class PathEnsemble:
    """Simulated joint trajectories of (S1, S2) on a shared time grid.

    ``s1`` and ``s2`` have shape (n_paths, n_times); ``times`` has length n_times
    and runs from 0 to the horizon.  All prices are strictly positive.
    """

    times: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    seed: int

    @property
    def n_paths(self) -> int:
        return self.s1.shape[0]

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def to_csv(self, path) -> None:
        """Write long-format CSV with columns time, path_id, s1, s2."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "path_id", "s1", "s2"])
            for pid in range(self.n_paths):
                for k, t in enumerate(self.times):
                    writer.writerow(
                        [repr(float(t)), pid, repr(float(self.s1[pid, k])), repr(float(self.s2[pid, k]))]
                    )


def sharpe_gap(params: MarketParams) -> float:
    """Coefficient lambda = mu1*sigma2/sigma1 - mu2 - r*sigma2/sigma1 + r.

    Equals sigma2 * ((mu1-r)/sigma1 - (mu2-r)/sigma2), i.e. sigma2 times the
    difference of the two market prices of risk.  lambda = 0 characterises the
    arbitrage-free market; the explicit hedge exists only when lambda != 0.
    """
    ratio = params.sigma2 / params.sigma1
    return params.mu1 * ratio - params.mu2 - params.r * ratio + params.r


def _path_rng(seed: int, path_index: int) -> np.random.Generator:
    # One independent PCG64 stream per (seed, path index): results do not depend
    # on the order in which paths are generated.
    return np.random.default_rng(np.random.SeedSequence((seed, path_index)))


def simulate_paths(
    params: MarketParams,
    s1_0: float,
    s2_0: float,
    T: float,
    n_steps: int,
    n_paths: int,
    seed: int,
) -> PathEnsemble:
    """Generate joint GBM paths with one standard-normal draw per step.

    Per step, with z ~ N(0,1) shared by both assets,

        S_i <- S_i * exp((mu_i - sigma_i^2/2) dt + sigma_i sqrt(dt) z).

    Deterministic given ``seed``; path i owns the stream seeded by (seed, i).
    """
    if s1_0 <= 0 or s2_0 <= 0:
        raise ValueError("initial prices must be positive")
    if T <= 0:
        raise ValueError("horizon T must be positive")
    if n_steps < 1 or n_paths < 1:
        raise ValueError("n_steps and n_paths must be at least 1")

    dt = T / n_steps
    sqrt_dt = np.sqrt(dt)
    times = np.linspace(0.0, T, n_steps + 1)
    drift1 = (params.mu1 - 0.5 * params.sigma1**2) * dt
    drift2 = (params.mu2 - 0.5 * params.sigma2**2) * dt

    s1 = np.empty((n_paths, n_steps + 1))
    s2 = np.empty((n_paths, n_steps + 1))
    for i in range(n_paths):
        z = _path_rng(seed, i).standard_normal(n_steps)
        log1 = np.concatenate(([0.0], np.cumsum(drift1 + params.sigma1 * sqrt_dt * z)))
        log2 = np.concatenate(([0.0], np.cumsum(drift2 + params.sigma2 * sqrt_dt * z)))
        s1[i] = s1_0 * np.exp(log1)
        s2[i] = s2_0 * np.exp(log2)
    return PathEnsemble(times=times, s1=s1, s2=s2, seed=seed)
