"""Shared fixtures: the bundled reference configuration and its solved surfaces.

The reference run (same parameters as configs/reference_experiment.json):
corridor prices (0.1, 100), strike 20, maturity 0.25, alpha1 = alpha2 = 1,
sigma1 = 0.02, r = 0, 100 grid intervals, dt = 2e-4, giving step heights
A = 40, B = 80.  Drifts and sigma2 are free parameters of that experiment;
they only enter the hedge (through the Sharpe gap), not the solved profile.
"""

import numpy as np
import pytest

from steparb import (
    ContractSpec,
    Grid1D,
    MarketParams,
    SolverConfig,
    boundary_values,
    cubic_nonlinearity,
    derive_constants,
    solve_classical_bs,
    solve_semilinear,
    terminal_profile,
)


@pytest.fixture(scope="session")
def ref_market():
    return MarketParams(mu1=0.08, mu2=0.02, sigma1=0.02, sigma2=0.1, r=0.0)


@pytest.fixture(scope="session")
def ref_contract():
    return ContractSpec.from_corridor_prices(
        strike=20.0, maturity=0.25, s_minus=0.1, s_plus=100.0, alpha1=1.0, alpha2=1.0
    )


@pytest.fixture(scope="session")
def ref_constants(ref_market, ref_contract):
    return derive_constants(ref_market, ref_contract)


@pytest.fixture(scope="session")
def ref_grid(ref_contract):
    return Grid1D.uniform(ref_contract.k_minus, ref_contract.k_plus, 101)


@pytest.fixture(scope="session")
def ref_solver_config(ref_constants):
    return SolverConfig(dt=2e-4, picard_tol=1e-10 * ref_constants.A, snapshot_stride=50)


@pytest.fixture(scope="session")
def ref_surface(ref_contract, ref_constants, ref_grid, ref_solver_config):
    """The reference nonlinear run marched to tau = maturity from the payoff."""
    dc = ref_constants
    cubic = cubic_nonlinearity(dc)
    u0 = terminal_profile(ref_grid.nodes, dc, ref_contract)
    bc = boundary_values(dc)
    return solve_semilinear(
        ref_grid, dc.eps, cubic, cubic.derivative, u0, bc[0], bc[1],
        ref_contract.maturity, ref_solver_config,
    )


@pytest.fixture(scope="session")
def vol_market():
    # same market with a volatility large enough for a meaningful diffusion check
    return MarketParams(mu1=0.08, mu2=0.02, sigma1=0.2, sigma2=0.1, r=0.0)


def classical_surface(params, contract, n_nodes=2001, dt=1e-4):
    grid = Grid1D.uniform(contract.k_minus, contract.k_plus, n_nodes)
    cfg = SolverConfig(dt=dt, picard_tol=1e-12, snapshot_stride=500)
    return solve_classical_bs(params, contract, grid, cfg)


@pytest.fixture(scope="session")
def classical_surface_lowvol(ref_market, ref_contract):
    return classical_surface(ref_market, ref_contract)


@pytest.fixture(scope="session")
def classical_surface_highvol(vol_market, ref_contract):
    return classical_surface(vol_market, ref_contract)


def profile_crossing(nodes: np.ndarray, values: np.ndarray, level: float) -> float:
    """First linear-interpolated crossing of ``level``; nan when absent."""
    shifted = values - level
    idx = np.nonzero(shifted[:-1] * shifted[1:] <= 0)[0]
    idx = [i for i in idx if shifted[i] != 0 or shifted[i + 1] != 0]
    if not idx:
        return float("nan")
    i = idx[0]
    frac = shifted[i] / (shifted[i] - shifted[i + 1])
    return float(nodes[i] + frac * (nodes[i + 1] - nodes[i]))
