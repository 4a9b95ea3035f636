"""Crank-Nicolson marching for eps^2 u_xx - u_t = f(u) on [a, b] with Dirichlet data.

The theta = 1/2 step

    eps^2 * D2(u^{n+1} + u^n)/2 - (u^{n+1} - u^n)/dt = (f(u^{n+1}) + f(u^n))/2

is resolved per step by Picard iteration with f linearised about the previous
iterate; every inner solve is one tridiagonal elimination.  A linear mode
(f identically 0) covers heat-equation validation and the classical one-asset
control solve.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import NonFiniteError, NotConvergedError, PicardDivergedError
from .transform import ContractSpec, boundary_values, derive_constants, terminal_profile

__all__ = [
    "Grid1D",
    "SolverConfig",
    "SolutionSurface",
    "solve_tridiagonal",
    "solve_semilinear",
    "march_to_stationary",
    "solve_classical_bs",
]


def solve_tridiagonal(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a tridiagonal system by banded elimination (forward sweep, back substitution).

    ``lower`` and ``upper`` have length n-1.  Backed by LAPACK's banded solver.
    """
    n = len(diag)
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs)


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [a, b] with at least 3 nodes."""

    a: float
    b: float
    n_nodes: int
    nodes: np.ndarray = field(repr=False)
    h: float

    @classmethod
    def uniform(cls, a: float, b: float, n_nodes: int) -> "Grid1D":
        if n_nodes < 3:
            raise ValueError("need at least 3 nodes")
        if not b > a:
            raise ValueError("need b > a")
        nodes = np.linspace(a, b, n_nodes)
        return cls(a=a, b=b, n_nodes=n_nodes, nodes=nodes, h=(b - a) / (n_nodes - 1))

    def __post_init__(self):
        d = np.diff(self.nodes)
        if not (np.all(d > 0) and np.max(np.abs(d - self.h)) <= 1e-12 * max(1.0, abs(self.h))):
            raise ValueError("nodes must be uniformly increasing")


@dataclass(frozen=True)
class SolverConfig:
    """Time step, scheme weight (1/2 for Crank-Nicolson) and inner-iteration controls.

    ``picard_tol`` is an absolute max-norm tolerance; scale it to the solution
    height (for the pricing cubic, 1e-10 * A is the intended setting).
    """

    dt: float
    theta: float = 0.5
    picard_tol: float = 1e-10
    picard_max: int = 50
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0 <= self.theta <= 1:
            raise ValueError("theta must lie in [0, 1]")
        if self.picard_tol <= 0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max < 1:
            raise ValueError("picard_max must be at least 1")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be at least 1")


@dataclass(frozen=True)
class SolutionSurface:
    """Stored time levels of the marched solution u(y1, tau)."""

    grid: Grid1D
    taus: np.ndarray
    values: np.ndarray  # shape (len(taus), n_nodes)
    eps: float

    @property
    def final_profile(self) -> np.ndarray:
        return self.values[-1]

    @property
    def final_tau(self) -> float:
        return float(self.taus[-1])

    def profile_at(self, tau: float) -> np.ndarray:
        """Nodal values at tau, linear in time between stored levels."""
        taus = self.taus
        if tau < taus[0] - 1e-12 or tau > taus[-1] + 1e-12:
            raise ValueError(f"tau={tau} outside stored range [{taus[0]}, {taus[-1]}]")
        j = int(np.clip(np.searchsorted(taus, tau) - 1, 0, len(taus) - 2))
        span = taus[j + 1] - taus[j]
        w = 0.0 if span == 0 else np.clip((tau - taus[j]) / span, 0.0, 1.0)
        return (1.0 - w) * self.values[j] + w * self.values[j + 1]

    def to_csv(self, path, header_lines=()) -> None:
        """Long-format CSV with columns tau, node_index, y1, u."""
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["tau", "node_index", "y1", "u"])
            for k, tau in enumerate(self.taus):
                for i, y in enumerate(self.grid.nodes):
                    writer.writerow([repr(float(tau)), i, repr(float(y)), repr(float(self.values[k, i]))])


def _zero(u):
    return np.zeros_like(u)


def _cn_step(u, r, dt, theta, f, f_prime, bc, tol, cap):
    """One theta-weighted step; returns the new profile.

    Picard iteration: f(u^{n+1}) is replaced by its linearisation about the
    previous iterate v, giving one tridiagonal solve per iterate.
    """
    n = len(u)
    interior = slice(1, n - 1)
    lap = u[2:] - 2.0 * u[interior] + u[:-2]
    explicit = u[interior] / dt + (1.0 - theta) * r * lap - (1.0 - theta) * f(u[interior])

    lower = np.full(n - 3, -theta * r)
    upper = np.full(n - 3, -theta * r)
    v = u.copy()
    for _ in range(cap):
        fv = f(v[interior])
        fpv = f_prime(v[interior])
        diag = 1.0 / dt + 2.0 * theta * r + theta * fpv
        rhs = explicit - theta * (fv - fpv * v[interior])
        rhs[0] += theta * r * bc[0]
        rhs[-1] += theta * r * bc[1]
        w = v.copy()
        w[interior] = solve_tridiagonal(lower, diag, upper, rhs)
        if not np.all(np.isfinite(w)):
            raise NonFiniteError("solution values became non-finite")
        delta = float(np.max(np.abs(w - v)))
        v = w
        if delta <= tol:
            return v
    raise PicardDivergedError(f"Picard iteration exceeded cap {cap} (last delta {delta:.3e})")


def solve_semilinear(
    grid: Grid1D,
    eps: float,
    f,
    f_prime,
    u0: np.ndarray,
    bc_left: float,
    bc_right: float,
    t_end: float,
    cfg: SolverConfig,
) -> SolutionSurface:
    """March the semi-linear problem from u0 to t_end, storing snapshots.

    ``f`` and ``f_prime`` are vectorised callables (pass None for the linear
    heat mode).  u0 must match the boundary values at the endpoints.  Snapshots
    keep every ``snapshot_stride``-th level plus the first and last.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (grid.n_nodes,):
        raise ValueError("u0 must have one value per grid node")
    scale = max(1.0, float(np.max(np.abs(u0))), abs(bc_left), abs(bc_right))
    if abs(u0[0] - bc_left) > 1e-9 * scale or abs(u0[-1] - bc_right) > 1e-9 * scale:
        raise ValueError("u0 endpoints must match the boundary values")
    if f is None:
        f, f_prime = _zero, _zero

    r = eps * eps / (grid.h * grid.h)
    bc = (bc_left, bc_right)
    n_steps = max(1, int(round(t_end / cfg.dt)))
    dt = t_end / n_steps  # land exactly on t_end

    u = u0.copy()
    u[0], u[-1] = bc
    taus = [0.0]
    snaps = [u.copy()]
    for step in range(1, n_steps + 1):
        u = _cn_step(u, r, dt, cfg.theta, f, f_prime, bc, cfg.picard_tol, cfg.picard_max)
        if step % cfg.snapshot_stride == 0 or step == n_steps:
            taus.append(step * dt)
            snaps.append(u.copy())
    return SolutionSurface(grid=grid, taus=np.array(taus), values=np.array(snaps), eps=eps)


def march_to_stationary(
    grid: Grid1D,
    eps: float,
    f,
    f_prime,
    u0: np.ndarray,
    bc,
    cfg: SolverConfig,
    stat_tol: float,
    t_max: float = 50.0,
):
    """March until max|u^{n+1} - u^n|/dt < stat_tol; returns (profile, tau_reached).

    Raises NotConvergedError if the rate is still above tolerance at t_max.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    u = np.asarray(u0, dtype=float).copy()
    if f is None:
        f, f_prime = _zero, _zero
    r = eps * eps / (grid.h * grid.h)
    u[0], u[-1] = bc
    tau = 0.0
    while tau < t_max:
        nxt = _cn_step(u, r, cfg.dt, cfg.theta, f, f_prime, bc, cfg.picard_tol, cfg.picard_max)
        tau += cfg.dt
        rate = float(np.max(np.abs(nxt - u))) / cfg.dt
        u = nxt
        if rate < stat_tol:
            return u, tau
    raise NotConvergedError(f"rate {rate:.3e} still above {stat_tol:.3e} at t={t_max}")


def solve_classical_bs(params, contract: ContractSpec, grid: Grid1D, cfg: SolverConfig) -> SolutionSurface:
    """Linear (f = 0) solve of the transformed problem: the one-asset control run.

    Mapping the result back through the coordinate chain approximates the
    classical closed-form call value inside the corridor.
    """
    dc = derive_constants(params, contract)
    u0 = terminal_profile(grid.nodes, dc, contract)
    bc = boundary_values(dc)
    return solve_semilinear(grid, dc.eps, None, None, u0, bc[0], bc[1], contract.maturity, cfg)
