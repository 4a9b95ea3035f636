"""Batch front end: read an experiment config, run one pipeline stage, write data files.

Subcommands: constants | solve | csls-check | hedge-sim | smile | bs.
Config files are JSON; every output carries the config hash for provenance.
Exit codes: 0 success, 2 config violations (aggregated report), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import csls as csls_mod
from .black_scholes import QuoteContext, VanillaCall, bs_delta, bs_implied_vol, bs_price
from .errors import ConfigError, StepArbError
from .hedging import simulate_hedged_portfolio
from .market_model import MarketParams, simulate_paths
from .pde import Grid1D, SolverConfig, march_to_stationary, solve_classical_bs, solve_semilinear
from .smile import build_smile
from .transform import (
    ContractSpec,
    boundary_values,
    cubic_nonlinearity,
    derive_constants,
    terminal_profile,
)

__all__ = ["ExperimentConfig", "load_config", "config_hash", "main"]


@dataclass(frozen=True)
class ExperimentConfig:
    market: MarketParams
    contract: ContractSpec
    n_intervals: int
    solver: SolverConfig
    mc: dict
    smile: dict
    output_dir: str
    raw: dict

    def grid(self, refine: int = 1) -> Grid1D:
        return Grid1D.uniform(self.contract.k_minus, self.contract.k_plus, self.n_intervals * refine + 1)

    def solver_config(self, refine: int = 1) -> SolverConfig:
        if refine == 1:
            return self.solver
        from dataclasses import replace

        return replace(self.solver, dt=self.solver.dt / refine)


def config_hash(raw: dict) -> str:
    """First 12 hex chars of the sha256 of the canonical JSON dump."""
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _get(raw, problems, key, typ, required=True, default=None):
    if key not in raw:
        if required:
            problems.append(f"missing key '{key}'")
        return default
    val = raw[key]
    if typ is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, typ):
        problems.append(f"key '{key}' must be {typ.__name__}, got {type(val).__name__}")
        return default
    return val


def load_config(path) -> ExperimentConfig:
    """Parse and validate a config file; raises ConfigError with every problem found."""
    problems: list[str] = []
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError([f"cannot read config: {exc}"])

    market_raw = _get(raw, problems, "market", dict, default={})
    contract_raw = _get(raw, problems, "contract", dict, default={})
    grid_raw = _get(raw, problems, "grid", dict, default={})
    solver_raw = _get(raw, problems, "solver", dict, default={})
    mc_raw = _get(raw, problems, "mc", dict, required=False, default={})
    smile_raw = _get(raw, problems, "smile", dict, required=False, default={})
    output_dir = _get(raw, problems, "output_dir", str, required=False, default="out")

    market = None
    if market_raw is not None:
        kwargs = {}
        for key in ("mu1", "mu2", "sigma1", "sigma2", "r"):
            kwargs[key] = _get(market_raw, problems, key, float, default=0.0)
        try:
            market = MarketParams(**kwargs)
        except ValueError as exc:
            problems.append(f"market: {exc}")

    contract = None
    if contract_raw is not None:
        strike = _get(contract_raw, problems, "strike", float, default=1.0)
        maturity = _get(contract_raw, problems, "maturity", float, default=1.0)
        alpha1 = _get(contract_raw, problems, "alpha1", float, required=False, default=1.0)
        alpha2 = _get(contract_raw, problems, "alpha2", float, required=False, default=1.0)
        try:
            if "s_minus" in contract_raw or "s_plus" in contract_raw:
                s_minus = _get(contract_raw, problems, "s_minus", float, default=0.5)
                s_plus = _get(contract_raw, problems, "s_plus", float, default=2.0)
                contract = ContractSpec.from_corridor_prices(
                    strike, maturity, s_minus, s_plus, alpha1=alpha1, alpha2=alpha2
                )
            else:
                k_minus = _get(contract_raw, problems, "k_minus", float, default=-1.0)
                k_plus = _get(contract_raw, problems, "k_plus", float, default=1.0)
                contract = ContractSpec(
                    strike=strike, maturity=maturity, k_minus=k_minus, k_plus=k_plus,
                    alpha1=alpha1, alpha2=alpha2,
                )
        except ValueError as exc:
            problems.append(f"contract: {exc}")

    n_intervals = _get(grid_raw, problems, "n_intervals", int, required=False, default=100) if grid_raw is not None else 100
    if n_intervals is not None and n_intervals < 2:
        problems.append("grid.n_intervals must be at least 2")

    solver = None
    if solver_raw is not None:
        dt = _get(solver_raw, problems, "dt", float, default=1e-3)
        picard_tol = _get(solver_raw, problems, "picard_tol", float, required=False, default=1e-8)
        picard_max = _get(solver_raw, problems, "picard_max", int, required=False, default=50)
        stride = _get(solver_raw, problems, "snapshot_stride", int, required=False, default=50)
        try:
            solver = SolverConfig(dt=dt, picard_tol=picard_tol, picard_max=picard_max, snapshot_stride=stride)
        except ValueError as exc:
            problems.append(f"solver: {exc}")

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        market=market,
        contract=contract,
        n_intervals=n_intervals,
        solver=solver,
        mc=mc_raw or {},
        smile=smile_raw or {},
        output_dir=output_dir,
        raw=raw,
    )


def _out_dir(cfg: ExperimentConfig, args) -> Path:
    out = Path(args.out) if args.out else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_constants(cfg: ExperimentConfig, args) -> int:
    dc = derive_constants(cfg.market, cfg.contract)
    payload = json.loads(dc.to_json())
    payload["config_hash"] = config_hash(cfg.raw)
    text = json.dumps(payload, sort_keys=True, indent=2)
    print(text)
    (_out_dir(cfg, args) / "constants.json").write_text(text + "\n")
    return 0


def _solve_surface(cfg: ExperimentConfig, refine: int, classical: bool):
    grid = cfg.grid(refine)
    solver = cfg.solver_config(refine)
    if classical:
        return solve_classical_bs(cfg.market, cfg.contract, grid, solver), derive_constants(cfg.market, cfg.contract)
    dc = derive_constants(cfg.market, cfg.contract)
    cubic = cubic_nonlinearity(dc)
    u0 = terminal_profile(grid.nodes, dc, cfg.contract)
    bc = boundary_values(dc)
    surface = solve_semilinear(
        grid, dc.eps, cubic, cubic.derivative, u0, bc[0], bc[1], cfg.contract.maturity, solver
    )
    return surface, dc


def cmd_solve(cfg: ExperimentConfig, args) -> int:
    surface, dc = _solve_surface(cfg, args.refine, args.classical)
    out = _out_dir(cfg, args)
    tag = config_hash(cfg.raw)
    surface.to_csv(out / "surface.csv", header_lines=[f"config_hash={tag}"])
    final = surface.final_profile
    summary = {
        "config_hash": tag,
        "classical": bool(args.classical),
        "A": dc.A,
        "B": dc.B,
        "eps": dc.eps,
        "n_nodes": surface.grid.n_nodes,
        "dt": cfg.solver_config(args.refine).dt,
        "final_tau": surface.final_tau,
        "final_min": float(np.min(final)),
        "final_max": float(np.max(final)),
    }
    (out / "solve_summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_csls_check(cfg: ExperimentConfig, args) -> int:
    dc = derive_constants(cfg.market, cfg.contract)
    grid = cfg.grid(args.refine)
    solver = cfg.solver_config(args.refine)
    cubic = cubic_nonlinearity(dc)
    bc = boundary_values(dc)
    roots = csls_mod.CubicRoots.from_constants(dc)

    payoff = terminal_profile(grid.nodes, dc, cfg.contract)
    conditions = csls_mod.check_conditions(cubic, roots, bc, grid.nodes, payoff)

    # stationarity march: ramp data lie in the predicted structure's domain of
    # influence; the payoff datum settles on a different (pinned) front
    if args.initial == "payoff":
        u0 = payoff.copy()
    else:
        u0 = bc[0] + (bc[1] - bc[0]) * (grid.nodes - grid.a) / (grid.b - grid.a)
    profile, tau_reached = march_to_stationary(
        grid, dc.eps, cubic, cubic.derivative, u0, bc, solver,
        stat_tol=args.stat_tol, t_max=args.t_max,
    )
    errors = csls_mod.compare_to_limit(profile, grid.nodes, conditions.x0_predicted, dc)
    report = csls_mod.combine_reports(conditions, errors)

    payload = json.loads(report.to_json())
    payload["config_hash"] = config_hash(cfg.raw)
    payload["initial_profile"] = args.initial
    payload["tau_reached"] = tau_reached
    text = json.dumps(payload, sort_keys=True, indent=2)
    print(text)
    (_out_dir(cfg, args) / "csls_report.json").write_text(text + "\n")
    return 0


def cmd_hedge_sim(cfg: ExperimentConfig, args) -> int:
    mc = cfg.mc
    surface, dc = _solve_surface(cfg, args.refine, args.classical)
    ensemble = simulate_paths(
        cfg.market,
        s1_0=float(mc.get("s1_0", 1.0)),
        s2_0=float(mc.get("s2_0", 1.0)),
        T=cfg.contract.maturity,
        n_steps=int(mc.get("n_steps", 64)),
        n_paths=int(mc.get("n_paths", 100)),
        seed=int(mc.get("seed", 0)),
    )
    out = _out_dir(cfg, args)
    ledger = out / "hedge_ledger.csv" if args.ledger else None
    result = simulate_hedged_portfolio(
        ensemble, surface, cfg.market, dc, cfg.contract,
        force_delta2_zero=args.classical,
        rebalance_stride=args.rebalance_stride,
        ledger_path=ledger,
    )
    payload = json.loads(result.to_json())
    payload["config_hash"] = config_hash(cfg.raw)
    text = json.dumps(payload, sort_keys=True, indent=2)
    print(text)
    (out / "hedge_sim.json").write_text(text + "\n")
    return 0


def cmd_smile(cfg: ExperimentConfig, args) -> int:
    sm = cfg.smile
    if "strikes" not in sm or "maturities" not in sm or "spot" not in sm:
        raise ConfigError(["smile requires 'spot', 'strikes' and 'maturities' in the config"])
    curves = build_smile(
        cfg.market,
        cfg.contract,
        spot=float(sm["spot"]),
        strikes=[float(x) for x in sm["strikes"]],
        maturities=[float(t) for t in sm["maturities"]],
        cfg=cfg.solver_config(args.refine),
        grid=cfg.grid(args.refine),
        fit_window=tuple(sm.get("fit_window", (0.8, 1.2))),
    )
    out = _out_dir(cfg, args)
    tag = config_hash(cfg.raw)
    summary = {"config_hash": tag, "curves": []}
    for curve in curves:
        months = curve.maturity * 12.0
        name = f"smile_T{months:.3g}m.csv"
        curve.to_csv(out / name, header_lines=[f"config_hash={tag}", f"maturity={curve.maturity}"])
        summary["curves"].append(
            {
                "maturity": curve.maturity,
                "file": name,
                "skew": curve.skew,
                "n_ok": sum(p.vol_status == "OK" for p in curve.points),
            }
        )
    text = json.dumps(summary, sort_keys=True, indent=2)
    print(text)
    (out / "smile_summary.json").write_text(text + "\n")
    return 0


def cmd_bs(args) -> int:
    ctx = QuoteContext(spot=args.spot, rate=args.rate, time_to_expiry=args.tau)
    call = VanillaCall(strike=args.strike, maturity=max(args.tau, 1e-12))
    out = {"spot": args.spot, "strike": args.strike, "tau": args.tau, "rate": args.rate}
    if args.price is not None:
        out["implied_vol"] = bs_implied_vol(ctx, call, args.price)
    else:
        if args.sigma is None:
            raise ConfigError(["bs needs either --sigma (price mode) or --price (implied-vol mode)"])
        out["price"] = bs_price(ctx, call, args.sigma)
        out["delta"] = bs_delta(ctx, call, args.sigma)
    print(json.dumps(out, sort_keys=True))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steparb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="path to the JSON experiment config")
        p.add_argument("--out", default=None, help="output directory (default: config output_dir)")
        p.add_argument("--refine", type=int, default=1, help="grid/time-step refinement multiplier")

    p = sub.add_parser("constants", help="derived constants as JSON")
    add_common(p)
    p = sub.add_parser("solve", help="march the transformed problem, write the surface CSV")
    add_common(p)
    p.add_argument("--classical", action="store_true", help="linear mode (no reaction term)")
    p = sub.add_parser("csls-check", help="condition checks plus stationary-profile comparison")
    add_common(p)
    p.add_argument("--initial", choices=("ramp", "payoff"), default="ramp",
                   help="initial profile for the stationarity march")
    p.add_argument("--stat-tol", type=float, default=1e-8, dest="stat_tol")
    p.add_argument("--t-max", type=float, default=50.0, dest="t_max")
    p = sub.add_parser("hedge-sim", help="Monte Carlo hedge simulation")
    add_common(p)
    p.add_argument("--classical", action="store_true", help="force delta2 = 0")
    p.add_argument("--rebalance-stride", type=int, default=1, dest="rebalance_stride")
    p.add_argument("--ledger", action="store_true", help="also write the per-step ledger CSV")
    p = sub.add_parser("smile", help="per-maturity price and implied-vol curves")
    add_common(p)
    p = sub.add_parser("bs", help="one-shot price/delta or implied-vol query")
    p.add_argument("--spot", type=float, required=True)
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--price", type=float, default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "bs":
            return cmd_bs(args)
        cfg = load_config(args.config)
        handler = {
            "constants": cmd_constants,
            "solve": cmd_solve,
            "csls-check": cmd_csls_check,
            "hedge-sim": cmd_hedge_sim,
            "smile": cmd_smile,
        }[args.command]
        return handler(cfg, args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except StepArbError as exc:
        print(f"numerical failure [{exc.code}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
