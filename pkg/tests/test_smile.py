import numpy as np
import pytest

from steparb import (
    EmptyCurveError,
    Grid1D,
    QuoteContext,
    SolverConfig,
    VanillaCall,
    bs_price,
    build_smile,
    implied_curve,
    price_curve,
)
from steparb.smile import SmileCurve, SmilePoint


def synthetic_points(spot, strikes, maturity, params, sigma):
    pts = []
    for x in strikes:
        price = bs_price(QuoteContext(spot, params.r, maturity), VanillaCall(x, maturity), sigma)
        pts.append(SmilePoint(strike=x, price_classical=price, price_arbitrage=price))
    return pts


def test_flat_vol_round_trip(ref_market):
    spot = 20.0
    strikes = [16.0, 18.0, 20.0, 22.0, 24.0]
    pts = synthetic_points(spot, strikes, 0.5, ref_market, sigma=0.3)
    curves = implied_curve({0.5: pts}, spot, ref_market)
    assert len(curves) == 1
    for p in curves[0].points:
        assert p.vol_status == "OK"
        assert p.implied_vol == pytest.approx(0.3, abs=1e-7)
    assert curves[0].skew == pytest.approx(0.0, abs=1e-6)


def test_sub_bound_price_flagged_curve_continues(ref_market):
    spot = 20.0
    pts = synthetic_points(spot, [18.0, 20.0, 22.0], 0.5, ref_market, sigma=0.3)
    pts[0].price_arbitrage = 0.5  # below intrinsic 2.0: outside the bounds
    curves = implied_curve({0.5: pts}, spot, ref_market)
    statuses = [p.vol_status for p in curves[0].points]
    assert statuses[0] == "NO_SOLUTION"
    assert statuses[1] == statuses[2] == "OK"
    assert curves[0].points[0].implied_vol is None


def test_status_and_vol_consistency(ref_market):
    pts = synthetic_points(20.0, [18.0, 22.0], 0.5, ref_market, sigma=0.25)
    pts[0].price_arbitrage = float("nan")
    curves = implied_curve({0.5: pts}, 20.0, ref_market)
    for p in curves[0].points:
        assert (p.implied_vol is not None) == (p.vol_status == "OK")


def test_empty_curve_raises(ref_market):
    pts = synthetic_points(20.0, [18.0, 22.0], 0.5, ref_market, sigma=0.25)
    for p in pts:
        p.price_arbitrage = -1.0
    with pytest.raises(EmptyCurveError):
        implied_curve({0.5: pts}, 20.0, ref_market)


def test_strikes_must_increase(ref_market, ref_contract):
    cfg = SolverConfig(dt=1e-3, picard_tol=1e-8)
    with pytest.raises(ValueError):
        price_curve([20.0, 18.0], 20.0, ref_market, ref_contract, cfg)
    with pytest.raises(ValueError):
        SmileCurve(maturity=0.5, spot=20.0, points=synthetic_points(20.0, [22.0, 18.0], 0.5, ref_market, 0.3))


def test_prices_below_transition_are_negligible(ref_market, ref_contract, ref_solver_config, ref_grid):
    # spot well below the step: the strategy's value is tiny, the classical is not
    pts = price_curve(
        [18.0, 20.0, 22.0], 20.0, ref_market, ref_contract, ref_solver_config, grid=ref_grid
    )
    for p in pts:
        half_height = 0.5 * (100.0 - p.strike) / 2.0
        assert p.price_arbitrage < 0.05 * 2 * half_height
        assert p.price_classical > 0.0
    assert pts[0].price_classical == pytest.approx(2.0, abs=0.05)  # near intrinsic at sigma 0.02


def test_degenerate_strike_near_upper_corridor(ref_market, ref_contract, ref_grid):
    cfg = SolverConfig(dt=5e-4, picard_tol=1e-10)
    pts = price_curve([99.0], 20.0, ref_market, ref_contract, cfg, grid=ref_grid)
    assert abs(pts[0].price_arbitrage) < 0.1  # step height A = 0.5: everything collapses


def test_linear_control_run_matches_classical(vol_market, ref_contract):
    grid = Grid1D.uniform(ref_contract.k_minus, ref_contract.k_plus, 801)
    cfg = SolverConfig(dt=5e-4, picard_tol=1e-10, snapshot_stride=100)
    pts = price_curve(
        [15.0, 20.0, 25.0], 22.0, vol_market, ref_contract, cfg, grid=grid, linear=True
    )
    for p in pts:
        assert p.price_arbitrage == pytest.approx(p.price_classical, rel=1e-2)


def test_curve_determinism(ref_market, ref_contract, ref_grid):
    cfg = SolverConfig(dt=1e-3, picard_tol=1e-9)
    a = price_curve([18.0, 22.0], 20.0, ref_market, ref_contract, cfg, grid=ref_grid)
    b = price_curve([18.0, 22.0], 20.0, ref_market, ref_contract, cfg, grid=ref_grid)
    assert [(p.strike, p.price_arbitrage, p.price_classical) for p in a] == [
        (p.strike, p.price_arbitrage, p.price_classical) for p in b
    ]


def test_skew_steepens_as_maturity_shrinks(ref_market, ref_contract, ref_grid):
    # live zone: spot above the per-strike step for the low strikes
    cfg = SolverConfig(dt=5e-4, picard_tol=1e-9, snapshot_stride=10**9)
    curves = build_smile(
        ref_market,
        ref_contract,
        spot=90.0,
        strikes=list(np.arange(76.0, 106.0, 6.0)),
        maturities=[1.0 / 12.0, 3.0 / 12.0],
        cfg=cfg,
        grid=ref_grid,
    )
    by_t = {round(c.maturity * 12): c for c in curves}
    assert by_t[1].skew is not None and by_t[3].skew is not None
    assert abs(by_t[1].skew) > abs(by_t[3].skew)


def test_curve_csv(tmp_path, ref_market):
    pts = synthetic_points(20.0, [18.0, 22.0], 0.5, ref_market, sigma=0.25)
    curve = implied_curve({0.5: pts}, 20.0, ref_market)[0]
    out = tmp_path / "curve.csv"
    curve.to_csv(out, header_lines=["config_hash=deadbeef"])
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "# config_hash=deadbeef"
    assert lines[1] == "strike,price_classical,price_arbitrage,implied_vol,vol_status"
    assert len(lines) == 4
