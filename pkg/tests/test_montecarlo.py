import math

import numpy as np
import pytest
from scipy.stats import qmc

from mimo_isac.allocation import CommCentric, Fdsac, Pareto, SensingCentric, sensing_waterfill
from mimo_isac.model import db_to_linear, sample_rho
from mimo_isac.montecarlo import (
    McEstimate,
    design_rates,
    diversity_window,
    estimate_avg_sr,
    estimate_ecr,
    estimate_op,
    fit_diversity_order,
    fit_high_snr_slope,
    outage_rate,
    sweep,
)
from mimo_isac.rates import asymptote_sr, ecr_closed_form, sensing_rate

from conftest import base_cfg

ALL = [SensingCentric(), CommCentric(), Pareto(0.5), Fdsac(0.5, 0.5)]


def test_sc_ecr_matches_closed_form(base_corr):
    cfg = base_cfg(10)
    est = estimate_ecr(SensingCentric(), cfg, base_corr, 200_000, 1)
    closed = ecr_closed_form(sensing_waterfill(base_corr, cfg).powers, cfg.Kprime)
    assert abs(est.mean - closed) <= 3 * est.std_err


@pytest.mark.parametrize("design", ALL, ids=lambda d: d.label)
def test_vanishing_power(base_corr, design):
    cfg = base_cfg(-40)
    est = estimate_ecr(design, cfg, base_corr, 1000, 2)
    assert est.mean < 1e-3
    assert estimate_avg_sr(design, cfg, base_corr, 1000, 2).mean < 1e-3


def test_sc_sr_is_deterministic(base_corr):
    cfg = base_cfg(10)
    est = estimate_avg_sr(SensingCentric(), cfg, base_corr, 500, 3)
    assert est.mean == pytest.approx(sensing_rate(sensing_waterfill(base_corr, cfg).powers, base_corr, cfg), abs=1e-12)
    assert est.std_err == 0.0


def test_cc_sr_near_asymptote(base_corr):
    cfg = base_cfg(40)
    est = estimate_avg_sr(CommCentric(), cfg, base_corr, 5000, 3)
    assert abs(est.mean - asymptote_sr(base_corr, cfg)) <= 0.3


def test_op_edges(base_corr):
    cfg = base_cfg(10)
    zero = estimate_op(SensingCentric(), cfg, base_corr, 0.0, 1000, 4)
    assert zero.mean == 0.0 and zero.zero_events and zero.upper_bound == pytest.approx(3 / 1000)
    one = estimate_op(CommCentric(), cfg, base_corr, 1e6, 1000, 4)
    assert one.mean == 1.0 and one.events == 1000


def test_sc_op_matches_quasi_monte_carlo(base_corr):
    # independent oracle: 4-D Sobol integration of Pr(sum log2(1 + s rho) < 2), rho iid Exp(1)
    cfg = base_cfg(10)
    s = sensing_waterfill(base_corr, cfg).powers
    u = qmc.Sobol(4, scramble=True, seed=5).random_base2(20)
    rho = -np.log1p(-u)
    oracle = np.mean(np.sum(np.log2(1 + s * rho), axis=1) < 2.0)
    est = estimate_op(SensingCentric(), cfg, base_corr, 2.0, 1_000_000, 5)
    assert abs(est.mean - oracle) <= 3 * est.std_err + 2e-4


def test_refuses_few_trials(base_corr):
    with pytest.raises(ValueError):
        estimate_ecr(SensingCentric(), base_cfg(), base_corr, 99, 0)
    with pytest.raises(ValueError):
        estimate_op(SensingCentric(), base_cfg(), base_corr, -1.0, 1000, 0)


def test_thread_invariance(base_corr):
    kw = dict(metrics=("ecr", "sr", "op"), R0=2.0)
    a = sweep(base_cfg(), base_corr, ALL, [0, 10], 12_000, 9, threads=1, **kw)
    b = sweep(base_cfg(), base_corr, ALL, [0, 10], 12_000, 9, threads=4, **kw)
    for name in ("ecr", "sr", "op"):
        assert getattr(a, name) == getattr(b, name)


def test_sweep_matches_single_estimators(base_corr):
    res = sweep(base_cfg(), base_corr, [CommCentric()], [10.0], 3000, 8, R0=2.0)
    cfg = base_cfg(10)
    assert res.ecr[("CC", 10.0)].mean == estimate_ecr(CommCentric(), cfg, base_corr, 3000, 8).mean
    assert res.op[("CC", 10.0)].mean == estimate_op(CommCentric(), cfg, base_corr, 2.0, 3000, 8).mean


def test_std_err_scaling(base_corr):
    cfg = base_cfg(10)
    ratios = []
    for seed in range(20):
        a = estimate_ecr(CommCentric(), cfg, base_corr, 1000, seed).std_err
        b = estimate_ecr(CommCentric(), cfg, base_corr, 2000, 1000 + seed).std_err
        ratios.append(a / b)
    assert np.mean(ratios) == pytest.approx(math.sqrt(2), rel=0.1)


def test_op_monotone_in_snr(base_corr):
    grid = [0, 4, 8, 12, 16]
    res = sweep(base_cfg(), base_corr, ALL, grid, 20_000, 10, metrics=("op",), R0=2.0)
    for d in ALL:
        ests = [res.op[(d.label, db)] for db in grid]
        for lo, hi in zip(ests, ests[1:]):
            assert hi.mean <= lo.mean + 2 * math.hypot(lo.std_err, hi.std_err)


def test_outage_screen_is_exact(base_corr):
    for db in (5, 10, 15):
        cfg = base_cfg(db)
        rho = sample_rho(cfg, base_corr.U, 4096, db)
        for alpha in (0.3, 0.5, 0.8):
            for R0 in (1.0, 2.0, 5.0):
                fast = outage_rate(Pareto(alpha), rho, base_corr, cfg, R0) < R0
                full = design_rates(Pareto(alpha), rho, base_corr, cfg)[1] < R0
                assert np.array_equal(fast, full)


def test_pareto_op_between_sc_and_cc(base_corr):
    res = sweep(base_cfg(), base_corr, ALL[:3], [6, 10], 20_000, 12, metrics=("op",), R0=2.0)
    for db in (6, 10):
        assert res.op[("CC", db)].mean <= res.op[("Pareto(0.5)", db)].mean <= res.op[("SC", db)].mean


class TestFits:
    def test_power_law(self):
        pts = [(db_to_linear(db), db_to_linear(db) ** -4) for db in (10, 20, 30)]
        assert fit_diversity_order(pts).slope == pytest.approx(4.0, abs=1e-9)

    def test_log_corrected_power_law(self):
        # -d log OP / d log p = 2 - 3 / ln p, so the fit sits below 2 and climbs toward it
        def fit(lo, hi):
            ps = [db_to_linear(db) for db in np.arange(lo, hi + 1, 2.0)]
            return fit_diversity_order([(p, 5 * p**-2 * math.log(p) ** 3) for p in ps]).slope

        low, high = fit(20, 40), fit(60, 80)
        assert 1.3 < low < 2.0
        assert low < high < 2.0

    def test_zero_outage_rejected(self):
        with pytest.raises(ValueError, match="trial count"):
            fit_diversity_order([(10, 1e-2), (100, 1e-4), (1000, 0.0)])

    def test_linear_rate(self):
        pts = [(db_to_linear(db), 4 * math.log2(db_to_linear(db)) + 7) for db in (30, 35, 40)]
        f = fit_high_snr_slope(pts)
        assert f.slope == pytest.approx(4.0, abs=1e-12) and f.intercept == pytest.approx(7.0, abs=1e-9)
        assert f.r2 == pytest.approx(1.0)

    def test_high_snr_guard(self):
        with pytest.raises(ValueError):
            fit_high_snr_slope([(1, 0), (10, 1), (100, 2)])
        with pytest.raises(ValueError):
            fit_high_snr_slope([(1e3, 0), (1e4, 1)], None)

    def test_window(self):
        def est(q, n):
            return McEstimate(q, 0.0, 10**8, 0, events=n)

        pts = [(8, est(0.05, 10**6)), (10, est(1e-2, 10**5)), (14, est(1e-3, 10**4)), (18, est(1e-5, 1000)), (22, est(2e-7, 20)), (24, est(1e-7, 5))]
        window = diversity_window(pts)
        assert [round(10 * math.log10(p)) for p, _ in window] == [10, 14, 18]
