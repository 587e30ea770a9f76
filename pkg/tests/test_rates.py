import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimo_isac.allocation import Fdsac, fdsac_allocate, sensing_waterfill
from mimo_isac.model import SystemConfig, build_correlation_from_eigenvalues
from mimo_isac.montecarlo import sweep
from mimo_isac.rates import (
    RateTuple,
    asymptote_ecr,
    asymptote_fdsac_ecr,
    asymptote_fdsac_sr,
    asymptote_sr,
    asymptote_sr_offset,
    comm_sum_rate,
    ecr_closed_form,
    ecr_closed_form_printed,
    fdsac_rates,
    sensing_rate,
    sensing_rate_det,
)
from mimo_isac.specfun import DomainError

from conftest import base_cfg

unit = SystemConfig(1, 1, 1, 1, 1.0)
unit_corr = build_correlation_from_eigenvalues([1.0])


def quad_oracle(s, kprime):
    """E log2(1 + s X), X ~ Gamma(K'+1, 1), by adaptive quadrature."""
    mpmath.mp.dps = 30
    f = lambda x: mpmath.log(1 + s * x) * x**kprime * mpmath.exp(-x) / mpmath.factorial(kprime)
    return float(mpmath.quad(f, [0, 1, 10, 100, mpmath.inf]) / mpmath.log(2))


class TestSensingRate:
    def test_zero_power(self, base_corr):
        assert sensing_rate(np.zeros(4), base_corr, base_cfg()) == 0.0

    def test_unit(self):
        assert sensing_rate([1.0], unit_corr, unit) == pytest.approx(1.0)

    def test_det_form_agrees(self, base_corr, rng):
        cfg = base_cfg()
        for _ in range(20):
            x = rng.uniform(0, 5, size=4)
            W = base_corr.U * np.sqrt(x)[None, :]
            assert sensing_rate_det(W, base_corr, cfg) == pytest.approx(sensing_rate(x, base_corr, cfg), abs=1e-10)

    def test_broadcasts(self, base_corr):
        x = np.ones((3, 2, 4))
        assert sensing_rate(x, base_corr, base_cfg()).shape == (3, 2)


class TestCommRate:
    @pytest.mark.parametrize("powers, rho, expected", [([1], [1], 1.0), ([3], [1 / 3], 1.0), ([1, 2], [1, 0.5], 2.0)])
    def test_examples(self, powers, rho, expected):
        assert comm_sum_rate(powers, rho) == pytest.approx(expected)

    def test_small_power_accuracy(self):
        assert comm_sum_rate([1e-12], [1.0]) == pytest.approx(1e-12 / math.log(2), rel=1e-9)


class TestClosedForm:
    def test_exponential_identity(self):
        expected = float(mpmath.e * mpmath.e1(1) / mpmath.log(2))
        assert ecr_closed_form([1.0], 0) == pytest.approx(expected, abs=1e-12)
        assert ecr_closed_form([1.0], 0) == pytest.approx(0.86034, abs=1e-5)

    def test_vanishing_power(self):
        assert ecr_closed_form([1e-12], 0) == pytest.approx(1e-12 / math.log(2), rel=1e-6)
        assert ecr_closed_form([0.0, 0.0], 2) == 0.0

    def test_gamma2_monte_carlo(self):
        x = np.random.default_rng(7).gamma(2.0, size=10_000_000)
        v = np.log2(1 + 2 * x)
        se = v.std(ddof=1) / math.sqrt(v.size)
        assert abs(ecr_closed_form([2.0], 1) - v.mean()) <= 3 * se

    @pytest.mark.parametrize("kprime", [0, 1, 2, 4])
    @pytest.mark.parametrize("s", [0.1, 1.0, 10.0])
    def test_monte_carlo_grid(self, s, kprime):
        x = np.random.default_rng(100 * kprime + int(10 * s)).gamma(kprime + 1.0, size=1_000_000)
        v = np.log2(1 + s * x)
        se = v.std(ddof=1) / math.sqrt(v.size)
        assert abs(ecr_closed_form([s], kprime) - v.mean()) <= 3 * se

    @pytest.mark.parametrize("kprime", [0, 1, 3, 6])
    @pytest.mark.parametrize("s", [1e-4, 1e-2, 0.3, 1.0, 7.0, 1e3, 1e6])
    def test_quadrature_oracle(self, s, kprime):
        # small s exercises the quadrature branch, large s the recurrence
        assert ecr_closed_form([s], kprime) == pytest.approx(quad_oracle(s, kprime), rel=1e-10, abs=1e-14)

    def test_sum_over_streams(self):
        assert ecr_closed_form([1.0, 2.0], 1) == pytest.approx(ecr_closed_form([1.0], 1) + ecr_closed_form([2.0], 1))

    def test_domain(self):
        with pytest.raises(DomainError):
            ecr_closed_form([-1.0], 0)
        with pytest.raises(DomainError):
            ecr_closed_form([1.0], -1)

    def test_printed_convention(self):
        # typeset bracket term goes negative; the corrected one matches
        assert ecr_closed_form_printed([1.0], 0, "printed") < 0
        for s in (0.5, 1.0, 4.0, 20.0):
            for k in (0, 1, 3):
                assert ecr_closed_form_printed([s], k) == pytest.approx(ecr_closed_form([s], k), rel=1e-9)
        with pytest.raises(ValueError):
            ecr_closed_form_printed([1.0], 0, "other")


class TestAsymptotes:
    def test_sr_value(self, base_corr):
        cfg = base_cfg().with_power(2.0**10)
        assert asymptote_sr_offset(base_corr, cfg) == pytest.approx(-0.66503, abs=1e-4)
        assert asymptote_sr(base_corr, cfg) == pytest.approx(6.2233, abs=1e-3)

    def test_sr_slope(self, base_corr):
        cfg = base_cfg()
        assert asymptote_sr(base_corr, cfg, 2 * cfg.p) - asymptote_sr(base_corr, cfg) == pytest.approx(2 / 3, abs=1e-12)

    def test_sr_unit(self):
        assert asymptote_sr(unit_corr, unit, 8.0) == pytest.approx(3.0)

    def test_ecr_value(self):
        assert asymptote_ecr(base_cfg().with_power(2.0**10)) == pytest.approx(28.669, abs=1e-3)
        assert asymptote_ecr(unit) == pytest.approx(-0.83275, abs=1e-5)

    def test_ecr_gap_at_high_snr(self, base_corr):
        cfg = base_cfg(40)
        exact = ecr_closed_form(sensing_waterfill(base_corr, cfg).powers, cfg.Kprime)
        assert abs(asymptote_ecr(cfg) - exact) <= 0.05

    def test_sr_gap_at_high_snr(self, base_corr):
        cfg = base_cfg(40)
        exact = sensing_rate(sensing_waterfill(base_corr, cfg).powers, base_corr, cfg)
        assert abs(asymptote_sr(base_corr, cfg) - exact) <= 0.05


class TestFdsacRates:
    def test_edges(self, base_corr, rng):
        cfg = base_cfg()
        rho = rng.exponential(size=4)
        c0, s0 = fdsac_allocate(rho, base_corr, cfg, 0.0, 0.5)
        assert fdsac_rates(c0, s0, rho, base_corr, cfg, 0.0).cr == 0.0
        c1, s1 = fdsac_allocate(rho, base_corr, cfg, 1.0, 0.5)
        assert fdsac_rates(c1, s1, rho, base_corr, cfg, 1.0).sr == 0.0

    def test_single_stream(self):
        cfg = SystemConfig(1, 1, 1, 1, 2.0)
        c, s = fdsac_allocate([1.0], unit_corr, cfg, 0.5, 0.5)
        rt = fdsac_rates(c, s, np.array([1.0]), unit_corr, cfg, 0.5)
        assert rt.cr == pytest.approx(0.5 * math.log2(3))
        assert rt.sr == pytest.approx(0.5 * math.log2(3))
        assert rt.design == "FDSAC(0.5,0.5)"

    def test_slopes(self, base_corr):
        design = Fdsac(0.5, 0.5)
        res = sweep(base_cfg(), base_corr, [design], [35.0, 40.0], 20_000, 3, metrics=("ecr", "sr"))
        span = math.log2(10 ** 0.5)
        ecr_slope = (res.ecr[(design.label, 40.0)].mean - res.ecr[(design.label, 35.0)].mean) / span
        sr_slope = (res.sr[(design.label, 40.0)].mean - res.sr[(design.label, 35.0)].mean) / span
        assert ecr_slope == pytest.approx(0.5 * 4, rel=0.05)
        assert sr_slope == pytest.approx(0.5 * 5 * 4 / 30, rel=0.05)

    def test_asymptotes_track(self, base_corr):
        cfg = base_cfg(40)
        res = sweep(cfg, base_corr, [Fdsac(0.5, 0.5)], [40.0], 20_000, 3, metrics=("ecr", "sr"))
        assert res.ecr[("FDSAC(0.5,0.5)", 40.0)].mean == pytest.approx(asymptote_fdsac_ecr(cfg, 0.5, 0.5), abs=0.05)
        assert res.sr[("FDSAC(0.5,0.5)", 40.0)].mean == pytest.approx(asymptote_fdsac_sr(base_corr, cfg, 0.5, 0.5), abs=0.05)


def test_rate_tuple_rejects_negative():
    with pytest.raises(ValueError):
        RateTuple(-1.0, 0.0)


@settings(max_examples=60, deadline=None)
@given(s=st.floats(min_value=1e-3, max_value=1e4), kprime=st.integers(0, 6))
def test_closed_form_bounds(s, kprime):
    # Jensen: E log(1 + sX) <= log(1 + s E X); positive and increasing in s
    v = ecr_closed_form([s], kprime)
    assert 0 < v <= math.log2(1 + s * (kprime + 1)) + 1e-12
    assert ecr_closed_form([s * 1.1], kprime) > v
