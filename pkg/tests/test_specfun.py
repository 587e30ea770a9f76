import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from mimo_isac.specfun import (
    EULER_GAMMA,
    DomainError,
    digamma,
    exp_integral_E1,
    exp_integral_Ei,
    log_gamma,
    scaled_exp_integral_E1,
)

mpmath.mp.dps = 40


def series_e1(x, terms=50):
    # -gamma - ln x - sum (-x)^k / (k k!)
    total = mpmath.mpf(0)
    for k in range(1, terms + 1):
        total += (-mpmath.mpf(x)) ** k / (k * mpmath.factorial(k))
    return float(-mpmath.euler - mpmath.log(x) - total)


def series_ei(x, terms=60):
    total = mpmath.mpf(0)
    for k in range(1, terms + 1):
        total += mpmath.mpf(x) ** k / (k * mpmath.factorial(k))
    return float(mpmath.euler + mpmath.log(x) + total)


class TestE1:
    def test_at_one(self):
        assert exp_integral_E1(1.0) == pytest.approx(series_e1(1.0), abs=1e-12)
        assert exp_integral_E1(1.0) == pytest.approx(0.2193839344, abs=1e-10)

    def test_at_ten(self):
        assert exp_integral_E1(10.0) == pytest.approx(4.15697e-6, rel=1e-5)
        assert exp_integral_E1(10.0) == pytest.approx(float(mpmath.e1(10)), rel=1e-10)

    def test_large_argument_asymptote(self):
        # x e^x E1(x) = 1 - 1/x + 2/x^2 - ..., so 2% short of 1 at x = 50
        scaled = exp_integral_E1(50.0) * 50.0 * math.exp(50.0)
        assert scaled == pytest.approx(1 - 1 / 50 + 2 / 50**2 - 6 / 50**3, abs=1e-5)
        assert exp_integral_E1(200.0) * 200.0 * math.exp(200.0) == pytest.approx(1.0, rel=0.01)

    def test_branches_agree_at_split(self):
        lo, hi = exp_integral_E1(1.0 - 1e-12), exp_integral_E1(1.0 + 1e-12)
        assert abs(lo - hi) < 1e-11

    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
    def test_quadrature_identity(self, x):
        quad, _ = integrate.quad(lambda t: math.exp(-t) / t, x, x + 50, epsabs=1e-14, epsrel=1e-13)
        assert exp_integral_E1(x) == pytest.approx(quad, abs=1e-10)

    def test_scaled_matches_product(self):
        for x in (0.01, 0.7, 3.0, 40.0):
            assert scaled_exp_integral_E1(x) == pytest.approx(math.exp(x) * exp_integral_E1(x), rel=1e-13)

    def test_error_estimate(self):
        res = exp_integral_E1(2.0, with_error=True)
        assert abs(res.value - float(mpmath.e1(2))) <= max(res.est_abs_err, 1e-15)

    @pytest.mark.parametrize("x", [0.0, -1.0, float("nan")])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            exp_integral_E1(x)


class TestEi:
    def test_values(self):
        assert exp_integral_Ei(1.0) == pytest.approx(1.8951178163, abs=1e-10)
        assert exp_integral_Ei(2.0) == pytest.approx(series_ei(2.0), abs=1e-10)
        assert exp_integral_Ei(2.0) == pytest.approx(4.9542343561, abs=1e-10)

    def test_small_argument_limit(self):
        x = 1e-9
        assert exp_integral_Ei(x) - math.log(x) == pytest.approx(EULER_GAMMA, abs=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            exp_integral_Ei(0.0)


class TestDigamma:
    def test_values(self):
        assert digamma(1.0) == pytest.approx(-0.5772156649, abs=1e-10)
        assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-14)
        assert digamma(2.0) == pytest.approx(1 - EULER_GAMMA, abs=1e-13)
        assert digamma(5.0) == pytest.approx(-EULER_GAMMA + 1 + 1 / 2 + 1 / 3 + 1 / 4, abs=1e-13)

    @pytest.mark.parametrize("x", [0.5, 1.0, 3.7, 10.0])
    def test_recurrence(self, x):
        assert digamma(x + 1) - digamma(x) == pytest.approx(1 / x, abs=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            digamma(-2.0)


class TestLogGamma:
    def test_values(self):
        assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-14)
        assert log_gamma(5.0) == pytest.approx(math.log(24), abs=1e-13)
        assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-13)

    def test_half_integer_by_quadrature(self):
        gamma_half, _ = integrate.quad(lambda t: 2 * math.exp(-t * t), 0, math.inf, epsabs=1e-14)
        assert math.exp(log_gamma(0.5)) == pytest.approx(gamma_half, rel=1e-10)

    @pytest.mark.parametrize("x", [0.5, 1.0, 2.5, 9.0])
    def test_recurrence(self, x):
        assert math.exp(log_gamma(x + 1)) == pytest.approx(x * math.exp(log_gamma(x)), rel=1e-10)

    def test_domain(self):
        with pytest.raises(DomainError):
            log_gamma(0.0)


positive = st.floats(min_value=1e-5, max_value=300.0, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(positive)
def test_e1_matches_mpmath(x):
    assert exp_integral_E1(x) == pytest.approx(float(mpmath.e1(x)), rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-5, max_value=700.0))
def test_ei_matches_mpmath(x):
    assert exp_integral_Ei(x) == pytest.approx(float(mpmath.ei(x)), rel=1e-10, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e4))
def test_digamma_and_log_gamma_match_mpmath(x):
    assert digamma(x) == pytest.approx(float(mpmath.digamma(x)), rel=1e-10, abs=1e-10)
    assert log_gamma(x) == pytest.approx(float(mpmath.loggamma(x)), rel=1e-10, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(positive)
def test_e1_decreasing(x):
    assert exp_integral_E1(x * 1.01) < exp_integral_E1(x)
