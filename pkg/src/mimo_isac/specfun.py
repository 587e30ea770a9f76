"""Real-argument special functions used by the ergodic-rate expressions.

Exponential integrals, digamma and log-gamma for positive arguments, written
out directly (series, continued fractions, asymptotic expansions) so the rate
code has no hidden dependency on a particular scipy build.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EULER_GAMMA = 0.57721566490153286060651209008240243

_EPS = 2.0**-53
_MAX_ITER = 500

# Bernoulli numbers B_2k for k = 1..8
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)


class DomainError(ValueError):
    """Argument outside the real domain a function is defined on here."""


@dataclass(frozen=True)
class SpecFunResult:
    value: float
    est_abs_err: float


def _check_positive(x: float, name: str) -> float:
    x = float(x)
    if not x > 0.0 or math.isnan(x):
        raise DomainError(f"{name} requires x > 0, got {x!r}")
    return x


def _e1_series(x: float) -> tuple[float, float]:
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    term = 1.0
    total = 0.0
    for k in range(1, _MAX_ITER):
        term *= -x / k
        contrib = term / k
        total += contrib
        if abs(contrib) < _EPS * abs(total):
            break
    value = -EULER_GAMMA - math.log(x) - total
    return value, 4.0 * _EPS * (EULER_GAMMA + abs(math.log(x)) + abs(total))


def _scaled_e1_cf(x: float) -> tuple[float, float]:
    """e^x E1(x) by modified Lentz on the continued fraction 1/(x+1-1/(x+3-4/(x+5-...)))."""
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:  # pragma: no cover - converges in < 40 steps for x > 1
        raise ArithmeticError(f"continued fraction for E1({x}) did not converge")
    return h, 8.0 * _EPS * h


def exp_integral_E1(x: float, *, with_error: bool = False):
    """E1(x) = int_x^inf e^-t / t dt for x > 0."""
    x = _check_positive(x, "E1")
    if x <= 1.0:
        value, err = _e1_series(x)
    else:
        scaled, serr = _scaled_e1_cf(x)
        factor = math.exp(-x)
        value, err = scaled * factor, serr * factor
    return SpecFunResult(value, err) if with_error else value


def scaled_exp_integral_E1(x: float) -> float:
    """e^x E1(x), finite for every x > 0 (no overflow for large x)."""
    x = _check_positive(x, "scaled E1")
    if x <= 1.0:
        return math.exp(x) * _e1_series(x)[0]
    return _scaled_e1_cf(x)[0]


def exp_integral_Ei(x: float, *, with_error: bool = False):
    """Principal-value Ei(x) for x > 0 via gamma + ln x + sum x^k / (k k!).

    All series terms are positive, so there is no cancellation; the error is
    a few ulps relative to the result.
    """
    x = _check_positive(x, "Ei")
    if x > 709.0:
        raise OverflowError(f"Ei({x}) overflows double precision")
    term = 1.0
    total = 0.0
    for k in range(1, 4 * _MAX_ITER):
        term *= x / k
        contrib = term / k
        total += contrib
        if contrib < _EPS * total and k > x:
            break
    value = EULER_GAMMA + math.log(x) + total
    err = 4.0 * _EPS * (EULER_GAMMA + abs(math.log(x)) + total)
    return SpecFunResult(value, err) if with_error else value


def digamma(x: float, *, with_error: bool = False):
    """psi(x) for x > 0: upward recurrence to x >= 8, then the asymptotic series."""
    x = _check_positive(x, "digamma")
    shift = 0.0
    while x < 8.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = 1.0
    for k, b2k in enumerate(_BERNOULLI[:7], start=1):
        power *= inv2
        series += b2k / (2 * k) * power
    value = shift + math.log(x) - 0.5 / x - series
    err = 4.0 * _EPS * (abs(shift) + abs(math.log(x))) + abs(_BERNOULLI[7] / 16.0) * power * inv2
    return SpecFunResult(value, err) if with_error else value


def log_gamma(x: float, *, with_error: bool = False):
    """ln Gamma(x) for x > 0: shift to x >= 15, then Stirling's series."""
    x = _check_positive(x, "log_gamma")
    shift = 0.0
    while x < 15.0:
        shift -= math.log(x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    power = inv
    for k, b2k in enumerate(_BERNOULLI[:7], start=1):
        series += b2k / (2 * k * (2 * k - 1)) * power
        power *= inv2
    value = shift + (x - 0.5) * math.log(x) - x + 0.5 * math.log(2.0 * math.pi) + series
    err = 8.0 * _EPS * (abs(shift) + abs(x * math.log(x)))
    return SpecFunResult(value, err) if with_error else value
