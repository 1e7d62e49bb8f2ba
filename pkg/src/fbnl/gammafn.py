"""Shared Gamma-function implementation.

Every special-function constant in the package (kernel constants, Beta
oracles, Gauss-Jacobi normalizations) goes through this one implementation
so that no two call sites can disagree about Gamma values.

The evaluator is a Lanczos approximation (g = 7, 9 terms) with the
reflection formula for arguments below 1/2.  Observed accuracy is about
1e-14 relative over the range used here (|x| <= 30, x not within 1e-8 of
a non-positive integer), which comfortably covers the documented 12-digit
requirement for the kernel constants.
"""

from __future__ import annotations

import math

__all__ = ["gamma", "lgamma", "beta", "binom"]

# Lanczos coefficients for g = 7, n = 9 (double precision standard set).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _lanczos_sum(x: float) -> float:
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (x + i)
    return acc


def gamma(x: float) -> float:
    """Gamma(x) for real non-integer x (and positive integers).

    Raises ValueError at the poles x = 0, -1, -2, ...
    """
    if x == math.floor(x) and x <= 0.0:
        raise ValueError(f"gamma pole at x={x}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * _lanczos_sum(z)


def lgamma(x: float) -> float:
    """log |Gamma(x)|, via the same Lanczos kernel."""
    if x == math.floor(x) and x <= 0.0:
        raise ValueError(f"gamma pole at x={x}")
    if x < 0.5:
        return math.log(math.pi / abs(math.sin(math.pi * x))) - lgamma(1.0 - x)
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def beta(a: float, b: float) -> float:
    """Euler Beta function B(a, b) for a, b > 0."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"beta requires positive arguments, got ({a}, {b})")
    return math.exp(lgamma(a) + lgamma(b) - lgamma(a + b))


def binom(a: float, k: int) -> float:
    """Generalized binomial coefficient C(a, k) for real a, integer k >= 0."""
    if k < 0:
        raise ValueError("binom order must be nonnegative")
    out = 1.0
    for j in range(k):
        out *= (a - j) / (j + 1)
    return out
