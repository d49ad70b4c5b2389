"""Exact-arithmetic helpers for rigorous criterion decisions.

Constant coefficients and lags are binary floats, hence exact rationals.
Criterion inequalities are evaluated in :class:`fractions.Fraction`
arithmetic whenever every ingredient is exact, so strict comparisons at
region boundaries are decided without rounding noise.  The moment a
sampled (non-exact) value or an irrational square root enters a formula,
the computation degrades to float transparently (``Fraction op float``
yields ``float`` in Python).
"""

from __future__ import annotations

import math
from fractions import Fraction

__all__ = ["ONE_OVER_E_LOWER", "exact_sqrt", "is_exact", "as_float"]

# Certified rational lower bound of 1/e: one ulp below the nearest double,
# so "x <= ONE_OVER_E_LOWER" implies "x <= 1/e" for exact rational x.
ONE_OVER_E_LOWER = Fraction(math.nextafter(1.0 / math.e, 0.0))


def is_exact(value):
    """True for values that carry exact (rational) information."""
    return isinstance(value, (Fraction, int))


def exact_sqrt(value):
    """Square root preserving exactness when the input is a perfect square.

    Returns a :class:`Fraction` when ``value`` is a Fraction whose numerator
    and denominator are both perfect squares; otherwise a float.
    """
    if isinstance(value, Fraction):
        if value < 0:
            raise ValueError(f"square root of negative value {value}")
        num, den = value.numerator, value.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        if rn * rn == num and rd * rd == den:
            return Fraction(rn, rd)
        return math.sqrt(float(value))
    if value < 0:
        raise ValueError(f"square root of negative value {value}")
    return math.sqrt(value)


def as_float(value):
    """Convert an exact or float value to float (None passes through)."""
    if value is None:
        return None
    return float(value)
