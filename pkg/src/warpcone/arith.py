"""Exact rational helpers: circle arithmetic, modular inverses, formatting.

Everything here works on ``fractions.Fraction`` or plain ints; floats are
deliberately never produced or accepted.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import StructuralError, ValidationError

ZERO = Fraction(0)
ONE = Fraction(1)


def mod1(x: Fraction) -> Fraction:
    """Reduce a rational to the half-open interval [0, 1)."""
    return x - (x.numerator // x.denominator)


def arc(a: Fraction, b: Fraction) -> Fraction:
    """Arc distance on the unit circle between rationals taken mod 1."""
    d = mod1(a - b)
    return d if 2 * d <= 1 else ONE - d


def as_fraction(value) -> Fraction:
    """Parse ints, Fractions, or 'p/q' strings into an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as e:
            raise StructuralError(f"not a rational: {value!r}") from e
    raise StructuralError(f"not a rational: {value!r} (type {type(value).__name__})")


def frac_str(x: Fraction | int) -> str:
    """Canonical decimal-free rendering, '3' or '-2/5'."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def circle_point(value) -> Fraction:
    """Validate a coordinate on the unit circle; must lie in [0, 1)."""
    x = as_fraction(value)
    if not (0 <= x < 1):
        raise ValidationError(f"circle coordinate {frac_str(x)} outside [0, 1)")
    return x


def modinv(a: int, n: int) -> int:
    """Inverse of a modulo n; raises if gcd(a, n) != 1."""
    g = math.gcd(a % n, n)
    if g != 1:
        raise ValidationError(f"{a} is not invertible modulo {n}")
    return pow(a % n, -1, n)


def largest_power_leq(base: int, bound: int) -> int:
    """Largest base**e <= bound, found by exact integer search (e >= 0)."""
    if base < 2 or bound < 1:
        raise ValidationError("largest_power_leq needs base >= 2 and bound >= 1")
    power = 1
    while power * base <= bound:
        power *= base
    return power


def isqrt_floor(n: int) -> int:
    return math.isqrt(n)
