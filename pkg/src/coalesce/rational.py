"""Parsing and formatting of exact rationals.

All probabilities in this package are `fractions.Fraction` values, which are
kept in lowest terms with a positive denominator by construction.
"""
from __future__ import annotations

from fractions import Fraction

from .errors import MalformedRational


def parse_rational(text: str) -> Fraction:
    """Parse "p/q" or a bare integer into a Fraction.

    Only integer numerators/denominators are accepted; floats and exponents
    are rejected so that file contents stay exact.
    """
    s = text.strip()
    if not s:
        raise MalformedRational("empty rational")
    parts = s.split("/")
    try:
        if len(parts) == 1:
            return Fraction(int(parts[0]))
        if len(parts) == 2:
            num, den = int(parts[0]), int(parts[1])
            if den == 0:
                raise MalformedRational(f"zero denominator in {text!r}")
            return Fraction(num, den)
    except ValueError:
        pass
    raise MalformedRational(f"not a rational: {text!r}")


def format_rational(value: Fraction) -> str:
    """Render a Fraction as "p/q", or "p" when the denominator is one."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"
