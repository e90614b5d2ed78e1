"""Exact rational plumbing shared by every module.

All cut values, LP entries and edge weights are `fractions.Fraction`.
Floats entering the system (Euclidean distances, CLI eta values) are
promoted by exact dyadic conversion, never by `limit_denominator`, so
that near-min-cut membership is a well-defined exact comparison.
"""

from __future__ import annotations

from fractions import Fraction


def to_fraction(value) -> Fraction:
    """Promote ints, floats, decimal strings and 'p/q' strings exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)  # exact dyadic representation
    if isinstance(value, str):
        return Fraction(value)  # handles '3/4', '0.25', '2'
    raise TypeError(f"cannot promote {type(value).__name__} to Fraction")


def frac_str(q: Fraction) -> str:
    """Compact exact serialization, e.g. '9/4' or '2'."""
    return str(q)


def frac_num_den(q: Fraction) -> tuple[int, int]:
    return q.numerator, q.denominator


def parse_frac(text) -> Fraction:
    return to_fraction(text)
