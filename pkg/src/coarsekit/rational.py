"""Exact rational parsing/formatting used by every serialized artifact."""

from __future__ import annotations

from fractions import Fraction

from .errors import InvalidScale


def as_fraction(value) -> Fraction:
    """Coerce int / str("p" or "p/q") / Fraction into an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r}: exact fields take int or 'p/q' strings")
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_rational(q: Fraction) -> str:
    """Canonical string form: "p" for integers, "p/q" otherwise."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def as_scale(value) -> Fraction:
    """A scale is a strictly positive rational."""
    q = as_fraction(value)
    if q <= 0:
        raise InvalidScale(f"scale must be > 0, got {q}")
    return q
