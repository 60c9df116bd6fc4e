"""Arithmetic on the circle group R/Z.

Points carry either an exact rational value (python Fraction, reduced,
in [0,1)) or a float in [0,1).  Exact mode exists so that strict
inequalities between phase residuals can be checked without rounding
doubt; float mode is what the bulk pipeline uses.  Mixed-mode operations
coerce exact -> float, never the other way.

All values are immutable and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

from .errors import AntipodalInput

Real = Union[Fraction, float]

#: tolerance for detecting the antipodal case in float mode
ANTIPODAL_TOL = 1e-12

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class CirclePoint:
    """An element of R/Z; ``value`` is a Fraction (exact) or float."""

    value: Real

    def __post_init__(self):
        v = self.value
        if isinstance(v, Fraction):
            v = v % 1
        elif isinstance(v, float):
            v = v % 1.0
            if v >= 1.0:  # e.g. (-1e-20) % 1.0 rounds up to 1.0
                v = 0.0
        else:
            raise TypeError(f"CirclePoint value must be Fraction or float, got {type(v)}")
        object.__setattr__(self, "value", v)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction)

    def as_float(self) -> float:
        return float(self.value)

    def to_float_point(self) -> "CirclePoint":
        return self if not self.is_exact else CirclePoint(float(self.value))

    def __str__(self) -> str:
        return encode(self)


def exact(num: int, den: int) -> CirclePoint:
    """Exact point num/den reduced into [0, 1)."""
    return CirclePoint(Fraction(num, den))


def point(x) -> CirclePoint:
    """Coerce a number (or existing point) to a CirclePoint."""
    if isinstance(x, CirclePoint):
        return x
    if isinstance(x, (Fraction, int)):
        return CirclePoint(Fraction(x))
    return CirclePoint(float(x))


def _both_exact(a: CirclePoint, b: CirclePoint) -> bool:
    return a.is_exact and b.is_exact


def circ_dist(a: CirclePoint, b: CirclePoint) -> Real:
    """Distance to 0 of a - b in R/Z, i.e. min over integers m of |a - b - m|.

    Exact in -> exact out; result lies in [0, 1/2].
    """
    if _both_exact(a, b):
        d = (a.value - b.value) % 1
        return d if d <= HALF else 1 - d
    d = (a.as_float() - b.as_float()) % 1.0
    if d >= 1.0:
        d = 0.0
    return d if d <= 0.5 else 1.0 - d


def scale(n: int, a: CirclePoint) -> CirclePoint:
    """n*a mod 1.  Exact when a is exact (python ints never overflow)."""
    if a.is_exact:
        return CirclePoint(n * a.value)
    return CirclePoint((n * a.value) % 1.0)


def lift_set(a: CirclePoint, p: int) -> list[CirclePoint]:
    """All beta with scale(p, beta) == a, i.e. (a + k)/p for k = 0..p-1,
    sorted ascending."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if a.is_exact:
        return [CirclePoint(Fraction(a.value + k, p)) for k in range(p)]
    base = a.as_float() / p
    return [CirclePoint((base + k / p) % 1.0) for k in range(p)]


def signed_gap(a: CirclePoint, b: CirclePoint) -> Real:
    """Representative of a - b in (-1/2, 1/2]."""
    if _both_exact(a, b):
        d = (a.value - b.value) % 1
        return d if d <= HALF else d - 1
    d = (a.as_float() - b.as_float()) % 1.0
    if d >= 1.0:
        d = 0.0
    return d if d <= 0.5 else d - 1.0


def midpoint_short_arc(a: CirclePoint, b: CirclePoint) -> CirclePoint:
    """Midpoint of the shorter arc from a to b.

    Raises AntipodalInput when the two points are opposite (distance 1/2
    within ANTIPODAL_TOL in float mode, exactly 1/2 in exact mode), since
    the short arc is then not unique.
    """
    if _both_exact(a, b):
        d = circ_dist(a, b)
        if d == HALF:
            raise AntipodalInput(f"{a} and {b} are antipodal")
        return CirclePoint(b.value + signed_gap(a, b) / 2)
    d = circ_dist(a, b)
    if abs(float(d) - 0.5) <= ANTIPODAL_TOL:
        raise AntipodalInput(f"{a} and {b} are antipodal within tolerance")
    return CirclePoint((b.as_float() + signed_gap(a, b) / 2) % 1.0)


def encode(a: CirclePoint) -> str:
    """Serialize: exact as "num/den", float as 17-significant-digit decimal."""
    if a.is_exact:
        f: Fraction = a.value
        return f"{f.numerator}/{f.denominator}"
    return format(a.value, ".17g")


def decode(s: str) -> CirclePoint:
    """Parse the output of encode (both forms accepted)."""
    s = s.strip()
    if "/" in s:
        num, den = s.split("/")
        return CirclePoint(Fraction(int(num), int(den)))
    return CirclePoint(float(s))


def nearest_int(x: Real) -> int:
    """Nearest integer to x (ties toward even, matching round())."""
    if isinstance(x, Fraction):
        fl = x.numerator // x.denominator
        rem = x - fl
        if rem > HALF:
            return fl + 1
        if rem < HALF:
            return fl
        return fl if fl % 2 == 0 else fl + 1
    return round(x)
