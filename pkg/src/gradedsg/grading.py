"""Degree bookkeeping for the Z2 x Z2 grading.

Every generator carries a pair of bits.  The scalar pairing of two such
pairs decides, through ``commutation_sign``, whether a pair of homogeneous
elements commutes or anticommutes.  Boost weights are kept in half-units as
plain integers so that spinor weights (+-1/2) stay exact.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple


class Degree(NamedTuple):
    d1: int
    d2: int

    def __str__(self) -> str:
        return f"({self.d1},{self.d2})"


DEG_EVEN = Degree(0, 0)
DEG_01 = Degree(0, 1)
DEG_10 = Degree(1, 0)
DEG_11 = Degree(1, 1)

ALL_DEGREES = (DEG_EVEN, DEG_01, DEG_10, DEG_11)

# Boost weight in half-units: weight = w/2 boost rapidity units.
BoostWeight = int


def pairing(a: Degree, b: Degree) -> int:
    """Scalar pairing a1*b1 + a2*b2 mod 2."""
    return (a.d1 * b.d1 + a.d2 * b.d2) % 2


def commutation_sign(a: Degree, b: Degree) -> int:
    """+1 if elements of degrees a, b commute, -1 if they anticommute."""
    return -1 if pairing(a, b) else 1


def degree_add(a: Degree, b: Degree) -> Degree:
    return Degree((a.d1 + b.d1) % 2, (a.d2 + b.d2) % 2)


def is_self_odd(a: Degree) -> bool:
    """True when a single generator of this degree squares to zero."""
    return pairing(a, a) == 1


def weight_str(w: BoostWeight) -> str:
    """Render a half-unit weight as an exact rational string."""
    return str(Fraction(w, 2))
