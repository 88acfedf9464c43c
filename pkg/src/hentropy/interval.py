"""Outward-rounded interval arithmetic and the rigorous Henon image enclosure.

Endpoints are IEEE doubles.  Scalar operations detect whether the computed
endpoint is exact (doubles are rationals, so the check is a `Fraction`
comparison) and only then step outward by one ulp, keeping point boxes tight.
The batched enclosure used by the sweep inflates every endpoint by one ulp
unconditionally, which is sound and vectorizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import EnclosureOverflow

_INF = math.inf


def _check_finite(lo: float, hi: float) -> None:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise EnclosureOverflow(f"non-finite endpoint in [{lo}, {hi}]")


def _down(value: float, exact: Fraction) -> float:
    """Largest double <= exact, starting from the rounded candidate."""
    if Fraction(value) > exact:
        value = math.nextafter(value, -_INF)
    return value


def _up(value: float, exact: Fraction) -> float:
    if Fraction(value) < exact:
        value = math.nextafter(value, _INF)
    return value


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        _check_finite(self.lo, self.hi)
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def subset_of(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"


def add(a: Interval, b: Interval) -> Interval:
    lo = _down(a.lo + b.lo, Fraction(a.lo) + Fraction(b.lo))
    hi = _up(a.hi + b.hi, Fraction(a.hi) + Fraction(b.hi))
    return Interval(lo, hi)


def sub(a: Interval, b: Interval) -> Interval:
    lo = _down(a.lo - b.hi, Fraction(a.lo) - Fraction(b.hi))
    hi = _up(a.hi - b.lo, Fraction(a.hi) - Fraction(b.lo))
    return Interval(lo, hi)


def neg(a: Interval) -> Interval:
    # Negation of doubles is exact.
    return Interval(-a.hi, -a.lo)


def mul(a: Interval, b: Interval) -> Interval:
    pairs = ((a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi))
    exacts = [Fraction(x) * Fraction(y) for x, y in pairs]
    floats = [x * y for x, y in pairs]
    lo_i = min(range(4), key=lambda i: exacts[i])
    hi_i = max(range(4), key=lambda i: exacts[i])
    return Interval(_down(floats[lo_i], exacts[lo_i]), _up(floats[hi_i], exacts[hi_i]))


def sqr(a: Interval) -> Interval:
    """Tight square range: lower bound 0 whenever the interval spans 0."""
    if a.lo <= 0.0 <= a.hi:
        m = max(-a.lo, a.hi)
        return Interval(0.0, _up(m * m, Fraction(m) * Fraction(m)))
    m = min(abs(a.lo), abs(a.hi))
    big = max(abs(a.lo), abs(a.hi))
    return Interval(
        _down(m * m, Fraction(m) * Fraction(m)),
        _up(big * big, Fraction(big) * Fraction(big)),
    )


def scale(a: Interval, c: float) -> Interval:
    if not math.isfinite(c):
        raise EnclosureOverflow(f"non-finite constant {c}")
    return mul(a, Interval.point(c))


_OPS = {"add": add, "sub": sub, "neg": neg, "mul": mul, "sqr": sqr, "scale_by_const": scale}


def arith(op: str, a: Interval, b=None) -> Interval:
    """Dispatch by operation name; `b` is an Interval or a constant for scale."""
    fn = _OPS[op]
    if op in ("neg", "sqr"):
        return fn(a)
    return fn(a, b)


@dataclass(frozen=True)
class Rect2:
    x: Interval
    y: Interval

    @classmethod
    def of(cls, xlo, xhi, ylo, yhi) -> "Rect2":
        return cls(Interval(xlo, xhi), Interval(ylo, yhi))

    def contains(self, px: float, py: float) -> bool:
        return self.x.contains(px) and self.y.contains(py)

    def subset_of(self, other: "Rect2") -> bool:
        return self.x.subset_of(other.x) and self.y.subset_of(other.y)

    def intersects(self, other: "Rect2") -> bool:
        return self.x.intersects(other.x) and self.y.intersects(other.y)

    def hull(self, other: "Rect2") -> "Rect2":
        return Rect2(self.x.hull(other.x), self.y.hull(other.y))


def henon_point(px: float, py: float, a: float, b: float) -> tuple[float, float]:
    """Plain double-precision evaluation of (a - x^2 + b*y, x)."""
    return (a - px * px) + b * py, px


def henon_enclosure(box: Rect2, a: float, b: float) -> Rect2:
    """Rectangle containing the exact Henon image of every point of `box`.

    The second coordinate is the x side of the input, copied exactly.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise EnclosureOverflow("non-finite map parameter")
    x_new = add(sub(Interval.point(a), sqr(box.x)), scale(box.y, b))
    return Rect2(x_new, box.x)


def henon_enclosure_batch(xlo, xhi, ylo, yhi, a: float, b: float):
    """Vectorized enclosure for arrays of boxes; one-ulp outward inflation.

    Follows the same operation order as `henon_enclosure` so that pointwise
    double evaluation of corner points never lands outside.
    Returns (nxlo, nxhi, nylo, nyhi) arrays.
    """
    xlo = np.asarray(xlo, dtype=np.float64)
    xhi = np.asarray(xhi, dtype=np.float64)
    ylo = np.asarray(ylo, dtype=np.float64)
    yhi = np.asarray(yhi, dtype=np.float64)

    # square range of x, tight at sign changes
    alo = np.abs(xlo)
    ahi = np.abs(xhi)
    mn = np.minimum(alo, ahi)
    mx = np.maximum(alo, ahi)
    spans = (xlo <= 0.0) & (xhi >= 0.0)
    sq_lo = np.where(spans, 0.0, np.nextafter(mn * mn, -np.inf))
    sq_lo = np.maximum(sq_lo, 0.0)
    sq_hi = np.nextafter(mx * mx, np.inf)

    # a - x^2
    t_lo = np.nextafter(a - sq_hi, -np.inf)
    t_hi = np.nextafter(a - sq_lo, np.inf)

    # + b*y
    p1 = b * ylo
    p2 = b * yhi
    by_lo = np.nextafter(np.minimum(p1, p2), -np.inf)
    by_hi = np.nextafter(np.maximum(p1, p2), np.inf)

    nx_lo = np.nextafter(t_lo + by_lo, -np.inf)
    nx_hi = np.nextafter(t_hi + by_hi, np.inf)

    if not (np.all(np.isfinite(nx_lo)) and np.all(np.isfinite(nx_hi))):
        raise EnclosureOverflow("batch enclosure produced non-finite endpoints")
    return nx_lo, nx_hi, xlo, xhi
