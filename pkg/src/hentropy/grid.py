"""Grid model over an initial box: continuous resolution scaling and covering.

Cell geometry is exact: the grid anchor (center of the initial box) and the
cell sides are rationals, and `cover` decides lattice membership with integer
arithmetic only.  Floating-point `Rect2` views of cells are rounded outward,
so enclosures computed from them stay sound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import EmptyCover
from .interval import Interval, Rect2

BoxId = tuple[int, int]

MAX_DENOMINATOR = 64


def _div_down(n: int, d: int) -> float:
    """Largest double <= n/d (d > 0)."""
    f = n / d if abs(n) < (1 << 53) and d < (1 << 53) else float(Fraction(n, d))
    a, b = f.as_integer_ratio()
    if a * d > n * b:
        f = math.nextafter(f, -math.inf)
    return f


def _div_up(n: int, d: int) -> float:
    f = n / d if abs(n) < (1 << 53) and d < (1 << 53) else float(Fraction(n, d))
    a, b = f.as_integer_ratio()
    if a * d < n * b:
        f = math.nextafter(f, math.inf)
    return f


def _floor_ratio(n: int, d: int) -> tuple[int, bool]:
    """(floor(n/d), n/d is an integer) for d > 0."""
    q, r = divmod(n, d)
    return q, r == 0


@dataclass(frozen=True)
class _Axis:
    """Exact 1-d lattice: edge(i) = (c_n + i * s_n * lcm-ish) / den."""

    c: Fraction  # anchor
    s: Fraction  # cell side, > 0

    def edge(self, i: int) -> Fraction:
        return self.c + i * self.s

    def index_range(self, lo: float, hi: float) -> tuple[int, int]:
        """Lattice cells meeting the closed interval [lo, hi], minimal cover."""
        fn, fd = lo.as_integer_ratio()
        num = (fn * self.c.denominator - self.c.numerator * fd) * self.s.denominator
        den = fd * self.c.denominator * self.s.numerator
        ilo, _ = _floor_ratio(num, den)
        fn, fd = hi.as_integer_ratio()
        num = (fn * self.c.denominator - self.c.numerator * fd) * self.s.denominator
        den = fd * self.c.denominator * self.s.numerator
        q, exact = _floor_ratio(num, den)
        ihi = q - 1 if exact else q
        if ihi < ilo:
            ihi = ilo  # degenerate interval sitting on a grid line
        return ilo, ihi


def parse_resolution(text) -> Fraction:
    """Parse a resolution given as Fraction/int/'p/q'/'p'."""
    if isinstance(text, Fraction):
        r = text
    elif isinstance(text, int):
        r = Fraction(text)
    elif isinstance(text, str):
        if "/" in text:
            p, q = text.split("/", 1)
            r = Fraction(int(p), int(q))
        else:
            r = Fraction(text)
    else:
        raise TypeError(f"bad resolution {text!r}")
    if r <= 0:
        raise ValueError(f"resolution must be positive, got {r}")
    if r.denominator > MAX_DENOMINATOR:
        raise ValueError(f"resolution denominator {r.denominator} exceeds {MAX_DENOMINATOR}")
    return r


@dataclass(frozen=True)
class GridSpec:
    """Grid of resolution r over b0, anchored at the center of b0.

    `window` is the computational domain; it is aligned outward to whole
    cells, and only cells inside the aligned window are ever active.
    """

    b0: Rect2
    resolution: Fraction
    window: Rect2
    _ax: _Axis = field(init=False, repr=False, compare=False)
    _ay: _Axis = field(init=False, repr=False, compare=False)
    _bounds: tuple[int, int, int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = parse_resolution(self.resolution)
        object.__setattr__(self, "resolution", r)
        if not self.b0.subset_of(self.window):
            raise ValueError("b0 must lie inside the window")
        cx = (Fraction(self.b0.x.lo) + Fraction(self.b0.x.hi)) / 2
        cy = (Fraction(self.b0.y.lo) + Fraction(self.b0.y.hi)) / 2
        sx = (Fraction(self.b0.x.hi) - Fraction(self.b0.x.lo)) / r
        sy = (Fraction(self.b0.y.hi) - Fraction(self.b0.y.lo)) / r
        if sx <= 0 or sy <= 0:
            raise ValueError("b0 must have positive width and height")
        ax = _Axis(cx, sx)
        ay = _Axis(cy, sy)
        object.__setattr__(self, "_ax", ax)
        object.__setattr__(self, "_ay", ay)
        imin, imax = ax.index_range(self.window.x.lo, self.window.x.hi)
        jmin, jmax = ay.index_range(self.window.y.lo, self.window.y.hi)
        object.__setattr__(self, "_bounds", (imin, imax, jmin, jmax))

    @classmethod
    def make(cls, b0: Rect2, resolution, window: Rect2 | None = None) -> "GridSpec":
        """Default window: b0 inflated by 25% per side."""
        if window is None:
            wx = (Fraction(b0.x.hi) - Fraction(b0.x.lo)) / 4
            wy = (Fraction(b0.y.hi) - Fraction(b0.y.lo)) / 4
            window = Rect2(
                Interval(_div_down((Fraction(b0.x.lo) - wx).numerator, (Fraction(b0.x.lo) - wx).denominator),
                         _div_up((Fraction(b0.x.hi) + wx).numerator, (Fraction(b0.x.hi) + wx).denominator)),
                Interval(_div_down((Fraction(b0.y.lo) - wy).numerator, (Fraction(b0.y.lo) - wy).denominator),
                         _div_up((Fraction(b0.y.hi) + wy).numerator, (Fraction(b0.y.hi) + wy).denominator)),
            )
        return cls(b0, parse_resolution(resolution), window)

    @property
    def index_bounds(self) -> tuple[int, int, int, int]:
        """(imin, imax, jmin, jmax) of cells inside the aligned window."""
        return self._bounds

    def in_window(self, box: BoxId) -> bool:
        imin, imax, jmin, jmax = self._bounds
        return imin <= box[0] <= imax and jmin <= box[1] <= jmax

    def cell_bounds(self, box: BoxId) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        """Exact (xlo, xhi, ylo, yhi) of the cell."""
        i, j = box
        return self._ax.edge(i), self._ax.edge(i + 1), self._ay.edge(j), self._ay.edge(j + 1)

    def box_of(self, box: BoxId) -> Rect2:
        """Outward-rounded float rectangle of the cell (contains the exact cell)."""
        xlo, xhi, ylo, yhi = self.cell_bounds(box)
        return Rect2(
            Interval(_div_down(xlo.numerator, xlo.denominator), _div_up(xhi.numerator, xhi.denominator)),
            Interval(_div_down(ylo.numerator, ylo.denominator), _div_up(yhi.numerator, yhi.denominator)),
        )

    def _ranges(self, rect: Rect2) -> tuple[int, int, int, int]:
        ilo, ihi = self._ax.index_range(rect.x.lo, rect.x.hi)
        jlo, jhi = self._ay.index_range(rect.y.lo, rect.y.hi)
        return ilo, ihi, jlo, jhi

    def cover_with_escape(self, rect: Rect2) -> tuple[list[BoxId], bool]:
        """In-window cells covering rect, plus whether rect leaves the window."""
        ilo, ihi, jlo, jhi = self._ranges(rect)
        imin, imax, jmin, jmax = self._bounds
        ci_lo, ci_hi = max(ilo, imin), min(ihi, imax)
        cj_lo, cj_hi = max(jlo, jmin), min(jhi, jmax)
        escaped = (ilo < imin or ihi > imax or jlo < jmin or jhi > jmax)
        if ci_lo > ci_hi or cj_lo > cj_hi:
            return [], True
        ids = [(i, j) for i in range(ci_lo, ci_hi + 1) for j in range(cj_lo, cj_hi + 1)]
        return ids, escaped

    def cover(self, rect: Rect2) -> list[BoxId]:
        """Minimal in-window cell cover of rect, ascending (i, j) order."""
        ids, _ = self.cover_with_escape(rect)
        if not ids:
            raise EmptyCover(f"rectangle {rect} does not meet the window")
        return ids

    def to_json(self) -> dict:
        return {
            "b0": [[self.b0.x.lo, self.b0.x.hi], [self.b0.y.lo, self.b0.y.hi]],
            "window": [[self.window.x.lo, self.window.x.hi], [self.window.y.lo, self.window.y.hi]],
            "resolution": f"{self.resolution.numerator}/{self.resolution.denominator}",
        }

    @classmethod
    def from_json(cls, data: dict) -> "GridSpec":
        (bx, by), (wx, wy) = data["b0"], data["window"]
        return cls(
            Rect2(Interval(*bx), Interval(*by)),
            parse_resolution(data["resolution"]),
            Rect2(Interval(*wx), Interval(*wy)),
        )


def resolution_schedule(r_min, r_max, steps_per_doubling: int) -> list[Fraction]:
    """Geometric ladder r_min * 2^(k/m), each rounded to the nearest rational
    with denominator <= 64; strictly increasing, last entry >= r_max."""
    r_min = parse_resolution(r_min)
    r_max = parse_resolution(r_max)
    m = int(steps_per_doubling)
    if not (0 < r_min < r_max):
        raise ValueError("need 0 < r_min < r_max")
    if m < 1:
        raise ValueError("steps_per_doubling must be >= 1")
    out: list[Fraction] = []
    k = 0
    while True:
        raw = float(r_min) * 2.0 ** (k / m)
        r = Fraction(raw).limit_denominator(MAX_DENOMINATOR)
        if not out or r > out[-1]:
            out.append(r)
        if r >= r_max:
            break
        k += 1
        if k > 100000:
            raise RuntimeError("schedule did not terminate")
    return out
