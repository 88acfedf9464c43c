"""Two-dimensional full cubical sets at grid scale.

Cells are tuples (kind, i, j) with kind 0 = vertex at lattice point (i, j),
kind 1 = horizontal edge [i, i+1] x {j}, kind 2 = vertical edge {i} x [j, j+1],
kind 3 = unit square [i, i+1] x [j, j+1].  Boundary orientation follows the
product rule d(A x B) = dA x B + (-1)^dim(A) A x dB.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

Cell = tuple[int, int, int]

VERTEX, HEDGE, VEDGE, SQUARE = 0, 1, 2, 3
_DIM = {VERTEX: 0, HEDGE: 1, VEDGE: 1, SQUARE: 2}


def dim(cell: Cell) -> int:
    return _DIM[cell[0]]


def boundary(cell: Cell) -> tuple[tuple[Cell, int], ...]:
    kind, i, j = cell
    if kind == SQUARE:
        return (
            ((VEDGE, i + 1, j), 1),
            ((VEDGE, i, j), -1),
            ((HEDGE, i, j + 1), -1),
            ((HEDGE, i, j), 1),
        )
    if kind == HEDGE:
        return (((VERTEX, i + 1, j), 1), ((VERTEX, i, j), -1))
    if kind == VEDGE:
        return (((VERTEX, i, j + 1), 1), ((VERTEX, i, j), -1))
    return ()


@lru_cache(maxsize=65536)
def square_cells(i: int, j: int) -> tuple[Cell, ...]:
    """All nine cells of the closed unit square at (i, j)."""
    return (
        (SQUARE, i, j),
        (HEDGE, i, j), (HEDGE, i, j + 1),
        (VEDGE, i, j), (VEDGE, i + 1, j),
        (VERTEX, i, j), (VERTEX, i + 1, j), (VERTEX, i, j + 1), (VERTEX, i + 1, j + 1),
    )


def cells_of_squares(squares: Iterable[tuple[int, int]]) -> frozenset[Cell]:
    out: set[Cell] = set()
    for (i, j) in squares:
        out.update(square_cells(i, j))
    return frozenset(out)


@dataclass(frozen=True)
class CubicalSet:
    """Full cubical set: squares plus all their faces, canonically ordered."""

    squares: frozenset[tuple[int, int]]
    _cells: frozenset[Cell] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "squares", frozenset(self.squares))
        object.__setattr__(self, "_cells", cells_of_squares(self.squares))

    @property
    def cells(self) -> frozenset[Cell]:
        return self._cells

    def sorted_cells(self) -> list[Cell]:
        return sorted(self._cells)

    def __contains__(self, cell: Cell) -> bool:
        return cell in self._cells

    def __len__(self) -> int:
        return len(self.squares)


def _faces(cell: Cell) -> tuple[Cell, ...]:
    kind, i, j = cell
    if kind == SQUARE:
        return square_cells(i, j)[1:]
    if kind == HEDGE:
        return ((VERTEX, i, j), (VERTEX, i + 1, j))
    if kind == VEDGE:
        return ((VERTEX, i, j), (VERTEX, i, j + 1))
    return ()


def complex_components(cells: frozenset[Cell] | set[Cell]) -> int:
    """Number of connected components of a face-closed cell collection."""
    parent: dict[Cell, Cell] = {c: c for c in cells}

    def find(c: Cell) -> Cell:
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    def union(a: Cell, b: Cell) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for c in cells:
        for f in _faces(c):
            if f in parent:
                union(c, f)
    return len({find(c) for c in cells})


def euler_characteristic(cells: Iterable[Cell]) -> int:
    chi = 0
    for c in cells:
        chi += (1, -1, 1)[dim(c)]
    return chi


def is_acyclic(cells: frozenset[Cell] | set[Cell]) -> bool:
    """Trivial reduced homology test for planar cell collections:
    nonempty, connected and Euler characteristic 1."""
    if not cells:
        return False
    return euler_characteristic(cells) == 1 and complex_components(cells) == 1
