"""Induced index map on relative homology via acyclic-carrier chain selectors.

The carrier of a cell c is the cubical-complex intersection of the image
complexes of all P1 squares containing c; carriers grow with dimension, so a
chain map can be built by skeletal induction: vertices go to the least vertex
of their carrier, edges to shortest carrier paths (lexicographic tie-break),
squares to bounding 2-chains solved inside their carrier.  The chain-map
identity is asserted exactly at every level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cubical import (Cell, HEDGE, SQUARE, VEDGE, VERTEX, boundary,
                      cells_of_squares, is_acyclic)
from .errors import ChainSolveFailure, NonAcyclicCarrier
from .homology import HomologyData, relative_homology, solve_integer
from .index_pair import IndexPair


def _owning_squares(cell: Cell) -> tuple[tuple[int, int], ...]:
    kind, i, j = cell
    if kind == VERTEX:
        return ((i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j))
    if kind == HEDGE:
        return ((i, j - 1), (i, j))
    if kind == VEDGE:
        return ((i - 1, j), (i, j))
    return ((i, j),)


def _add_chain(acc: dict, chain: dict, mult: int = 1) -> None:
    for c, v in chain.items():
        nv = acc.get(c, 0) + mult * v
        if nv:
            acc[c] = nv
        else:
            acc.pop(c, None)


def _chain_boundary(chain: dict) -> dict:
    out: dict[Cell, int] = {}
    for c, v in chain.items():
        for f, coeff in boundary(c):
            nv = out.get(f, 0) + v * coeff
            if nv:
                out[f] = nv
            else:
                out.pop(f, None)
    return out


class ChainSelector:
    """Deterministic chain map carried by image-complex intersections."""

    def __init__(self, pair: IndexPair):
        self.pair = pair
        self._image_cells: dict[tuple, frozenset[Cell]] = {}
        self._carrier_cache: dict[Cell, frozenset[Cell]] = {}
        self._vertex_cache: dict[Cell, Cell] = {}
        self._edge_cache: dict[Cell, dict] = {}

    def _image_complex(self, square: tuple[int, int]) -> frozenset[Cell]:
        targets = self.pair.image_of(square)
        cached = self._image_cells.get(targets)
        if cached is None:
            cached = cells_of_squares(targets)
            self._image_cells[targets] = cached
        return cached

    def carrier(self, cell: Cell) -> frozenset[Cell]:
        cached = self._carrier_cache.get(cell)
        if cached is not None:
            return cached
        owners = [q for q in _owning_squares(cell) if q in self.pair.p1.squares]
        if not owners:
            raise NonAcyclicCarrier(cell, "cell not in the pair")
        acc = self._image_complex(owners[0])
        for q in owners[1:]:
            acc = acc & self._image_complex(q)
        if not acc:
            raise NonAcyclicCarrier(cell, "empty carrier")
        self._carrier_cache[cell] = acc
        return acc

    def vertex_image(self, v: Cell) -> Cell:
        out = self._vertex_cache.get(v)
        if out is None:
            carrier = self.carrier(v)
            verts = sorted((i, j) for (k, i, j) in carrier if k == VERTEX)
            if not verts:
                raise NonAcyclicCarrier(v, "carrier has no vertices")
            out = (VERTEX, *verts[0])
            self._vertex_cache[v] = out
        return out

    def edge_image(self, e: Cell) -> dict:
        out = self._edge_cache.get(e)
        if out is not None:
            return out
        faces = boundary(e)
        head = faces[0][0]
        tail = faces[1][0]
        carrier = self.carrier(e)
        src = self.vertex_image(tail)
        dst = self.vertex_image(head)
        path = _carrier_path(carrier, src, dst)
        if path is None:
            raise NonAcyclicCarrier(e, "carrier is disconnected")
        chain: dict[Cell, int] = {}
        for edge_cell, sign in path:
            _add_chain(chain, {edge_cell: sign})
        got = _chain_boundary(chain)
        want: dict[Cell, int] = {}
        _add_chain(want, {dst: 1})
        _add_chain(want, {src: -1})
        assert got == want, "edge selector violates the chain-map identity"
        self._edge_cache[e] = chain
        return chain

    def square_image(self, s: Cell) -> dict:
        carrier = self.carrier(s)
        rim: dict[Cell, int] = {}
        for f, coeff in boundary(s):
            _add_chain(rim, self.edge_image(f), coeff)
        edges = sorted(c for c in carrier if c[0] in (HEDGE, VEDGE))
        squares = sorted(c for c in carrier if c[0] == SQUARE)
        eidx = {c: k for k, c in enumerate(edges)}
        rhs = [0] * len(edges)
        for c, v in rim.items():
            if c not in eidx:
                raise ChainSolveFailure(f"selector rim leaves the carrier at {c!r}")
            rhs[eidx[c]] = v
        mat = [[0] * len(squares) for _ in edges]
        for j, sq in enumerate(squares):
            for f, coeff in boundary(sq):
                if f in eidx:
                    mat[eidx[f]][j] = coeff
        if not squares:
            sol = [] if not any(rhs) else None
        elif not edges:
            sol = [0] * len(squares)
        else:
            sol = solve_integer(mat, rhs)
        if sol is None:
            raise ChainSolveFailure(f"no bounding chain inside the carrier of {s!r}")
        chain = {squares[j]: sol[j] for j in range(len(squares)) if sol[j]}
        assert _chain_boundary(chain) == rim, "square selector violates d(phi) = phi(d)"
        return chain

    def chain_image(self, chain: dict) -> dict:
        """Image of a 1-chain under the selector (full complex coordinates)."""
        out: dict[Cell, int] = {}
        for e, v in chain.items():
            _add_chain(out, self.edge_image(e), v)
        return out


def _carrier_path(carrier: frozenset[Cell], src: Cell, dst: Cell):
    """Shortest path in the carrier 1-skeleton, lexicographic tie-break.
    Returns a list of (edge cell, orientation) or None."""
    if src == dst:
        return []

    def neighbors(v: Cell):
        _, i, j = v
        cand = (
            ((HEDGE, i, j), (VERTEX, i + 1, j), 1),
            ((HEDGE, i - 1, j), (VERTEX, i - 1, j), -1),
            ((VEDGE, i, j), (VERTEX, i, j + 1), 1),
            ((VEDGE, i, j - 1), (VERTEX, i, j - 1), -1),
        )
        for edge, vert, sign in cand:
            if edge in carrier and vert in carrier:
                yield edge, vert, sign

    dist = {dst: 0}
    frontier = [dst]
    while frontier:
        nxt = []
        for v in frontier:
            for _, w, _ in neighbors(v):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = nxt
    if src not in dist:
        return None
    path = []
    cur = src
    while cur != dst:
        steps = sorted(
            (w[1:], edge, w, sign)
            for edge, w, sign in neighbors(cur)
            if dist.get(w, -1) == dist[cur] - 1
        )
        _, edge, nxt, sign = steps[0]
        path.append((edge, sign))
        cur = nxt
    return path


@dataclass
class IndexMapData:
    """Matrices of the induced map on H1 (and H0), column = source generator."""

    h1_matrix: list[list[int]]
    h0_matrix: list[list[int]]
    gen_clean: list[bool]
    homology: HomologyData = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return len(self.h1_matrix)


def induced_index_map(pair: IndexPair, hom: HomologyData | None = None) -> IndexMapData:
    """Matrix of the induced map on H1(P1, P0) over the free generator basis."""
    if hom is None:
        hom = relative_homology(pair)
    p0_cells = cells_of_squares(pair.p0.squares)

    # precondition: acyclic image complex for every square owning interior cells
    for q in sorted(pair.interior):
        if not is_acyclic(cells_of_squares(pair.image_of(q))):
            raise NonAcyclicCarrier((SQUARE, *q), "image complex fails connected & chi = 1")

    selector = ChainSelector(pair)
    gens = hom.generators
    n = len(gens)
    h1 = [[0] * n for _ in range(n)]
    clean = [True] * n
    for j, gen in enumerate(gens):
        image = selector.chain_image(gen.chain)
        image = {c: v for c, v in image.items() if c not in p0_cells}
        rim = {c: v for c, v in _chain_boundary(image).items() if c not in p0_cells}
        assert not rim, "selector image is not a relative cycle"
        coords, ok = hom.project_cycle(image)
        clean[j] = ok
        for i in range(n):
            h1[i][j] = coords[i]

    # H0 block over the terminal vertex basis of each block
    vert_basis: list[tuple[int, Cell]] = []
    for bi, cx in enumerate(hom.block_complexes):
        vert_basis.extend((bi, v) for v in cx.verts)
    vidx = {v: k for k, (_, v) in enumerate(vert_basis)}
    m = len(vert_basis)
    h0 = [[0] * m for _ in range(m)]
    for jcol, (bi, v) in enumerate(vert_basis):
        img = selector.vertex_image(v)
        if img in p0_cells:
            continue
        tb = hom.cell_block.get(img)
        if tb is None:
            continue
        projected = hom.block_complexes[tb].project_vertex_chain({img: 1})
        for w, coeff in projected.items():
            h0[vidx[w]][jcol] = coeff
    return IndexMapData(h1_matrix=h1, h0_matrix=h0, gen_clean=clean, homology=hom)
