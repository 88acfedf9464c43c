"""Relative cubical homology over the integers, with chain tracking.

The quotient complex of an index pair (cells of P1 not in P0, boundaries
projected) splits into blocks connected through non-exit cells.  Each block is
shrunk by elementary eliminations of incidence pairs (sigma, tau) with unit
coefficient; every elimination is logged with enough data to project cycles
forward into the reduced complex and to lift reduced cycles back.  The tiny
terminal complex is finished with an exact Smith normal form.

Elimination formulas, for <d tau, sigma> = lam in {+1, -1}:

    d'(c)  = drop(d c - lam * <d c, sigma> * d tau)
    p(c)   = drop(c - lam * <c, sigma> * d tau - lam * <d c, sigma> * tau)
    iota(c)= c - lam * <d c, sigma> * tau

where drop removes the sigma and tau coordinates.  Applied to cycles, p needs
only the recorded boundary of tau, and iota needs only the recorded coboundary
row of sigma; both stay valid under arbitrary elimination order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .cubical import Cell, SQUARE, boundary, cells_of_squares, dim
from .errors import ChainSolveFailure
from .index_pair import IndexPair


# ---------------------------------------------------------------------------
# Smith normal form (exact, deterministic smallest-pivot selection)
# ---------------------------------------------------------------------------

def smith_normal_form(rows: Sequence[Sequence[int]]):
    """Return (S, U, Uinv, V) with S = U * A * V in Smith normal form.

    U, V unimodular; diagonal entries nonnegative with d_k | d_{k+1}.
    Pivot choice: smallest nonzero magnitude, ties by (row, col).
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    S = [list(map(int, r)) for r in rows]
    U = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    Ui = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    V = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def row_swap(i, j):
        S[i], S[j] = S[j], S[i]
        U[i], U[j] = U[j], U[i]
        for r in Ui:
            r[i], r[j] = r[j], r[i]

    def col_swap(i, j):
        for r in S:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]

    def row_add(dst, src, c):  # row_dst += c * row_src
        Sd, Ss = S[dst], S[src]
        for k in range(n):
            Sd[k] += c * Ss[k]
        Ud, Us = U[dst], U[src]
        for k in range(m):
            Ud[k] += c * Us[k]
        for r in Ui:
            r[src] -= c * r[dst]

    def col_add(dst, src, c):  # col_dst += c * col_src
        for r in S:
            r[dst] += c * r[src]
        for r in V:
            r[dst] += c * r[src]

    def row_neg(i):
        S[i] = [-x for x in S[i]]
        U[i] = [-x for x in U[i]]
        for r in Ui:
            r[i] = -r[i]

    t = 0
    while t < min(m, n):
        # locate smallest nonzero pivot in S[t:, t:]
        best = None
        for i in range(t, m):
            Si = S[i]
            for j in range(t, n):
                v = Si[j]
                if v != 0:
                    key = (abs(v), i, j)
                    if best is None or key < best:
                        best = key
        if best is None:
            break
        _, bi, bj = best
        if bi != t:
            row_swap(t, bi)
        if bj != t:
            col_swap(t, bj)
        if S[t][t] < 0:
            row_neg(t)

        dirty = False
        for i in range(t + 1, m):
            if S[i][t]:
                q = S[i][t] // S[t][t]
                row_add(i, t, -q)
                if S[i][t]:
                    dirty = True
        for j in range(t + 1, n):
            if S[t][j]:
                q = S[t][j] // S[t][t]
                col_add(j, t, -q)
                if S[t][j]:
                    dirty = True
        if dirty:
            continue  # a smaller remainder exists; re-pick pivot

        # pivot must divide the rest of the submatrix for the invariant chain
        offender = None
        p = S[t][t]
        for i in range(t + 1, m):
            Si = S[i]
            for j in range(t + 1, n):
                if Si[j] % p:
                    offender = i
                    break
            if offender is not None:
                break
        if offender is not None:
            row_add(t, offender, 1)
            continue
        t += 1

    return S, U, Ui, V


def solve_integer(rows: Sequence[Sequence[int]], rhs: Sequence[int]):
    """Integer solution x of A x = rhs, or None if none exists."""
    m = len(rows)
    n = len(rows[0]) if m else 0
    S, U, _, V = smith_normal_form(rows)
    w = [sum(U[i][k] * rhs[k] for k in range(m)) for i in range(m)]
    y = [0] * n
    for i in range(min(m, n)):
        d = S[i][i]
        if d == 0:
            if w[i] != 0:
                return None
        else:
            if w[i] % d:
                return None
            y[i] = w[i] // d
    if any(w[i] != 0 for i in range(min(m, n), m)):
        return None
    return [sum(V[i][k] * y[k] for k in range(n)) for i in range(n)]


# ---------------------------------------------------------------------------
# Reduction engine on one block of the quotient complex
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Elim:
    k: int                      # dim of sigma (0: vertex/edge pair, 1: edge/square)
    sigma: Cell
    tau: Cell
    lam: int
    bdtau: dict                 # boundary of tau at elimination time
    sigma_row: dict             # coboundary row of sigma at elimination time


class BlockComplex:
    """One P0-separated block, reduced with logged eliminations."""

    def __init__(self, cells: Iterable[Cell], member: frozenset[Cell]):
        self.cells = frozenset(cells)
        self.bd: dict[Cell, dict[Cell, int]] = {}
        self.cob: dict[Cell, dict[Cell, int]] = {c: {} for c in self.cells}
        for c in self.cells:
            row = {}
            for f, coeff in boundary(c):
                if f in member:
                    row[f] = coeff
                    self.cob[f][c] = coeff
            self.bd[c] = row
        self.log: list[_Elim] = []
        self._reduce()
        self._finalize()

    # -- elimination machinery ------------------------------------------------

    def _eliminate(self, sigma: Cell, tau: Cell) -> None:
        bd, cob = self.bd, self.cob
        bdtau = dict(bd[tau])
        sigma_row = dict(cob[sigma])
        lam = bdtau[sigma]
        assert lam in (1, -1)
        self.log.append(_Elim(dim(sigma), sigma, tau, lam, bdtau, sigma_row))

        for mu, c in sigma_row.items():
            if mu == tau:
                continue
            row = bd[mu]
            del row[sigma]
            for f, cf in bdtau.items():
                if f == sigma:
                    continue
                nv = row.get(f, 0) - lam * c * cf
                if nv:
                    row[f] = nv
                    cob[f][mu] = nv
                else:
                    if f in row:
                        del row[f]
                        del cob[f][mu]
            self._touch_bd(mu)
        for f in bdtau:
            if f != sigma:
                cob[f].pop(tau, None)
                self._touch_cob(f)
        for mu2 in list(cob[tau].keys()):
            bd[mu2].pop(tau, None)
            self._touch_bd(mu2)
        for f in bd[sigma]:
            cob[f].pop(sigma, None)
            self._touch_cob(f)
        del bd[sigma], bd[tau], cob[sigma], cob[tau]
        self.alive.discard(sigma)
        self.alive.discard(tau)

    def _touch_bd(self, c: Cell) -> None:
        if len(self.bd.get(c, ())) == 1:
            heapq.heappush(self._cored, c)

    def _touch_cob(self, c: Cell) -> None:
        if len(self.cob.get(c, ())) == 1:
            heapq.heappush(self._free, c)

    def _pop_coreduction(self):
        while self._cored:
            tau = heapq.heappop(self._cored)
            row = self.bd.get(tau)
            if row is None or len(row) != 1:
                continue
            (sigma, lam), = row.items()
            if abs(lam) == 1:
                return sigma, tau
        return None

    def _pop_free(self):
        while self._free:
            sigma = heapq.heappop(self._free)
            col = self.cob.get(sigma)
            if col is None or len(col) != 1:
                continue
            (tau, lam), = col.items()
            if abs(lam) == 1:
                return sigma, tau
        return None

    def _general_pivot(self):
        # vertex contraction first (coefficients stay unit, fill is rewiring)
        best = None
        for tau in self.alive:
            if dim(tau) != 1:
                continue
            row = self.bd[tau]
            if not row:
                continue
            sigma = min(row, key=lambda v: (len(self.cob[v]), v))
            key = (0, tau, sigma)
            if best is None or key < best:
                best = key
        if best is not None:
            return best[2], best[1]
        best = None
        for tau in self.alive:
            if dim(tau) != 2:
                continue
            for sigma, coeff in self.bd[tau].items():
                if abs(coeff) != 1:
                    continue
                fill = (len(self.cob[sigma]) - 1) * (len(self.bd[tau]) - 1)
                key = (fill, sigma, tau)
                if best is None or key < best:
                    best = key
        if best is not None:
            return best[1], best[2]
        return None

    def _reduce(self) -> None:
        self.alive = set(self.cells)
        self._cored: list[Cell] = []
        self._free: list[Cell] = []
        for c in self.cells:
            self._touch_bd(c)
            self._touch_cob(c)
        heapq.heapify(self._cored)
        heapq.heapify(self._free)
        while True:
            pair = self._pop_coreduction()
            if pair is None:
                pair = self._pop_free()
            if pair is None:
                pair = self._general_pivot()
            if pair is None:
                break
            self._eliminate(*pair)

    # -- terminal complex -----------------------------------------------------

    def _finalize(self) -> None:
        self.verts = sorted(c for c in self.alive if dim(c) == 0)
        self.edges = sorted(c for c in self.alive if dim(c) == 1)
        squares = sorted(c for c in self.alive if dim(c) == 2)
        for e in self.edges:
            assert not self.bd[e], "terminal edge with nonzero boundary"
        eidx = {e: k for k, e in enumerate(self.edges)}
        cols = [s for s in squares if self.bd[s]]
        self.h2_rank = len(squares) - len(cols)
        mat = [[0] * len(cols) for _ in self.edges]
        for j, s in enumerate(cols):
            for f, coeff in self.bd[s].items():
                mat[eidx[f]][j] = coeff
        if self.edges:
            S, U, Ui, _ = smith_normal_form(mat) if cols else (
                [], None, None, None)
            diag = []
            if cols:
                for k in range(min(len(self.edges), len(cols))):
                    if S[k][k]:
                        diag.append(S[k][k])
            self._diag = diag
            self._U = U
            self._Ui = Ui
        else:
            self._diag = []
            self._U = None
            self._Ui = None
        r = len(self._diag)
        self.h0_rank = len(self.verts)
        self.h1_rank = len(self.edges) - r
        self.h1_torsion = [d for d in self._diag if d > 1]
        self._free_pos = list(range(r, len(self.edges)))
        self._tor_pos = [k for k, d in enumerate(self._diag) if d > 1]

    # -- chain transport --------------------------------------------------

    def _project_to_terminal(self, chain: dict) -> dict:
        z = dict(chain)
        for e in self.log:
            if e.k == 0:
                z.pop(e.tau, None)
            else:
                c = z.get(e.sigma)
                if c:
                    for f, cf in e.bdtau.items():
                        nv = z.get(f, 0) - e.lam * c * cf
                        if nv:
                            z[f] = nv
                        else:
                            z.pop(f, None)
                z.pop(e.sigma, None)
        return {c: v for c, v in z.items() if v}

    def project_cycle(self, chain: dict) -> tuple[list[int], bool]:
        """Coordinates of a relative 1-cycle over this block's free generators,
        plus whether the class is free of torsion residue."""
        z = self._project_to_terminal(chain)
        if not z:
            return [0] * self.h1_rank, True
        y = [0] * len(self.edges)
        eidx = {e: k for k, e in enumerate(self.edges)}
        for c, v in z.items():
            k = eidx.get(c)
            if k is None:
                raise ChainSolveFailure(f"projected chain leaves the cycle space at {c!r}")
            y[k] = v
        if self._U is None:
            w = y
        else:
            n = len(self.edges)
            w = [sum(self._U[i][k] * y[k] for k in range(n)) for i in range(n)]
        clean = True
        for k, d in enumerate(self._diag):
            rem = w[k] % d if d else w[k]
            if d == 1:
                continue
            if rem:
                clean = False
        return [w[p] for p in self._free_pos], clean

    def lift_terminal_chain(self, chain: dict) -> dict:
        z = {c: v for c, v in chain.items() if v}
        for e in reversed(self.log):
            if e.k != 0:
                continue
            s = 0
            for f, zc in z.items():
                coeff = e.sigma_row.get(f)
                if coeff:
                    s += zc * coeff
            if s:
                nv = z.get(e.tau, 0) - e.lam * s
                if nv:
                    z[e.tau] = nv
                else:
                    z.pop(e.tau, None)
        return z

    def free_generators(self) -> list[dict]:
        gens = []
        n = len(self.edges)
        for p in self._free_pos:
            if self._Ui is None:
                y = {self.edges[p]: 1}
            else:
                y = {}
                for i in range(n):
                    v = self._Ui[i][p]
                    if v:
                        y[self.edges[i]] = v
            gens.append(self.lift_terminal_chain(y))
        return gens

    def project_vertex_chain(self, chain: dict) -> dict:
        """Push a 0-chain to the terminal vertex basis (connected-component class)."""
        z = dict(chain)
        for e in self.log:
            if e.k != 0:
                continue
            c = z.get(e.sigma)
            if c:
                for f, cf in e.bdtau.items():
                    if f == e.sigma:
                        continue
                    nv = z.get(f, 0) - e.lam * c * cf
                    if nv:
                        z[f] = nv
                    else:
                        z.pop(f, None)
                del z[e.sigma]
        return {c: v for c, v in z.items() if v}


# ---------------------------------------------------------------------------
# Assembly over all blocks of an index pair
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Generator:
    chain: dict
    block: int
    order: int  # 0 for free generators, torsion order otherwise


@dataclass
class HomologyData:
    """Ranks, torsion and generator data of H_*(P1, P0; Z) in dims 0 and 1."""

    h0_rank: int
    h1_rank: int
    torsion: dict[int, list[int]]
    generators: list[Generator]          # free H1 generators, block-ordered
    blocks: list[frozenset]              # squares per block
    block_complexes: list[BlockComplex] = field(repr=False, default_factory=list)
    cell_block: dict = field(repr=False, default_factory=dict)

    def project_cycle(self, chain: dict) -> tuple[list[int], bool]:
        """Coordinates of a relative 1-cycle over all free generators."""
        per_block: dict[int, dict] = {}
        for cell, v in chain.items():
            if not v:
                continue
            b = self.cell_block.get(cell)
            if b is None:
                raise ChainSolveFailure(f"chain touches cell outside the pair: {cell!r}")
            per_block.setdefault(b, {})[cell] = v
        coords: list[int] = []
        clean = True
        for b, cx in enumerate(self.block_complexes):
            part = per_block.get(b, {})
            c, ok = cx.project_cycle(part)
            coords.extend(c)
            clean = clean and ok
        return coords, clean

    def to_json(self) -> dict:
        return {
            "h0_rank": self.h0_rank,
            "h1_rank": self.h1_rank,
            "torsion": {str(k): v for k, v in self.torsion.items()},
            "generators": [
                {"block": g.block, "order": g.order,
                 "chain": [[list(c), v] for c, v in sorted(g.chain.items())]}
                for g in self.generators
            ],
            "blocks": [sorted(map(list, b)) for b in self.blocks],
        }


def _quotient_blocks(pair: IndexPair):
    """Partition quotient cells by connectivity through non-exit cells."""
    p0_cells = cells_of_squares(pair.p0.squares)
    quotient = [c for c in cells_of_squares(pair.p1.squares) if c not in p0_cells]
    member = frozenset(quotient)
    parent = {c: c for c in quotient}

    def find(c):
        root = c
        while parent[root] != root:
            root = parent[root]
        while parent[c] != root:
            parent[c], c = root, parent[c]
        return root

    for c in quotient:
        for f, _ in boundary(c):
            if f in member:
                ra, rb = find(c), find(f)
                if ra != rb:
                    parent[ra] = rb
    groups: dict[Cell, list[Cell]] = {}
    for c in quotient:
        groups.setdefault(find(c), []).append(c)
    blocks = sorted(groups.values(), key=lambda cells: min(cells))
    return blocks, member


def relative_homology(pair: IndexPair) -> HomologyData:
    """H_k(P1, P0; Z) for k = 0, 1 via quotient chain complex reduction."""
    blocks, member = _quotient_blocks(pair)
    complexes = [BlockComplex(cells, member) for cells in blocks]
    gens: list[Generator] = []
    torsion1: list[int] = []
    cell_block: dict[Cell, int] = {}
    block_squares: list[frozenset] = []
    for bi, (cells, cx) in enumerate(zip(blocks, complexes)):
        for c in cells:
            cell_block[c] = bi
        block_squares.append(frozenset((i, j) for (k, i, j) in cells if k == SQUARE))
        for chain in cx.free_generators():
            gens.append(Generator(chain=chain, block=bi, order=0))
        torsion1.extend(cx.h1_torsion)
    return HomologyData(
        h0_rank=sum(cx.h0_rank for cx in complexes),
        h1_rank=sum(cx.h1_rank for cx in complexes),
        torsion={0: [], 1: sorted(torsion1)},
        generators=gens,
        blocks=block_squares,
        block_complexes=complexes,
        cell_block=cell_block,
    )
