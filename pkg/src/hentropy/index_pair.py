"""Combinatorial index pairs built from invariant box sets.

The pair is (P1, P0) = (N ∪ F(N), F(N) \\ N) with N the invariant box set.
Conditions checked explicitly before a pair is returned:

  * images of N stay inside P1 (by construction, asserted);
  * no exit box maps back into N;
  * no box of N touches the window boundary, and the invariant part of the
    map restricted to the one-box collar o(N) stays inside N, so |o(N)| is an
    isolating neighborhood with the invariant set in its interior.

On a violation, N is grown by one adjacency layer of non-escaping active
boxes (with the images that brings in), at most twice, before giving up:
failures mean the resolution is too coarse.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .boxmap import BoxMap, invariant_part, spatial_components
from .cubical import CubicalSet
from .errors import EmptyInvariantSet, IsolationFailure
from .grid import BoxId


@dataclass(frozen=True)
class IndexPair:
    p1: CubicalSet
    p0: CubicalSet
    fmap: dict[BoxId, tuple[BoxId, ...]]   # box images restricted to P1
    images: dict[BoxId, tuple[BoxId, ...]] | None = None   # unrestricted covers

    def __post_init__(self):
        if not self.p0.squares <= self.p1.squares:
            raise ValueError("P0 must be a subset of P1")

    def image_of(self, square: BoxId) -> tuple[BoxId, ...]:
        """Window-clipped image cover of a P1 square (not P1-restricted)."""
        if self.images is not None:
            return self.images[square]
        return self.fmap[square]

    @property
    def interior(self) -> frozenset[BoxId]:
        return self.p1.squares - self.p0.squares

    def digest(self) -> str:
        payload = json.dumps(
            [sorted(map(list, self.p1.squares)), sorted(map(list, self.p0.squares))],
            separators=(",", ":"),
        ).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def _touching(n_set: set[BoxId]) -> set[BoxId]:
    halo: set[BoxId] = set()
    for (i, j) in n_set:
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                halo.add((i + di, j + dj))
    return halo


def _image(box: BoxId, minv: BoxMap, context: BoxMap) -> tuple[BoxId, ...]:
    if box in context.edges:
        return context.edges[box]
    if box in minv.edges:
        return minv.edges[box]
    raise IsolationFailure(f"no image data for box {box}")


def build_index_pair(minv: BoxMap, context: BoxMap | None = None) -> IndexPair:
    """Index pair around the invariant part `minv`; `context` is the untrimmed
    box map supplying images and neighbors for the exit set and the isolation
    check."""
    if not minv.active:
        raise EmptyInvariantSet("no invariant boxes at this resolution")
    ctx = context if context is not None else minv
    grid = ctx.grid
    imin, imax, jmin, jmax = grid.index_bounds
    n_set = set(minv.active)

    for attempt in range(3):
        for q in n_set:
            if q in ctx.escapes:
                raise IsolationFailure(f"box {q} in the pair core escapes the window")
            i, j = q
            if i in (imin, imax) or j in (jmin, jmax):
                raise IsolationFailure(
                    f"box {q} touches the window boundary; enlarge the window")

        images: dict[BoxId, tuple[BoxId, ...]] = {}
        p1: set[BoxId] = set(n_set)
        for q in sorted(n_set):
            targets = _image(q, minv, ctx)
            images[q] = targets
            p1.update(targets)

        # forward-close the exit set so it is positively invariant within the
        # pair: images of exit boxes stay in the exit set (or leave the window)
        violation = None
        p0: set[BoxId] = set()
        frontier = sorted(p1 - n_set)
        while frontier and violation is None:
            nxt: set[BoxId] = set()
            for w in frontier:
                if w in p0:
                    continue
                p0.add(w)
                targets = _image(w, minv, ctx)
                images[w] = targets
                back = [t for t in targets if t in n_set]
                if back:
                    violation = f"exit box {w} maps back into the core"
                    break
                nxt.update(t for t in targets if t not in p0)
            frontier = sorted(nxt)
        p1 = n_set | p0

        if violation is None and ctx is not minv:
            # isolation: the invariant part of the collar-restricted map must
            # not reach into the collar
            collar_region = _touching(n_set) & set(ctx.active)
            restricted = ctx.restrict(collar_region)
            inner = set(invariant_part(restricted).active)
            spill = inner - n_set
            if spill:
                w = sorted(spill)[0]
                violation = f"collar box {w} is recurrent next to the core"

        if violation is None:
            fmap = {q: tuple(t for t in images[q] if t in p1) for q in sorted(p1)}
            full = {q: tuple(images[q]) for q in sorted(p1)}
            return IndexPair(CubicalSet(frozenset(p1)), CubicalSet(frozenset(p0)),
                             fmap, full)

        if attempt == 2:
            raise IsolationFailure(f"{violation}; resolution too coarse")
        halo = _touching(n_set)
        layer = {w for w in ctx.active
                 if w in halo and w not in n_set and w not in ctx.escapes}
        if not layer:
            raise IsolationFailure(f"{violation}; no room to grow the pair")
        n_set |= layer
    raise IsolationFailure("unreachable")  # pragma: no cover


def interior_components(pair: IndexPair) -> list[tuple[BoxId, ...]]:
    """Spatial components of P1 \\ P0 (the symbol regions)."""
    return spatial_components(pair.interior)
