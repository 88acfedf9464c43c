"""Combinatorial outer approximation of the Henon map on grid boxes.

`build_boxmap` grows the active set as the closure of a seed cover under the
enclosure image, records per-box out-edges (targets inside the window) and an
escape flag for boxes whose image leaves the window.  Trimming, strongly
connected components and spatial components operate on the resulting graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, EmptyCover
from .grid import BoxId, GridSpec, _div_down, _div_up
from .interval import Rect2, henon_enclosure_batch

_BATCH = 4096


@dataclass(frozen=True)
class BoxMap:
    grid: GridSpec
    a: float
    b: float
    active: tuple[BoxId, ...]
    edges: dict[BoxId, tuple[BoxId, ...]]
    escapes: frozenset[BoxId]

    def successors(self, box: BoxId) -> tuple[BoxId, ...]:
        return self.edges[box]

    def restrict(self, keep: set[BoxId]) -> "BoxMap":
        act = tuple(sorted(b for b in self.active if b in keep))
        edges = {b: tuple(t for t in self.edges[b] if t in keep) for b in act}
        return BoxMap(self.grid, self.a, self.b, act, edges,
                      frozenset(b for b in self.escapes if b in keep))

    def to_json(self) -> dict:
        return {
            "grid": self.grid.to_json(),
            "a": self.a,
            "b": self.b,
            "active": [list(b) for b in self.active],
            "edges": {f"{i},{j}": [list(t) for t in self.edges[(i, j)]] for (i, j) in self.active},
            "escapes": sorted([list(b) for b in self.escapes]),
        }

    @classmethod
    def from_json(cls, data: dict) -> "BoxMap":
        grid = GridSpec.from_json(data["grid"])
        active = tuple(tuple(b) for b in data["active"])
        edges = {}
        for key, targets in data["edges"].items():
            i, j = key.split(",")
            edges[(int(i), int(j))] = tuple(tuple(t) for t in targets)
        return cls(grid, data["a"], data["b"], active, edges,
                   frozenset(tuple(b) for b in data["escapes"]))


def _cell_float_bounds(grid: GridSpec, boxes: Sequence[BoxId]):
    """Outward float bounds of exact cells, batched without Fraction overhead."""
    ax, ay = grid._ax, grid._ay
    anx, and_ = ax.c.numerator, ax.c.denominator
    snx, sdx = ax.s.numerator, ax.s.denominator
    any_, andy = ay.c.numerator, ay.c.denominator
    sny, sdy = ay.s.numerator, ay.s.denominator
    dx = and_ * sdx
    dy = andy * sdy
    ax_a, ax_b = anx * sdx, snx * and_   # x edge(i) = (ax_a + i*ax_b) / dx
    ay_a, ay_b = any_ * sdy, sny * andy
    xlo = np.array([_div_down(ax_a + i * ax_b, dx) for i, _ in boxes])
    xhi = np.array([_div_up(ax_a + (i + 1) * ax_b, dx) for i, _ in boxes])
    ylo = np.array([_div_down(ay_a + j * ay_b, dy) for _, j in boxes])
    yhi = np.array([_div_up(ay_a + (j + 1) * ay_b, dy) for _, j in boxes])
    return xlo, xhi, ylo, yhi


def build_boxmap(grid: GridSpec, a: float, b: float,
                 seed: Rect2 | Iterable[Rect2], max_boxes: int = 2_000_000) -> BoxMap:
    """Closure of the seed cover under the enclosure image, inside the window."""
    if max_boxes < 1:
        raise BudgetExceeded(max_boxes, 1)
    seeds = [seed] if isinstance(seed, Rect2) else list(seed)
    initial: set[BoxId] = set()
    any_hit = False
    for rect in seeds:
        ids, _ = grid.cover_with_escape(rect)
        if ids:
            any_hit = True
        initial.update(ids)
    if not any_hit:
        raise EmptyCover("seed region does not meet the window")

    active: set[BoxId] = set()
    edges: dict[BoxId, tuple[BoxId, ...]] = {}
    escapes: set[BoxId] = set()
    queue: deque[BoxId] = deque(sorted(initial))
    queued = set(initial)
    if len(queued) > max_boxes:
        raise BudgetExceeded(max_boxes, len(queued))

    while queue:
        batch = []
        while queue and len(batch) < _BATCH:
            batch.append(queue.popleft())
        xlo, xhi, ylo, yhi = _cell_float_bounds(grid, batch)
        nxlo, nxhi, nylo, nyhi = henon_enclosure_batch(xlo, xhi, ylo, yhi, a, b)
        for k, box in enumerate(batch):
            rect = Rect2.of(nxlo[k], nxhi[k], nylo[k], nyhi[k])
            targets, escaped = grid.cover_with_escape(rect)
            active.add(box)
            edges[box] = tuple(targets)
            if escaped:
                escapes.add(box)
            for t in targets:
                if t not in queued:
                    queued.add(t)
                    if len(queued) > max_boxes:
                        raise BudgetExceeded(max_boxes, len(queued))
                    queue.append(t)

    act = tuple(sorted(active))
    return BoxMap(grid, a, b, act, edges, frozenset(escapes))


def invariant_part(boxmap: BoxMap) -> BoxMap:
    """Maximal sub-box-set where every box has an in-edge, an out-edge and no
    escape flag; fixpoint of iterative deletion."""
    alive = set(b for b in boxmap.active if b not in boxmap.escapes)
    preds: dict[BoxId, set[BoxId]] = {b: set() for b in alive}
    out_deg: dict[BoxId, int] = {}
    for b in alive:
        succ = [t for t in boxmap.edges[b] if t in alive]
        out_deg[b] = len(succ)
        for t in succ:
            preds[t].add(b)
    in_deg = {b: len(preds[b]) for b in alive}

    dead = deque(b for b in sorted(alive) if out_deg[b] == 0 or in_deg[b] == 0)
    dead_set = set(dead)
    while dead:
        b = dead.popleft()
        alive.discard(b)
        for t in boxmap.edges[b]:
            if t in alive:
                in_deg[t] -= 1
                if in_deg[t] == 0 and t not in dead_set:
                    dead_set.add(t)
                    dead.append(t)
        for p in preds[b]:
            if p in alive:
                out_deg[p] -= 1
                if out_deg[p] == 0 and p not in dead_set:
                    dead_set.add(p)
                    dead.append(p)
    return boxmap.restrict(alive)


def scc_partition(boxmap: BoxMap) -> list[tuple[tuple[BoxId, ...], bool]]:
    """Strongly connected components, each tagged cyclic iff it has an
    internal edge.  Iterative Tarjan, deterministic order."""
    index: dict[BoxId, int] = {}
    low: dict[BoxId, int] = {}
    on_stack: set[BoxId] = set()
    stack: list[BoxId] = []
    counter = 0
    comps: list[tuple[BoxId, ...]] = []

    for root in boxmap.active:
        if root in index:
            continue
        work = [(root, iter(boxmap.edges[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = low[succ] = counter
                    counter += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(boxmap.edges[succ])))
                    advanced = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                comps.append(tuple(sorted(comp)))

    out: list[tuple[tuple[BoxId, ...], bool]] = []
    for comp in comps:
        members = set(comp)
        cyclic = len(comp) > 1 or any(t in members for t in boxmap.edges[comp[0]])
        out.append((comp, cyclic))
    out.sort(key=lambda cw: cw[0][0])
    return out


def spatial_components(boxes: Iterable[BoxId], grid: GridSpec | None = None) -> list[tuple[BoxId, ...]]:
    """Connected components under closed-box contact (8-neighborhood: sharing
    an edge or a corner).  Unions of distinct components are disjoint."""
    remaining = set(boxes)
    comps = []
    for start in sorted(remaining):
        if start not in remaining:
            continue
        comp = []
        queue = deque([start])
        remaining.discard(start)
        while queue:
            (i, j) = queue.popleft()
            comp.append((i, j))
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    nb = (i + di, j + dj)
                    if nb in remaining:
                        remaining.discard(nb)
                        queue.append(nb)
        comps.append(tuple(sorted(comp)))
    comps.sort(key=lambda c: c[0])
    return comps
