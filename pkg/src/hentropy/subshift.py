"""Verified subshifts and certified spectral-radius entropy lower bounds.

Internally, transition matrices use the column-as-source convention: entry
(i, j) = 1 means symbol j can be followed by symbol i, so the image of symbol
j is the column A e_j.  Text files use row-as-source and are transposed on
load.  The certified bound is Collatz-Wielandt in exact rationals: for any
positive integer vector v and nonnegative irreducible A, sp(A) >= min_i
(A v)_i / v_i, followed by a down-rounded rational logarithm.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import MatrixParseError, Unverifiable
from .grid import BoxId
from .index_map import IndexMapData
from .index_pair import IndexPair


@dataclass(frozen=True)
class TransitionMatrix:
    """0/1 matrix, column-as-source; `entries[i][j]` is the j -> i transition."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.entries)
        for row in self.entries:
            if len(row) != n:
                raise ValueError("transition matrix must be square")
            if any(v not in (0, 1) for v in row):
                raise ValueError("transition matrix entries must be 0 or 1")

    @property
    def n(self) -> int:
        return len(self.entries)

    @classmethod
    def from_rows(cls, rows) -> "TransitionMatrix":
        """Build from row-as-source data (file convention)."""
        rows = [tuple(int(v) for v in r) for r in rows]
        n = len(rows)
        return cls(tuple(tuple(rows[j][i] for j in range(n)) for i in range(n)))

    @classmethod
    def from_columns(cls, cols) -> "TransitionMatrix":
        """Build from column-as-source data (internal convention)."""
        return cls(tuple(tuple(int(v) for v in r) for r in cols))

    def to_rows(self) -> list[list[int]]:
        """Row-as-source view for I/O."""
        n = self.n
        return [[self.entries[i][j] for i in range(n)] for j in range(n)]

    def digest(self) -> str:
        payload = ";".join("".join(map(str, r)) for r in self.entries).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def __str__(self):
        return "\n".join(" ".join(map(str, r)) for r in self.to_rows())


def load_matrix(path) -> TransitionMatrix:
    rows = []
    n = None
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if n is None:
                if len(parts) != 1 or not parts[0].isdigit():
                    raise MatrixParseError(path, ln, "expected the symbol count")
                n = int(parts[0])
                continue
            if len(parts) != n:
                raise MatrixParseError(path, ln, f"expected {n} entries, got {len(parts)}")
            try:
                row = [int(p) for p in parts]
            except ValueError:
                raise MatrixParseError(path, ln, "entries must be integers") from None
            if any(v not in (0, 1) for v in row):
                raise MatrixParseError(path, ln, "entries must be 0 or 1")
            rows.append(row)
    if n is None or len(rows) != n:
        raise MatrixParseError(path, 0, f"expected {n or '?'} rows, got {len(rows)}")
    return TransitionMatrix.from_rows(rows)


def save_matrix(path, matrix: TransitionMatrix) -> None:
    with open(path, "w") as fh:
        fh.write(f"{matrix.n}\n")
        for row in matrix.to_rows():
            fh.write(" ".join(map(str, row)) + "\n")


# ---------------------------------------------------------------------------
# Certified logarithm
# ---------------------------------------------------------------------------

_SERIES_TERMS = 30


def _atanh_series_lower(z: Fraction, terms: int = _SERIES_TERMS) -> Fraction:
    """Partial sum of 2*atanh(z); underestimates ln((1+z)/(1-z)) for z >= 0."""
    total = Fraction(0)
    zz = z * z
    power = z
    for t in range(terms):
        total += power / (2 * t + 1)
        power *= zz
    return 2 * total


_LN2_LOWER = _atanh_series_lower(Fraction(1, 3))  # ln 2 = 2 atanh(1/3)


def _float_down(x: Fraction) -> float:
    f = float(x)
    if Fraction(f) > x:
        f = math.nextafter(f, -math.inf)
    return f


def log_lower_bound(beta: Fraction) -> float:
    """A double certified to be <= ln(beta), for beta >= 1."""
    if beta < 1:
        raise ValueError("certified log only for beta >= 1")
    k = 0
    m = beta
    while m >= 2:
        m /= 2
        k += 1
    z = (m - 1) / (m + 1)
    total = k * _LN2_LOWER + _atanh_series_lower(z)
    return max(0.0, _float_down(total))


# ---------------------------------------------------------------------------
# Spectral radius bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundWitness:
    symbols: tuple[int, ...]          # SCC used, original matrix indices
    vector: tuple[int, ...]           # positive integer vector over the SCC
    beta: Fraction                    # exact Collatz-Wielandt ratio

    def to_json(self) -> dict:
        return {
            "symbols": list(self.symbols),
            "vector": list(self.vector),
            "beta": f"{self.beta.numerator}/{self.beta.denominator}",
        }

    @classmethod
    def from_json(cls, data) -> "BoundWitness":
        p, q = data["beta"].split("/")
        return cls(tuple(data["symbols"]), tuple(data["vector"]), Fraction(int(p), int(q)))


@dataclass(frozen=True)
class EntropyBound:
    value: float                      # certified: value <= log sp(A)
    witness: BoundWitness | None
    estimate: float                   # non-rigorous, for plots


def _tarjan(n: int, succ) -> list[list[int]]:
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            node, it = work[-1]
            advanced = False
            for s in it:
                if index[s] == -1:
                    index[s] = low[s] = counter
                    counter += 1
                    stack.append(s)
                    on_stack[s] = True
                    work.append((s, iter(succ(s))))
                    advanced = True
                    break
                if on_stack[s]:
                    low[node] = min(low[node], index[s])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == node:
                        break
                comps.append(sorted(comp))
    return comps


def cyclic_components(entries) -> list[list[int]]:
    """Strongly connected components containing at least one edge."""
    n = len(entries)

    def succ(j):
        return [i for i in range(n) if entries[i][j]]

    out = []
    for comp in _tarjan(n, succ):
        if len(comp) > 1 or entries[comp[0]][comp[0]]:
            out.append(comp)
    return sorted(out)


def _power_vector(sub: np.ndarray, iterations: int) -> np.ndarray:
    """(I + A)-power iteration, normalized; positive for irreducible A."""
    k = sub.shape[0]
    v = np.ones(k)
    for _ in range(iterations):
        v = v + sub @ v
        v = v / v.max()
    return v


def entropy_lower_bound(matrix: TransitionMatrix, iterations: int = 60) -> EntropyBound:
    """Certified lower bound for log sp(A) with an exactly checkable witness."""
    entries = matrix.entries
    best: tuple[Fraction, BoundWitness] | None = None
    for comp in cyclic_components(entries):
        sub = np.array([[entries[i][j] for j in comp] for i in comp], dtype=np.float64)
        v = _power_vector(sub, iterations)
        u = [max(1, int(round(x * (1 << 40)))) for x in v]
        av = [sum(entries[comp[i]][comp[j]] * u[j] for j in range(len(comp)))
              for i in range(len(comp))]
        beta = min(Fraction(av[i], u[i]) for i in range(len(comp)))
        if best is None or beta > best[0]:
            best = (beta, BoundWitness(tuple(comp), tuple(u), beta))
    estimate = entropy_estimate(matrix)
    if best is None:
        return EntropyBound(0.0, None, estimate)
    beta, witness = best
    value = log_lower_bound(beta) if beta >= 1 else 0.0
    return EntropyBound(value, witness, estimate)


def entropy_estimate(matrix: TransitionMatrix, max_iterations: int = 500) -> float:
    """Plain power-iteration estimate of log sp(A); no certificate."""
    entries = matrix.entries
    best = 0.0
    found = False
    for comp in cyclic_components(entries):
        sub = np.array([[entries[i][j] for j in comp] for i in comp], dtype=np.float64)
        v = np.ones(sub.shape[0])
        lo, hi = 0.0, float("inf")
        for _ in range(max_iterations):
            w = v + sub @ v
            ratios = w / v
            lo, hi = ratios.min() - 1.0, ratios.max() - 1.0
            v = w / w.max()
            if hi - lo < 1e-12:
                break
        sp = (lo + hi) / 2.0
        found = True
        if sp > best:
            best = sp
    if not found:
        return 0.0
    return math.log(best) if best > 0 else 0.0


def verify_entropy_witness(matrix: TransitionMatrix, witness: BoundWitness,
                           value: float) -> bool:
    """Re-check a persisted bound: exact Collatz-Wielandt ratio and log rounding."""
    entries = matrix.entries
    comp, u = witness.symbols, witness.vector
    if len(comp) != len(u) or any(x < 1 for x in u):
        return False
    av = [sum(entries[comp[i]][comp[j]] * u[j] for j in range(len(comp)))
          for i in range(len(comp))]
    beta = min(Fraction(av[i], u[i]) for i in range(len(comp)))
    if beta != witness.beta:
        return False
    certified = log_lower_bound(beta) if beta >= 1 else 0.0
    return value <= certified


# ---------------------------------------------------------------------------
# Subshift extraction from index data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifiedSubshift:
    matrix: TransitionMatrix
    regions: tuple[tuple[BoxId, ...], ...]      # symbol -> disjoint box sets
    signs: dict
    provenance: dict
    dropped_generators: int = 0

    def __post_init__(self):
        n = self.matrix.n
        if len(self.regions) != n:
            raise ValueError("one region per symbol required")
        halo: set[BoxId] = set()
        for region in self.regions:
            for (i, j) in region:
                if (i, j) in halo:
                    raise ValueError("symbol regions touch")
            for (i, j) in region:
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        halo.add((i + di, j + dj))


def extract_subshift(pair: IndexPair, index_map: IndexMapData,
                     comps: list[tuple[BoxId, ...]]) -> VerifiedSubshift:
    """Conservative verified subshift: keep components carrying exactly one
    torsion-free generator; require index-map entries in {0, +1, -1}."""
    hom = index_map.homology
    square_comp: dict[BoxId, int] = {}
    for ci, comp in enumerate(comps):
        for sq in comp:
            square_comp[sq] = ci

    gen_comp: list[int] = []
    for gen in hom.generators:
        squares = hom.blocks[gen.block]
        owners = {square_comp[sq] for sq in squares}
        if len(owners) != 1:
            raise Unverifiable("generator support spans several components")
        gen_comp.append(owners.pop())

    comp_gens: dict[int, list[int]] = {}
    for gi, ci in enumerate(gen_comp):
        comp_gens.setdefault(ci, []).append(gi)
    comp_torsion: dict[int, bool] = {ci: False for ci in comp_gens}
    for bi, cx in enumerate(hom.block_complexes):
        if cx.h1_torsion:
            squares = hom.blocks[bi]
            if squares:
                ci = square_comp[next(iter(squares))]
                comp_torsion[ci] = True

    used = [ci for ci in sorted(comp_gens)
            if len(comp_gens[ci]) == 1 and not comp_torsion.get(ci, False)]
    kept = [comp_gens[ci][0] for ci in used]
    total_gens = len(hom.generators)
    if not kept:
        raise Unverifiable("no component carries exactly one generator")

    imap = index_map.h1_matrix
    sub = [[imap[i][j] for j in kept] for i in kept]
    if any(abs(v) > 1 for row in sub for v in row):
        raise Unverifiable("index-map entries outside {0, +1, -1} after restriction")

    matrix = TransitionMatrix.from_columns([[abs(v) for v in row] for row in sub])
    signs = {}
    for i in range(len(kept)):
        for j in range(len(kept)):
            if sub[i][j]:
                signs[(i, j)] = 1 if sub[i][j] > 0 else -1
    regions = tuple(tuple(sorted(comps[ci])) for ci in used)
    provenance = {"index_pair_digest": pair.digest()}
    return VerifiedSubshift(
        matrix=matrix,
        regions=regions,
        signs=signs,
        provenance=provenance,
        dropped_generators=total_gens - len(kept),
    )
