"""Amalgamation of transition-matrix vertices and strong shift equivalence.

All matrices here use the column-as-source convention, so the image of vertex
i is the column A e_i and the two contraction conditions read exactly as:

    forward:  A e_i = A e_j  and  (e_i^T A) . (e_j^T A) = 0
    backward: e_i^T A = e_j^T A  and  (A e_i) . (A e_j) = 0

An amalgamation of i and j (j deleted, i kept) is witnessed by an elementary
shift equivalence (R, S) with A_prev = R S and A_next = S R, checked in exact
integer arithmetic before anything is returned.  Chains of such witnesses form
machine-checkable certificates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditionNotSatisfied, SearchBudgetExceeded
from .subshift import TransitionMatrix

Mat = tuple[tuple[int, ...], ...]


def mat_mul(a: Mat, b: Mat) -> Mat:
    rows_a = len(a)
    inner = len(b)
    cols_b = len(b[0]) if inner else 0
    assert all(len(r) == inner for r in a), "dimension mismatch"
    out = []
    for i in range(rows_a):
        ai = a[i]
        row = [0] * cols_b
        for k in range(inner):
            v = ai[k]
            if v:
                bk = b[k]
                for j in range(cols_b):
                    row[j] += v * bk[j]
        out.append(tuple(row))
    return tuple(out)


def mat_transpose(a: Mat) -> Mat:
    if not a:
        return ()
    return tuple(zip(*[tuple(r) for r in a]))


def spectral_radius(entries) -> float:
    arr = np.array(entries, dtype=np.float64)
    if arr.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(arr))))


def forward_condition(matrix: TransitionMatrix, i: int, j: int) -> bool:
    """Same image, disjoint preimages.  i == j is not amalgamable."""
    if i == j:
        return False
    e = matrix.entries
    n = matrix.n
    if any(e[r][i] != e[r][j] for r in range(n)):
        return False
    return all(e[i][c] * e[j][c] == 0 for c in range(n))


def backward_condition(matrix: TransitionMatrix, i: int, j: int) -> bool:
    """Same preimage, disjoint images; the forward condition for A^T."""
    if i == j:
        return False
    e = matrix.entries
    n = matrix.n
    if any(e[i][c] != e[j][c] for c in range(n)):
        return False
    return all(e[r][i] * e[r][j] == 0 for r in range(n))


def _xy(n: int, i: int, j: int) -> tuple[Mat, Mat]:
    """The n x (n-1) matrix X (row j zero) and (n-1) x n matrix Y (column j
    pointing at the slot of i) used to contract j into i."""
    x = []
    for r in range(n):
        row = [0] * (n - 1)
        if r != j:
            row[r if r < j else r - 1] = 1
        x.append(tuple(row))
    pos_i = i if i < j else i - 1
    y = []
    for r in range(n - 1):
        row = [0] * n
        src = r if r < j else r + 1
        row[src] = 1
        if r == pos_i:
            row[j] = 1
        y.append(tuple(row))
    return tuple(x), tuple(y)


def amalgamate(matrix: TransitionMatrix, i: int, j: int, direction: str):
    """Contract vertices i and j (keeping label i); returns (B, (R, S)) with
    A = R S and B = S R verified exactly."""
    a: Mat = matrix.entries
    n = matrix.n
    if direction == "forward":
        if not forward_condition(matrix, i, j):
            raise ConditionNotSatisfied(f"forward condition fails for ({i}, {j})")
        x, y = _xy(n, i, j)
        b = mat_mul(y, mat_mul(a, x))
        r, s = mat_mul(a, x), y
    elif direction == "backward":
        if not backward_condition(matrix, i, j):
            raise ConditionNotSatisfied(f"backward condition fails for ({i}, {j})")
        x, y = _xy(n, i, j)
        xt, yt = mat_transpose(x), mat_transpose(y)
        b = mat_mul(xt, mat_mul(a, yt))
        r, s = yt, mat_mul(xt, a)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    assert mat_mul(r, s) == a, "R*S != A"
    assert mat_mul(s, r) == b, "S*R != B"
    return TransitionMatrix.from_columns(b), (r, s)


@dataclass
class SSECertificate:
    """Chain of elementary shift equivalences A_0 -> ... -> A_k."""

    matrices: list[Mat]
    steps: list[tuple[Mat, Mat]]
    region_merge_log: list[dict] = field(default_factory=list)
    symbol_groups: list[tuple[int, ...]] = field(default_factory=list)

    def verify(self) -> bool:
        if len(self.matrices) != len(self.steps) + 1:
            return False
        for k, (r, s) in enumerate(self.steps):
            try:
                if mat_mul(r, s) != self.matrices[k]:
                    return False
                if mat_mul(s, r) != self.matrices[k + 1]:
                    return False
            except (AssertionError, IndexError):
                return False
        return True

    def failing_step(self) -> int | None:
        for k, (r, s) in enumerate(self.steps):
            try:
                if mat_mul(r, s) != self.matrices[k] or mat_mul(s, r) != self.matrices[k + 1]:
                    return k
            except (AssertionError, IndexError):
                return k
        return None

    def to_json(self) -> dict:
        return {
            "convention": "column-as-source",
            "matrices": [[list(row) for row in m] for m in self.matrices],
            "steps": [
                {"R": [list(row) for row in r], "S": [list(row) for row in s]}
                for (r, s) in self.steps
            ],
            "region_merge_log": self.region_merge_log,
            "symbol_groups": [list(g) for g in self.symbol_groups],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SSECertificate":
        return cls(
            matrices=[tuple(tuple(int(v) for v in row) for row in m) for m in data["matrices"]],
            steps=[
                (
                    tuple(tuple(int(v) for v in row) for row in st["R"]),
                    tuple(tuple(int(v) for v in row) for row in st["S"]),
                )
                for st in data["steps"]
            ],
            region_merge_log=list(data.get("region_merge_log", [])),
            symbol_groups=[tuple(g) for g in data.get("symbol_groups", [])],
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "SSECertificate":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


class _Tracker:
    """Applies amalgamation moves while accumulating a certificate."""

    def __init__(self, matrix: TransitionMatrix):
        self.current = matrix
        self.matrices: list[Mat] = [matrix.entries]
        self.steps: list[tuple[Mat, Mat]] = []
        self.groups: list[tuple[int, ...]] = [(k,) for k in range(matrix.n)]
        self.log: list[dict] = []

    def apply(self, direction: str, i: int, j: int) -> None:
        nxt, (r, s) = amalgamate(self.current, i, j, direction)
        self.log.append({
            "step": len(self.steps),
            "direction": direction,
            "kept_group": list(self.groups[i]),
            "absorbed_group": list(self.groups[j]),
        })
        merged = tuple(sorted(self.groups[i] + self.groups[j]))
        groups = list(self.groups)
        groups[i] = merged
        del groups[j]
        self.groups = groups
        self.current = nxt
        self.matrices.append(nxt.entries)
        self.steps.append((r, s))

    def certificate(self) -> SSECertificate:
        return SSECertificate(
            matrices=list(self.matrices),
            steps=list(self.steps),
            region_merge_log=list(self.log),
            symbol_groups=list(self.groups),
        )


def _valid_moves(matrix: TransitionMatrix):
    n = matrix.n
    for direction in ("forward", "backward"):
        cond = forward_condition if direction == "forward" else backward_condition
        for i in range(n):
            for j in range(n):
                if i != j and cond(matrix, i, j):
                    yield direction, i, j


def _first_move(matrix: TransitionMatrix):
    for move in _valid_moves(matrix):
        return move
    return None


# ---------------------------------------------------------------------------
# Canonical form (memo key and permutation matching)
# ---------------------------------------------------------------------------

def _refine_colors(entries: Mat) -> list:
    n = len(entries)
    colors: list = [
        (sum(entries[r][v] for r in range(n)),   # out-degree of v (column sum)
         sum(entries[v][c] for c in range(n)),   # in-degree
         entries[v][v])
        for v in range(n)
    ]
    for _ in range(n):
        sigs = []
        for v in range(n):
            outs = sorted(colors[r] for r in range(n) if entries[r][v])
            ins = sorted(colors[c] for c in range(n) if entries[v][c])
            sigs.append((colors[v], tuple(outs), tuple(ins)))
        if len(set(sigs)) == len(set(colors)):
            colors = sigs
            break
        colors = sigs
    return colors


def canonical_form(entries: Mat) -> tuple[bytes, tuple[int, ...]]:
    """Lexicographically minimal adjacency bytes over color-respecting
    orderings; returns (bytes, permutation old->new position)."""
    n = len(entries)
    if n == 0:
        return b"", ()
    colors = _refine_colors(entries)
    order_of = sorted(range(n), key=lambda v: (colors[v], v))
    # group vertices into classes with identical colors, in canonical class order
    classes: list[list[int]] = []
    for v in order_of:
        if classes and colors[classes[-1][0]] == colors[v]:
            classes[-1].append(v)
        else:
            classes.append([v])

    best: dict = {"bytes": None, "perm": None}

    def emit(perm: list[int]) -> bytes:
        return bytes(entries[perm[r]][perm[c]] for r in range(n) for c in range(n))

    def extend(perm: list[int], cls_idx: int, remaining: list[int]):
        if not remaining:
            if cls_idx + 1 == len(classes):
                cand = emit(perm)
                if best["bytes"] is None or cand < best["bytes"]:
                    best["bytes"] = cand
                    best["perm"] = list(perm)
                return
            extend(perm, cls_idx + 1, list(classes[cls_idx + 1]))
            return
        k = len(perm)
        if best["bytes"] is not None:
            # prune on the decided top-left block
            cand = bytes(entries[perm[r]][perm[c]] for r in range(k) for c in range(k))
            ref = bytes(best["bytes"][r * n + c] for r in range(k) for c in range(k))
            if cand > ref:
                return
        for idx, v in enumerate(remaining):
            extend(perm + [v], cls_idx, remaining[:idx] + remaining[idx + 1:])

    extend([], 0, list(classes[0]))
    perm = best["perm"]
    positions = [0] * n
    for pos, v in enumerate(perm):
        positions[v] = pos
    return best["bytes"], tuple(positions)


# ---------------------------------------------------------------------------
# Reduction strategies
# ---------------------------------------------------------------------------

def reduce_matrix(matrix: TransitionMatrix, strategy: str = "greedy",
                  node_limit: int = 16, node_budget: int = 200_000):
    """Reduce by repeated amalgamation.  greedy: first valid move in
    (direction, i, j) order.  exhaustive: branch over all move orders,
    memoized on canonical form, returning a smallest reachable matrix.
    Matrices larger than node_limit are first shrunk greedily."""
    tracker = _Tracker(matrix)
    if strategy not in ("greedy", "exhaustive"):
        raise ValueError(f"unknown strategy {strategy!r}")

    if strategy == "greedy":
        while True:
            move = _first_move(tracker.current)
            if move is None:
                break
            tracker.apply(*move)
        return tracker.current, tracker.certificate()

    while tracker.current.n > node_limit:
        move = _first_move(tracker.current)
        if move is None:
            break
        tracker.apply(*move)

    if tracker.current.n <= node_limit:
        memo: dict[bytes, tuple[int, bytes, tuple]] = {}

        def search(m: TransitionMatrix) -> tuple[int, bytes, tuple]:
            key, _ = canonical_form(m.entries)
            hit = memo.get(key)
            if hit is not None:
                return hit
            if len(memo) >= node_budget:
                raise SearchBudgetExceeded(f"more than {node_budget} states explored")
            best = (m.n, key, ())
            for move in _valid_moves(m):
                direction, i, j = move
                child, _ = amalgamate(m, i, j, direction)
                size, canon, moves = search(child)
                cand = (size, canon, (move,) + moves)
                if (cand[0], cand[1]) < (best[0], best[1]):
                    best = cand
            memo[key] = best
            return best

        _, _, moves = search(tracker.current)
        for move in moves:
            tracker.apply(*move)

    return tracker.current, tracker.certificate()


# ---------------------------------------------------------------------------
# Conjugacy up to symbol permutation
# ---------------------------------------------------------------------------

@dataclass
class ConjugacyDecision:
    decided: bool
    certificate: SSECertificate | None
    permutation: tuple[int, ...] | None     # reduced-A index -> reduced-B index
    diagnostics: dict


def _permutation_step(a_star: Mat, positions: tuple[int, ...]) -> tuple[Mat, Mat, Mat]:
    """Elementary equivalence relabelling A* by the permutation: B* = P A* P^T."""
    n = len(a_star)
    p = tuple(
        tuple(1 if positions[c] == r else 0 for c in range(n)) for r in range(n)
    )
    b_star = mat_mul(p, mat_mul(a_star, mat_transpose(p)))
    r = mat_mul(a_star, mat_transpose(p))
    return b_star, r, p


def conjugate_up_to_permutation(a: TransitionMatrix, b: TransitionMatrix,
                                node_limit: int = 16,
                                node_budget: int = 200_000) -> ConjugacyDecision:
    """Try to certify conjugacy of the subshifts of A and B by amalgamating
    both to canonical reduced forms and matching them up to permutation.
    An undecided outcome is not a disproof (amalgamation-only is incomplete)."""
    a_red, a_cert = reduce_matrix(a, "exhaustive", node_limit, node_budget)
    b_red, b_cert = reduce_matrix(b, "exhaustive", node_limit, node_budget)
    diag = {
        "a_reduced": a_red.n,
        "b_reduced": b_red.n,
        "sp_a": spectral_radius(a.entries),
        "sp_b": spectral_radius(b.entries),
    }
    if a_red.n != b_red.n:
        diag["reason"] = "reduced sizes differ"
        return ConjugacyDecision(False, None, None, diag)
    ca, pa = canonical_form(a_red.entries)
    cb, pb = canonical_form(b_red.entries)
    if ca != cb:
        diag["reason"] = "reduced forms not isomorphic"
        return ConjugacyDecision(False, None, None, diag)
    inv_pb = [0] * b_red.n
    for v, pos in enumerate(pb):
        inv_pb[pos] = v
    perm = tuple(inv_pb[pa[v]] for v in range(a_red.n))   # A*-index -> B*-index

    matrices = list(a_cert.matrices)
    steps = list(a_cert.steps)
    b_star, r, p = _permutation_step(a_red.entries, perm)
    assert b_star == b_red.entries, "permutation does not match the reduced forms"
    matrices.append(b_star)
    steps.append((r, p))
    for k in range(len(b_cert.steps) - 1, -1, -1):
        rb, sb = b_cert.steps[k]
        matrices.append(b_cert.matrices[k])
        steps.append((sb, rb))
    cert = SSECertificate(
        matrices=matrices,
        steps=steps,
        region_merge_log=list(a_cert.region_merge_log),
        symbol_groups=list(a_cert.symbol_groups),
    )
    assert cert.verify(), "assembled certificate failed verification"
    diag["reason"] = "conjugate"
    return ConjugacyDecision(True, cert, perm, diag)
