"""Sweep orchestration: run records, the persistent run cache, parameter and
resolution sweeps, the bundled reference data, and conjugacy verification of
the bundled 8-symbol matrix against pipeline output."""

from __future__ import annotations

import gzip
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .boxmap import BoxMap, build_boxmap, invariant_part
from .errors import (BudgetExceeded, ChainSolveFailure, EmptyCover,
                     EmptyInvariantSet, HentropyError, IsolationFailure,
                     NonAcyclicCarrier, Unverifiable)
from .grid import BoxId, GridSpec, parse_resolution, resolution_schedule
from .homology import relative_homology
from .index_map import induced_index_map
from .index_pair import build_index_pair, interior_components
from .interval import Rect2
from .subshift import (BoundWitness, TransitionMatrix, VerifiedSubshift,
                       entropy_lower_bound, extract_subshift, load_matrix,
                       save_matrix, verify_entropy_witness)
from .sse import ConjugacyDecision, conjugate_up_to_permutation

DEFAULT_B0 = Rect2.of(-4.0, 4.0, -4.0, 4.0)
DEFAULT_WINDOW = Rect2.of(-5.0, 5.0, -5.0, 5.0)
LOG2_GUARD = math.log(2.0) + 1e-6
ROUNDING_NOTE = "scalar: exactness-checked one-ulp; batch: unconditional one-ulp"


def _code_digest() -> str:
    root = Path(__file__).parent
    h = hashlib.sha256()
    for path in sorted(root.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:12]


CODE_DIGEST = _code_digest()


def bundled_tdms() -> TransitionMatrix:
    with resources.as_file(resources.files("hentropy.data") / "t_dms.txt") as p:
        return load_matrix(p)


def bundled_plateaus() -> dict:
    text = (resources.files("hentropy.data") / "plateaus_ap.json").read_text()
    return json.loads(text)


def format_resolution(r: Fraction) -> str:
    return str(r.numerator) if r.denominator == 1 else f"{r.numerator}/{r.denominator}"


@dataclass
class RunRecord:
    a: float
    b: float
    grid: dict
    boxes: int
    invariant_boxes: int
    symbols: int
    outcome: dict                      # kind: bound | unverifiable | isolation_failure | budget_exceeded
    seconds: float
    metadata: dict = field(default_factory=dict)

    @property
    def bound(self) -> float | None:
        return self.outcome.get("value") if self.outcome["kind"] == "bound" else None

    def to_json(self) -> dict:
        return {
            "a": self.a, "b": self.b, "grid": self.grid,
            "boxes": self.boxes, "invariant_boxes": self.invariant_boxes,
            "symbols": self.symbols, "outcome": self.outcome,
            "seconds": self.seconds, "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RunRecord":
        return cls(**{k: data[k] for k in (
            "a", "b", "grid", "boxes", "invariant_boxes", "symbols",
            "outcome", "seconds", "metadata")})


class RunStore:
    """Filesystem cache of run records; one directory per cache key.
    Writes are atomic (tmp + rename) so interrupted sweeps resume cleanly."""

    def __init__(self, root: str | Path | None = None):
        if root is None:
            root = os.environ.get("HENTROPY_CACHE_DIR", "hentropy_runs")
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def key(self, a: float, b: float, grid: GridSpec, seed_digest: str) -> str:
        payload = json.dumps({
            "a": repr(a), "b": repr(b),
            "grid": grid.to_json(),
            "seed": seed_digest,
            "code": CODE_DIGEST,
        }, sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:20]

    def dir_for(self, key: str) -> Path:
        return self.root / key

    def load(self, key: str) -> RunRecord | None:
        path = self.dir_for(key) / "record.json"
        if not path.exists():
            return None
        return RunRecord.from_json(json.loads(path.read_text()))

    def _write(self, path: Path, text: str) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, path)

    def save(self, key: str, record: RunRecord,
             subshift: VerifiedSubshift | None,
             witness: BoundWitness | None,
             invariant: tuple[BoxId, ...]) -> None:
        d = self.dir_for(key)
        d.mkdir(parents=True, exist_ok=True)
        with gzip.open(d / "invariant.json.gz", "wt") as fh:
            json.dump([list(bx) for bx in invariant], fh)
        if subshift is not None:
            save_matrix(d / "matrix.txt", subshift.matrix)
            self._write(d / "regions.json", json.dumps(
                [[list(bx) for bx in region] for region in subshift.regions]))
        if witness is not None:
            self._write(d / "witness.json", json.dumps({
                "matrix_digest": subshift.matrix.digest() if subshift else None,
                "witness": witness.to_json(),
                "value": record.outcome.get("value"),
            }, sort_keys=True))
        self._write(d / "record.json", json.dumps(record.to_json(), sort_keys=True))

    def load_invariant(self, key: str) -> tuple[BoxId, ...] | None:
        path = self.dir_for(key) / "invariant.json.gz"
        if not path.exists():
            return None
        with gzip.open(path, "rt") as fh:
            return tuple(tuple(bx) for bx in json.load(fh))

    def load_matrix(self, key: str) -> TransitionMatrix | None:
        path = self.dir_for(key) / "matrix.txt"
        if not path.exists():
            return None
        return load_matrix(path)

    def load_regions(self, key: str):
        path = self.dir_for(key) / "regions.json"
        if not path.exists():
            return None
        return [tuple(tuple(bx) for bx in region) for region in json.loads(path.read_text())]


@dataclass
class RunResult:
    record: RunRecord
    key: str
    invariant: tuple[BoxId, ...]
    subshift: VerifiedSubshift | None


def _seed_digest(seed_rects) -> str:
    if seed_rects is None:
        return "b0"
    payload = json.dumps(
        [[r.x.lo, r.x.hi, r.y.lo, r.y.hi] for r in seed_rects]).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def run_bound(a: float, b: float, resolution, *,
              b0: Rect2 = DEFAULT_B0, window: Rect2 = DEFAULT_WINDOW,
              seed_rects=None, budget: int = 2_000_000,
              store: RunStore | None = None) -> RunResult:
    """One pipeline run: box map, trimming, index pair, homology, index map,
    subshift extraction, certified bound.  Module errors become structured
    outcomes; nothing here raises for a failed certification."""
    grid = GridSpec.make(b0, parse_resolution(resolution), window)
    seed_digest = _seed_digest(seed_rects)
    store = store or RunStore()
    key = store.key(a, b, grid, seed_digest)
    cached = store.load(key)
    if cached is not None:
        return RunResult(cached, key, store.load_invariant(key) or (), None)

    seeds = seed_rects if seed_rects is not None else [b0]
    t0 = time.monotonic()
    boxes = invariant_boxes = symbols = 0
    outcome: dict = {}
    subshift = None
    witness = None
    invariant: tuple[BoxId, ...] = ()
    try:
        boxmap = build_boxmap(grid, a, b, seeds, budget)
        boxes = len(boxmap.active)
        minv = invariant_part(boxmap)
        invariant = minv.active
        invariant_boxes = len(invariant)
        pair = build_index_pair(minv, boxmap)
        hom = relative_homology(pair)
        index_map = induced_index_map(pair, hom)
        comps = interior_components(pair)
        subshift = extract_subshift(pair, index_map, comps)
        symbols = subshift.matrix.n
        bound = entropy_lower_bound(subshift.matrix)
        if bound.value > LOG2_GUARD:
            outcome = {"kind": "unverifiable",
                       "reason": f"sanity guard: bound {bound.value} exceeds log 2"}
            subshift = None
        else:
            witness = bound.witness
            outcome = {
                "kind": "bound",
                "value": bound.value,
                "estimate": bound.estimate,
                "witness_digest": subshift.matrix.digest(),
                "dropped_generators": subshift.dropped_generators,
            }
    except BudgetExceeded as exc:
        outcome = {"kind": "budget_exceeded", "reason": str(exc)}
    except (IsolationFailure, EmptyInvariantSet) as exc:
        outcome = {"kind": "isolation_failure", "reason": str(exc)}
    except (Unverifiable, NonAcyclicCarrier, ChainSolveFailure, EmptyCover) as exc:
        outcome = {"kind": "unverifiable", "reason": str(exc)}
    seconds = time.monotonic() - t0

    record = RunRecord(
        a=a, b=b, grid=grid.to_json(), boxes=boxes,
        invariant_boxes=invariant_boxes, symbols=symbols,
        outcome=outcome, seconds=round(seconds, 3),
        metadata={"rounding": ROUNDING_NOTE, "code": CODE_DIGEST,
                  "seed": seed_digest},
    )
    store.save(key, record, subshift, witness, invariant)
    return RunResult(record, key, invariant, subshift)


@dataclass
class SweepResult:
    rows: list[tuple[Fraction, RunRecord, str]]   # (resolution, record, key)
    csv_path: Path | None
    svg_path: Path | None

    @property
    def max_bound(self) -> float | None:
        bounds = [rec.bound for _, rec, _ in self.rows if rec.bound is not None]
        return max(bounds) if bounds else None

    def best_key(self) -> str | None:
        best = None
        for res, rec, key in self.rows:
            if rec.bound is None:
                continue
            cand = (-rec.bound, res, key)
            if best is None or cand < best:
                best = cand
        return best[2] if best else None


def sweep_csv_text(rows) -> str:
    lines = ["resolution,boxes,outcome,bound,seconds"]
    for res, rec, _ in rows:
        bound = "" if rec.bound is None else f"{rec.bound:.10f}"
        lines.append(f"{format_resolution(res)},{rec.boxes},{rec.outcome['kind']},"
                     f"{bound},{rec.seconds:.3f}")
    return "\n".join(lines) + "\n"


def run_sweep(a: float, b: float, r_min, r_max, steps_per_doubling: int, *,
              b0: Rect2 = DEFAULT_B0, window: Rect2 = DEFAULT_WINDOW,
              budget: int = 2_000_000, store: RunStore | None = None,
              out_dir: str | Path | None = None) -> SweepResult:
    """Resolution sweep; each resolution is seeded with the previous one's
    invariant boxes, so refinement never rescans the full grid."""
    store = store or RunStore()
    schedule = resolution_schedule(r_min, r_max, steps_per_doubling)
    rows = []
    prev: tuple[GridSpec, tuple[BoxId, ...]] | None = None
    for res in schedule:
        if prev is None or not prev[1]:
            seed_rects = None
        else:
            g_prev, inv = prev
            seed_rects = [g_prev.box_of(bx) for bx in inv]
        result = run_bound(a, b, res, b0=b0, window=window,
                           seed_rects=seed_rects, budget=budget, store=store)
        rows.append((res, result.record, result.key))
        grid = GridSpec.make(b0, res, window)
        prev = (grid, result.invariant)

    csv_path = svg_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        tag = f"a{a}_b{b}".replace("-", "m").replace(".", "p")
        csv_path = out / f"sweep_{tag}.csv"
        csv_path.write_text(sweep_csv_text(rows))
        from .plots import sweep_plot
        svg_path = out / f"sweep_{tag}.svg"
        sweep_plot(rows, svg_path, title=f"a = {a}, b = {b}")
    return SweepResult(rows, csv_path, svg_path)


@dataclass
class PlateauRow:
    index: int
    representative: float
    paper_bound: float
    computed: float | None
    outcome: str

    @property
    def gap(self) -> float | None:
        return None if self.computed is None else self.paper_bound - self.computed


def run_plateaus(table: dict | None = None, *, r_min=16, r_max=512,
                 steps_per_doubling: int = 1, budget: int = 2_000_000,
                 store: RunStore | None = None,
                 out_dir: str | Path | None = None,
                 indices: list[int] | None = None) -> list[PlateauRow]:
    """Sweep every representative in the plateau table; emit a comparison
    table.  Per-run failures are recorded, never aborting the batch."""
    table = table or bundled_plateaus()
    store = store or RunStore()
    b = table.get("b", -1.0)
    rows: list[PlateauRow] = []
    for entry in table["plateaus"]:
        if indices is not None and entry["index"] not in indices:
            continue
        try:
            sweep = run_sweep(entry["representative"], b, r_min, r_max,
                              steps_per_doubling, budget=budget, store=store,
                              out_dir=out_dir)
            best = sweep.max_bound
            outcome = "bound" if best is not None else "no-bound"
        except HentropyError as exc:
            best, outcome = None, f"error: {exc}"
        rows.append(PlateauRow(entry["index"], entry["representative"],
                               entry["bound"], best, outcome))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        lines = ["index,representative,paper_bound,computed_bound,gap,outcome"]
        for row in rows:
            comp = "" if row.computed is None else f"{row.computed:.10f}"
            gap = "" if row.gap is None else f"{row.gap:.2e}"
            lines.append(f"{row.index},{row.representative},{row.paper_bound},"
                         f"{comp},{gap},{row.outcome}")
        (out / "plateaus.csv").write_text("\n".join(lines) + "\n")
    return rows


@dataclass
class DmsVerification:
    decided: bool
    run_key: str | None
    decision: ConjugacyDecision | None
    region_map: list[dict] | None
    diagnostics: dict


def dms_verify(store: RunStore, *, a: float = 5.4, b: float = -1.0,
               reference: TransitionMatrix | None = None,
               out_dir: str | Path | None = None) -> DmsVerification:
    """Match the best verified subshift at (a, b) against the bundled
    8-symbol matrix by strong shift equivalence up to permutation."""
    reference = reference or bundled_tdms()
    candidates = []
    for d in sorted(store.root.iterdir()):
        rec_path = d / "record.json"
        if not rec_path.exists():
            continue
        rec = RunRecord.from_json(json.loads(rec_path.read_text()))
        if rec.a != a or rec.b != b or rec.bound is None:
            continue
        if not (d / "matrix.txt").exists():
            continue
        res = parse_resolution(rec.grid["resolution"])
        candidates.append((-rec.bound, res, d.name, rec))
    candidates.sort()
    diagnostics: dict = {"candidates": len(candidates)}
    if not candidates:
        diagnostics["reason"] = "no verified runs found"
        return DmsVerification(False, None, None, None, diagnostics)

    last_decision = None
    for _, res, key, rec in candidates:
        matrix = store.load_matrix(key)
        regions = store.load_regions(key)
        decision = conjugate_up_to_permutation(matrix, reference)
        last_decision = decision
        if not decision.decided:
            continue
        groups = decision.certificate.symbol_groups
        perm = decision.permutation
        region_map = []
        for gi, group in enumerate(groups):
            union: list = []
            for sym in group:
                union.extend(regions[sym])
            region_map.append({
                "reduced_symbol": gi,
                "reference_symbol": f"N{perm[gi] + 1}",
                "source_symbols": list(group),
                "boxes": sorted(map(list, union)),
            })
        diagnostics.update(decision.diagnostics)
        diagnostics["resolution"] = format_resolution(res)
        if out_dir is not None:
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            decision.certificate.save(out / "dms_certificate.json")
            (out / "dms_region_map.json").write_text(
                json.dumps(region_map, indent=1, sort_keys=True))
            (out / "dms_permutation.json").write_text(json.dumps(list(perm)))
            from .plots import region_plot
            region_plot(region_map, GridSpec.from_json(rec.grid),
                        out / "dms_regions.svg")
        return DmsVerification(True, key, decision, region_map, diagnostics)

    if last_decision is not None:
        diagnostics.update(last_decision.diagnostics)
    diagnostics["reason"] = "no candidate matched the reference up to permutation"
    return DmsVerification(False, None, last_decision, None, diagnostics)
