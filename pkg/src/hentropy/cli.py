"""Command-line interface.

Subcommands: bound, sweep, plateaus, dms-verify, and matrix tools
(entropy / reduce / verify-cert).  Reports are written as CSV plus SVG
figures; every certified bound is backed by a persisted witness.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .errors import HentropyError, MatrixParseError
from .grid import parse_resolution
from .interval import Rect2
from .pipeline import (DEFAULT_B0, DEFAULT_WINDOW, RunStore, bundled_plateaus,
                       bundled_tdms, dms_verify, format_resolution, run_bound,
                       run_plateaus, run_sweep, sweep_csv_text)
from .sse import SSECertificate, reduce_matrix, spectral_radius
from .subshift import entropy_lower_bound, load_matrix, save_matrix


def _warn_inexact(text: str, name: str) -> float:
    value = float(text)
    try:
        exact = Fraction(text)
    except ValueError:
        return value
    if Fraction(value) != exact:
        print(f"note: {name} = {text} is not exactly representable; "
              f"using {value!r} (= {Fraction(value)})", file=sys.stderr)
    return value


def _parse_rect(text: str) -> Rect2:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("rectangle must be xlo,xhi,ylo,yhi")
    return Rect2.of(*parts)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--b0", type=_parse_rect, default=DEFAULT_B0,
                   help="initial box xlo,xhi,ylo,yhi (default -4,4,-4,4)")
    p.add_argument("--window", type=_parse_rect, default=DEFAULT_WINDOW,
                   help="computational window (default -5,5,-5,5)")
    p.add_argument("--budget", type=int, default=2_000_000,
                   help="maximum number of active boxes")
    p.add_argument("--cache-dir", default=None,
                   help="run cache directory (default $HENTROPY_CACHE_DIR or ./hentropy_runs)")
    p.add_argument("--out", default="hentropy_out", help="report output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hentropy",
                                 description="Certified topological entropy lower bounds "
                                             "for Henon maps")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="one run at a fixed resolution")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--resolution", required=True, help="p/q")
    _add_common(p)

    p = sub.add_parser("sweep", help="resolution sweep with CSV + SVG report")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--rmin", required=True)
    p.add_argument("--rmax", required=True)
    p.add_argument("--steps-per-doubling", type=int, default=2)
    _add_common(p)

    p = sub.add_parser("plateaus", help="sweep the bundled plateau representatives")
    p.add_argument("--table", default=None, help="plateau table JSON (default bundled)")
    p.add_argument("--rmax", default="512")
    p.add_argument("--rmin", default="16")
    p.add_argument("--steps-per-doubling", type=int, default=1)
    p.add_argument("--indices", default=None,
                   help="comma-separated plateau indices to run (default all)")
    _add_common(p)

    p = sub.add_parser("dms-verify",
                       help="match the best (5.4, -1) subshift against the bundled matrix")
    p.add_argument("--run", required=True, help="run cache directory to search")
    p.add_argument("--reference", default=None, help="reference matrix file (default bundled)")
    p.add_argument("--out", default="hentropy_out")

    p = sub.add_parser("matrix", help="file-level matrix tools")
    msub = p.add_subparsers(dest="matrix_command", required=True)
    pe = msub.add_parser("entropy", help="certified entropy lower bound of a matrix file")
    pe.add_argument("file")
    pr = msub.add_parser("reduce", help="amalgamation reduction with certificate")
    pr.add_argument("file")
    pr.add_argument("--strategy", choices=("greedy", "exhaustive"), default="exhaustive")
    pr.add_argument("--node-limit", type=int, default=16)
    pr.add_argument("--cert-out", default=None, help="write the certificate JSON here")
    pr.add_argument("--matrix-out", default=None, help="write the reduced matrix here")
    pv = msub.add_parser("verify-cert", help="check a certificate chain exactly")
    pv.add_argument("file")
    return ap


def _cmd_bound(args) -> int:
    a = _warn_inexact(args.a, "a")
    b = _warn_inexact(args.b, "b")
    store = RunStore(args.cache_dir)
    result = run_bound(a, b, parse_resolution(args.resolution),
                       b0=args.b0, window=args.window,
                       budget=args.budget, store=store)
    rec = result.record
    print(json.dumps(rec.to_json(), indent=1, sort_keys=True))
    if rec.bound is not None:
        print(f"certified lower bound: {rec.bound:.6f}")
    return 0


def _cmd_sweep(args) -> int:
    a = _warn_inexact(args.a, "a")
    b = _warn_inexact(args.b, "b")
    store = RunStore(args.cache_dir)
    sweep = run_sweep(a, b, args.rmin, args.rmax, args.steps_per_doubling,
                      b0=args.b0, window=args.window, budget=args.budget,
                      store=store, out_dir=args.out)
    sys.stdout.write(sweep_csv_text(sweep.rows))
    if sweep.max_bound is not None:
        print(f"max certified bound: {sweep.max_bound:.6f}")
    else:
        print("no certified bound obtained")
    print(f"report: {sweep.csv_path} {sweep.svg_path}")
    return 0


def _cmd_plateaus(args) -> int:
    table = None
    if args.table:
        table = json.loads(Path(args.table).read_text())
    indices = None
    if args.indices:
        indices = [int(t) for t in args.indices.split(",")]
    store = RunStore(args.cache_dir)
    rows = run_plateaus(table, r_min=args.rmin, r_max=args.rmax,
                        steps_per_doubling=args.steps_per_doubling,
                        budget=args.budget, store=store, out_dir=args.out,
                        indices=indices)
    print(f"{'idx':>3} {'rep':>8} {'paper':>8} {'computed':>12} {'gap':>10} outcome")
    for row in rows:
        comp = "-" if row.computed is None else f"{row.computed:.6f}"
        gap = "-" if row.gap is None else f"{row.gap:.2e}"
        print(f"{row.index:>3} {row.representative:>8} {row.paper_bound:>8} "
              f"{comp:>12} {gap:>10} {row.outcome}")
    return 0


def _cmd_dms_verify(args) -> int:
    store = RunStore(args.run)
    reference = load_matrix(args.reference) if args.reference else None
    result = dms_verify(store, reference=reference, out_dir=args.out)
    print(json.dumps(result.diagnostics, indent=1, sort_keys=True, default=str))
    if result.decided:
        print(f"conjugacy certificate written under {args.out}; "
              f"permutation {list(result.decision.permutation)}")
        return 0
    print("not decided (amalgamation-only reduction is incomplete)")
    return 2


def _cmd_matrix(args) -> int:
    if args.matrix_command == "entropy":
        matrix = load_matrix(args.file)
        bound = entropy_lower_bound(matrix)
        slack = bound.estimate - bound.value
        print(f"certified lower bound: {bound.value:.6f}")
        print(f"power-iteration estimate: {bound.estimate:.6f} "
              f"(certified slack {slack:.2e})")
        if bound.witness is not None:
            print(f"witness: SCC of {len(bound.witness.symbols)} symbols, "
                  f"beta = {bound.witness.beta}")
        return 0
    if args.matrix_command == "reduce":
        matrix = load_matrix(args.file)
        reduced, cert = reduce_matrix(matrix, args.strategy, args.node_limit)
        print(f"{matrix.n} x {matrix.n} -> {reduced.n} x {reduced.n} "
              f"in {len(cert.steps)} steps")
        print(reduced)
        if not cert.verify():
            print("internal error: certificate failed verification", file=sys.stderr)
            return 1
        if args.cert_out:
            cert.save(args.cert_out)
            print(f"certificate: {args.cert_out}")
        if args.matrix_out:
            save_matrix(args.matrix_out, reduced)
        return 0
    if args.matrix_command == "verify-cert":
        try:
            cert = SSECertificate.load(args.file)
        except (json.JSONDecodeError, KeyError) as exc:
            print(f"parse error: {exc}", file=sys.stderr)
            return 1
        step = cert.failing_step()
        if step is None and cert.verify():
            print(f"certificate ok: {len(cert.steps)} steps, "
                  f"{len(cert.matrices[0])} -> {len(cert.matrices[-1])} symbols")
            return 0
        print(f"certificate INVALID at step {step}", file=sys.stderr)
        return 1
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "bound":
            return _cmd_bound(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "plateaus":
            return _cmd_plateaus(args)
        if args.command == "dms-verify":
            return _cmd_dms_verify(args)
        if args.command == "matrix":
            return _cmd_matrix(args)
    except MatrixParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except HentropyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
