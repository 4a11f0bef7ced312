"""Command-line harness: every command writes its outputs as files plus a manifest, written last."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import mpmath

from . import __version__
from .corpus import DEFAULT_SEED, acceptance_corpus, write_corpus
from .graph import MAX_DP_N, DirectedGraph, GraphError, is_hamiltonian, parse_graph
from .prune import DimensionMismatch, box_from_json, branch_and_prune, default_box
from .pulse import (
    EventBudgetExceeded,
    PulseError,
    PulseSystem,
    cf_alignment,
    incommensurability_check,
    pulse_report,
    simultaneous_high_intervals,
    token_alignment,
)
from .quadext import QuadExt, parse_quad
from .reduction import (
    BudgetExceeded,
    CrossCheckError,
    ReductionConfig,
    Semantics,
    aggregate,
    build_system,
    edge_index,
    edge_poly,
)
from .report import ReportOptions, corpus_report, dumps_report, num_json
from .search import LADDER, SweepConfig, certificate_pattern, pattern_ladder, refine, sweep, sweep_csv
from .trigpoly import PolyFormatError, rational_circle_point

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_CROSSCHECK = 4


class InputError(Exception):
    pass


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Run:
    """Collects inputs and outputs of one command; :meth:`finish` writes the manifest."""

    def __init__(self, args: argparse.Namespace, argv: list[str]) -> None:
        self.args = args
        self.argv = argv
        self.out = Path(args.out)
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.partial = False
        self.notes: list[str] = []
        self.t0 = time.monotonic()
        self.started = datetime.now(timezone.utc).isoformat()

    def read_input(self, path: str) -> bytes:
        p = Path(path)
        try:
            data = p.read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from None
        self.inputs.append(p)
        return data

    def write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        p.write_text(text, encoding="utf-8")
        self.outputs.append(p)
        return p

    def write_json(self, name: str, doc) -> Path:
        return self.write(name, json.dumps(doc, indent=2) + "\n")

    def finish(self, code: int) -> int:
        config = {k: v for k, v in vars(self.args).items() if k != "func"}
        manifest = {
            "tool": "hcpoly",
            "version": __version__,
            "command": self.argv,
            "config": config,
            "inputs": [{"path": str(p), "sha256": sha256(p)} for p in self.inputs if p.is_file()],
            "outputs": [{"path": str(p), "sha256": sha256(p), "bytes": p.stat().st_size} for p in self.outputs],
            "exit_code": code,
            "partial": self.partial,
            "notes": self.notes,
            "started": self.started,
            "duration_seconds": round(time.monotonic() - self.t0, 3),
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")
        return code


def _config(args) -> ReductionConfig:
    return ReductionConfig(Semantics(args.semantics), args.eps_exponent, args.box_bounds)


def _graph(run: Run, path: str) -> DirectedGraph:
    return parse_graph(run.read_input(path))


def _sweep_config(args) -> SweepConfig:
    ga, gb = args.grid
    return SweepConfig(ga, gb, args.precision, args.budget if args.budget is not None else 10_000)


def _parse_edges(text: str) -> list[tuple[int, int]]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            a, b = part.split("-")
            out.append((int(a), int(b)))
        except ValueError:
            raise InputError(f"bad edge {part!r}, expected FROM-TO") from None
    return out


def cmd_reduce(run: Run, args) -> int:
    g = _graph(run, args.graph)
    cfg = _config(args)
    system = build_system(g, cfg)
    eqs = system.equations
    # cross-check: edge polynomials against 1 + cos(a + k b) at a fixed point
    with mpmath.workprec(args.precision):
        a = mpmath.mpf(3) / 10
        b = mpmath.mpf(7) / 10
        pt = [mpmath.cos(a), mpmath.sin(a), mpmath.cos(b), mpmath.sin(b)]
        for i, j in g.edges:
            k = edge_index(g.n, i, j)
            got = edge_poly(g, i, j).eval(pt, args.precision)
            if abs(got - (1 + mpmath.cos(a + k * b))) > 1e-9:
                raise CrossCheckError(f"edge polynomial x[{i},{j}] disagrees with 1 + cos(a + {k} b)")
    run.write("system.json", system.dumps())
    if args.aggregate:
        agg = aggregate(system)
        # aggregation law at a rational point on both unit circles
        ca, sa = rational_circle_point(Fraction(1, 3))
        cb, sb = rational_circle_point(Fraction(2, 5))
        pt = [ca, sa, cb, sb] + [Fraction(1, 7 + k) for k in range(len(system.registry) - 4)]
        if agg.eval_exact(pt) != sum(v * v for v in system.values_at(pt)):
            raise CrossCheckError("aggregate value differs from the sum of squared equation values")
        doc = {"label": "AGGREGATE", "config": {**cfg.to_json(), "n": g.n}, "poly": agg.to_json()}
        run.write("aggregate.json", json.dumps(doc, separators=(",", ":")) + "\n")
    print(f"{len(eqs)} equations over {len(system.registry)} variables -> {run.out}")
    return EXIT_OK


def cmd_oracle(run: Run, args) -> int:
    g = _graph(run, args.graph)
    if g.n > MAX_DP_N:
        run.partial = True
        run.write_json("oracle.json", {"n": g.n, "verdict": None, "reason": f"n > {MAX_DP_N}"})
        print(f"oracle budget: n = {g.n} exceeds {MAX_DP_N}", file=sys.stderr)
        return EXIT_BUDGET
    cert = is_hamiltonian(g)
    run.write_json("oracle.json", {"n": g.n, "hamiltonian": cert is not None,
                                   "certificate": list(cert.order) if cert else None})
    if cert:
        print("hamiltonian", " ".join(map(str, cert.order)))
        return EXIT_OK
    print("not hamiltonian")
    return EXIT_NEGATIVE


def cmd_sweep(run: Run, args) -> int:
    g = _graph(run, args.graph)
    cfg = _config(args)
    sc = _sweep_config(args)
    res = sweep(g, cfg, sc, workers=args.workers)
    run.write("sweep.csv", sweep_csv(res))
    best = res.argmin
    doc = {
        "config": {**cfg.to_json(), **sc.to_json()},
        "cells": len(res),
        "argmin_cell": [best.a, best.b],
        "argmin": {"alpha": num_json(best.alpha), "beta": num_json(best.beta),
                   "total": num_json(best.record.total)},
    }
    code = EXIT_OK
    if args.refine:
        r = refine(g, cfg, (best.alpha, best.beta), sc)
        doc["refine"] = {
            "alpha": num_json(r.alpha), "beta": num_json(r.beta),
            "total": num_json(r.record.total) if r.record else None,
            "evaluations": r.evaluations, "budget_exhausted": r.exhausted,
        }
        if r.exhausted:
            run.partial = True
            run.notes.append("refinement stopped at the evaluation budget")
            code = EXIT_BUDGET
    run.write_json("sweep.json", doc)
    print(f"{len(res)} cells, min total {num_json(best.record.total)}")
    return code


def cmd_pattern(run: Run, args) -> int:
    g = _graph(run, args.graph)
    if args.pattern:
        H = _parse_edges(args.pattern)
    else:
        cert = is_hamiltonian(g)
        if cert is None:
            raise InputError("graph has no tour; pass --pattern explicitly")
        H = list(certificate_pattern(cert))
    sc = _sweep_config(args)
    levels = tuple(int(v) for v in args.ladder.split(",")) if args.ladder else LADDER
    try:
        lad = pattern_ladder(g, H, sc, levels)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    run.write_json("pattern.json", lad.to_json())
    print("phi_min upper bounds:", ", ".join(mpmath.nstr(v, 10) for v in lad.best))
    if any(lv.exhausted for lv in lad.levels):
        run.partial = True
        run.notes.append("pattern refinement stopped at the evaluation budget")
        return EXIT_BUDGET
    return EXIT_OK


def cmd_prove(run: Run, args) -> int:
    g = _graph(run, args.graph)
    cfg = _config(args)
    system = build_system(g, cfg)
    p = aggregate(system)
    if args.box:
        try:
            box = box_from_json(json.loads(run.read_input(args.box)), system.registry)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad box file: {exc}") from None
    else:
        box = default_box(g.n, cfg)
    budget = args.budget if args.budget is not None else 1000
    v = branch_and_prune(p, box, Fraction(args.threshold), budget)
    run.write_json("prove.json", v.to_json())
    print(f"{v.status} after {v.nodes} boxes")
    if v.exhausted:
        run.partial = True
        run.notes.append("branch-and-prune stopped at the node budget")
        return EXIT_BUDGET
    return EXIT_OK


def _pulse_system(args) -> PulseSystem:
    R = parse_quad(args.R)
    x = parse_quad(args.x_high) if args.x_high else None
    if x is None:
        # a third of the shortest period
        x = (1 + args.n * R).inverse() / 3
    delays = tuple(parse_quad(d) for d in args.delays.split(";")) if args.delays else ()
    return PulseSystem(args.n, R, x, delays)


def cmd_pulse(run: Run, args) -> int:
    sys_ = _pulse_system(args)
    if args.action == "align":
        if args.method == "token":
            tr = token_alignment(sys_, args.i, args.j, args.events, args.rounding)
        else:
            tr = cf_alignment(sys_, args.i, args.j, args.events)
        run.write_json("align.json", pulse_report(sys_, traces=[tr]))
        print(f"{len(tr)} entries")
        if tr.note:
            print(tr.note)
        return EXIT_OK
    if args.action == "scan":
        try:
            ivs = simultaneous_high_intervals(sys_, QuadExt(args.horizon), parse_quad(args.min_duration),
                                              args.precision)
        except EventBudgetExceeded as exc:
            run.partial = True
            run.notes.append(str(exc))
            run.write_json("scan.json", pulse_report(sys_, extra={"error": str(exc)}))
            return EXIT_BUDGET
        run.write_json("scan.json", pulse_report(sys_, ivs, extra={"horizon": args.horizon, "count": len(ivs)}))
        print(f"{len(ivs)} simultaneous-high intervals")
        return EXIT_OK
    verdicts = [incommensurability_check(sys_, i, j, args.bound)
                for i in range(1, sys_.n + 1) for j in range(i + 1, sys_.n + 1)]
    doc = {"bound": args.bound, "pairs": [
        {"i": v.i, "j": v.j, "passed": v.passed, "violation": list(v.violation) if v.violation else None}
        for v in verdicts]}
    run.write_json("check.json", pulse_report(sys_, extra=doc))
    ok = all(v.passed for v in verdicts)
    print("all pairs incommensurable" if ok else "commensurable pair found")
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_report(run: Run, args) -> int:
    d = Path(args.corpus)
    if not d.is_dir():
        raise InputError(f"{d} is not a directory")
    files = sorted(d.glob("*.json"), key=lambda p: p.name)
    run.inputs.extend(files)
    ga, gb = args.grid
    opts = ReportOptions(
        sweep=SweepConfig(ga, gb, args.precision, args.budget if args.budget is not None else 10_000),
        ladder=tuple(int(v) for v in args.ladder.split(",")) if args.ladder else LADDER,
        max_certificates=args.max_certificates,
        eps_exponent=args.eps_exponent,
        include_box_bounds=args.box_bounds,
    )
    rep = corpus_report(d, opts, files)
    run.write("report.json", dumps_report(rep))
    print(f"{len(rep['records'])} records")
    return EXIT_OK


def cmd_corpus(run: Run, args) -> int:
    paths = write_corpus(run.out, acceptance_corpus(args.seed))
    run.outputs.extend(paths)
    print(f"{len(paths)} graphs written to {run.out}")
    return EXIT_OK


def _grid(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 8x8, got {text!r}") from None
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"grid must look like 8x8, got {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--precision", type=int, default=256, help="working precision in bits")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--budget", type=int, default=None,
                        help="evaluation budget (refine) or node budget (prove)")
    common.add_argument("--semantics", choices=[s.value for s in Semantics], default=Semantics.TOKEN.value)
    common.add_argument("--eps-exponent", type=int, default=None, help="eps bound is 2^-E (default E = N^2)")
    common.add_argument("--box-bounds", action="store_true", help="add the [-1, 1] slack rows for the trig variables")
    common.add_argument("--aggregate", action="store_true", help="also write the aggregated polynomial")

    p = argparse.ArgumentParser(prog="hcpoly", description=__doc__)
    p.add_argument("--version", action="version", version=f"hcpoly {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("reduce", parents=[common], help="build the constraint system of a graph")
    s.add_argument("graph")
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("oracle", parents=[common], help="decide Hamiltonicity exactly")
    s.add_argument("graph")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("sweep", parents=[common], help="residuals over an (alpha, beta) grid")
    s.add_argument("graph")
    s.add_argument("--grid", type=_grid, default=(8, 8), help="cells per axis, e.g. 8x8")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--refine", action="store_true", help="pattern-search from the best cell")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("pattern", parents=[common], help="minimize the distance to a target edge pattern")
    s.add_argument("graph")
    s.add_argument("--pattern", help="edges valued 2, e.g. 1-2,2-3,3-1 (default: first tour)")
    s.add_argument("--ladder", help="comma-separated grid sizes (default 8,64,512,4096)")
    s.add_argument("--grid", type=_grid, default=(8, 8), help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_pattern)

    s = sub.add_parser("prove", parents=[common], help="branch-and-prune on the aggregated polynomial")
    s.add_argument("graph")
    s.add_argument("--box", help="JSON file mapping each variable to [lo, hi]")
    s.add_argument("--threshold", default="0", help="rational threshold, default 0")
    s.set_defaults(func=cmd_prove)

    s = sub.add_parser("pulse", parents=[common], help="pulse-function experiments")
    s.add_argument("action", choices=["align", "scan", "check"])
    s.add_argument("--n", type=int, default=2, help="number of pulse functions")
    s.add_argument("--R", default="0,1/100", help="R as 'a,b' meaning a + b sqrt2 (default sqrt2/100)")
    s.add_argument("--x-high", help="high duration as 'a,b' (default a third of the shortest period)")
    s.add_argument("--delays", help="semicolon-separated delays, each 'a,b'")
    s.add_argument("--i", type=int, default=1)
    s.add_argument("--j", type=int, default=2)
    s.add_argument("--method", choices=["cf", "token"], default="cf")
    s.add_argument("--rounding", choices=["trunc", "floor"], default="trunc")
    s.add_argument("--events", type=int, default=20, help="overtake events or convergents")
    s.add_argument("--horizon", default="100", help="scan horizon (rational)")
    s.add_argument("--min-duration", default="0,0", help="shortest reported interval, 'a,b'")
    s.add_argument("--bound", type=int, default=10_000, help="multiple bound for check")
    s.set_defaults(func=cmd_pulse)

    s = sub.add_parser("report", parents=[common], help="corpus-level report")
    s.add_argument("corpus", help="directory of graph JSON files")
    s.add_argument("--grid", type=_grid, default=(8, 8))
    s.add_argument("--ladder", help="comma-separated grid sizes (default 8,64,512,4096)")
    s.add_argument("--max-certificates", type=int, default=4)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("corpus", parents=[common], help="write the seeded test corpus")
    s.set_defaults(func=cmd_corpus)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    run = Run(args, argv)
    try:
        code = args.func(run, args)
    except (GraphError, InputError, PolyFormatError, DimensionMismatch, PulseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return run.finish(EXIT_INPUT)
    except BudgetExceeded as exc:
        print(f"budget: {exc}", file=sys.stderr)
        run.partial = True
        run.notes.append(str(exc))
        return run.finish(EXIT_BUDGET)
    except CrossCheckError as exc:
        print(f"cross-check failed: {exc}", file=sys.stderr)
        return run.finish(EXIT_CROSSCHECK)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return run.finish(EXIT_INPUT)
    return run.finish(code)


if __name__ == "__main__":
    sys.exit(main())
