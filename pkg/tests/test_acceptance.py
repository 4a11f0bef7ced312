"""Acceptance criteria, each at its stated tolerance and runtime limit.

Run under pytest for the summary section, or directly with
``python tests/test_acceptance.py`` for one PASS/FAIL line per criterion.
"""
from __future__ import annotations

import json
import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import pytest

from hcpoly.corpus import acceptance_corpus, write_corpus
from hcpoly.graph import DirectedGraph, HamiltonCertificate, indicator_x, is_hamiltonian
from hcpoly.prune import Box, branch_and_prune
from hcpoly.pulse import (
    PulseSystem,
    cf_alignment,
    incommensurability_check,
    simultaneous_high_intervals,
    sqrt2_over,
    token_alignment,
)
from hcpoly.quadext import QuadExt
from hcpoly.reduction import (
    ReductionConfig,
    Semantics,
    aggregate,
    build_system,
    discrete_bruteforce,
    indicator_check,
)
from hcpoly.report import ReportOptions, corpus_report, dumps_report
from hcpoly.search import SweepConfig
from hcpoly.trigpoly import BASE, TrigPoly, cos_alpha_plus_k_beta, cos_k_beta, serialize, trig_point

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = {}

LAB_R = sqrt2_over(100)


class Outcome:
    def __init__(self, number: int, limit: float) -> None:
        self.number = number
        self.limit = limit
        self.failures: list[str] = []
        self.facts: list[str] = []
        self.t0 = time.monotonic()

    def check(self, ok: bool, what: str) -> None:
        if not ok:
            self.failures.append(what)

    def note(self, what: str) -> None:
        self.facts.append(what)

    def finish(self) -> tuple[bool, str]:
        dt = time.monotonic() - self.t0
        self.check(dt < self.limit, f"runtime {dt:.1f}s over the {self.limit:.0f}s limit")
        ok = not self.failures
        parts = self.failures if not ok else self.facts
        line = f"criterion {self.number:2d}: {'PASS' if ok else 'FAIL'} ({dt:.1f}s) " + "; ".join(parts)
        ACCEPTANCE_LINES[self.number] = line
        print(line)
        return ok, line


def criterion_1():
    out = Outcome(1, 60)
    rng = random.Random(1)
    worst = mpmath.mpf(0)
    with mpmath.workprec(256):
        for _ in range(100):
            a = mpmath.mpf(rng.uniform(0, 2 * math.pi))
            b = mpmath.mpf(rng.uniform(0, 2 * math.pi))
            pt = trig_point(a, b, BASE, precision=256)
            for k in range(51):
                err = abs(cos_alpha_plus_k_beta(k, BASE).eval(pt, 256) - mpmath.cos(a + k * b))
                worst = max(worst, err)
    out.check(worst <= 1e-9, f"max error {mpmath.nstr(worst, 3)} > 1e-9")
    out.note(f"max error {mpmath.nstr(worst, 3)}")
    return out.finish()


def criterion_2():
    out = Outcome(2, 60)
    sizes = {}
    over = []
    for k in range(201):
        p = cos_k_beta(k)
        if p.max_abs_coefficient() > 2 ** k:
            over.append(k)
        out.check(len(p) <= k + 1, f"k={k}: {len(p)} terms > k+1")
        sizes[k] = len(serialize(p).encode())
    if over:
        k = over[-1]
        bits = math.log2(cos_k_beta(k).max_abs_coefficient())
        out.check(False, f"max |coef| exceeds 2^k for {len(over)} values of k, first k={over[0]}, "
                         f"at k={k} it needs {bits:.1f} bits")
    for k in range(10, 101):
        out.check(sizes[2 * k] <= 4 * sizes[k], f"size at k={2 * k} exceeds 4x size at k={k}")
    out.note(f"term count <= k+1 and size quadratic; at k=200 {sizes[200]} bytes")
    return out.finish()


def criterion_3():
    out = Outcome(3, 1)
    for n in range(3, 9):
        g = DirectedGraph.complete(n)
        out.check(len(build_system(g).registry) == 13, f"N={n}: default variable count")
        out.check(len(build_system(g, ReductionConfig(include_box_bounds=True)).registry) == 21,
                  f"N={n}: box-bound variable count")
    out.note("13 variables by default, 21 with box bounds, N=3..8")
    return out.finish()


def criterion_4():
    out = Outcome(4, 300)
    corpus = acceptance_corpus()
    cfg = ReductionConfig(Semantics.TOKEN)
    mismatches = []
    for name, g in corpus:
        verdict = is_hamiltonian(g) is not None
        if discrete_bruteforce(g, cfg).feasible != verdict:
            mismatches.append(name)
    out.check(not mismatches, f"mismatches on {mismatches[:5]}")
    out.note(f"{len(corpus)} graphs, discrete feasibility equals the oracle on all")
    return out.finish()


def criterion_5(tmp: Path):
    out = Outcome(5, 60)
    k3 = DirectedGraph.complete(3)
    lit = ReductionConfig(Semantics.LITERAL)
    rec = indicator_check(k3, lit, indicator_x(k3, HamiltonCertificate((1, 2, 3))))
    out.check(rec.s3 == 8, f"K3 literal eps3 = {rec.s3}, expected 8")
    d = tmp / "corpus5"
    write_corpus(d, acceptance_corpus())
    # discrete enumeration is criterion 4's job; here only the indicator values are needed
    opts = ReportOptions(sweep=SweepConfig(2, 2, budget=0), ladder=(), bruteforce_max_edges=0)
    rep = corpus_report(d, opts)
    (tmp / "report5.json").write_text(dumps_report(rep))
    ham = [r for r in rep["records"] if r.get("hamiltonian")]
    low = [r["file"] for r in ham if not Fraction(r["indicator"]["literal"]["v3"]) > 1]
    out.check(not low, f"literal v3 <= 1 on {low[:5]}")
    k3rec = next(r for r in rep["records"] if r.get("n") == 3 and r.get("edge_count") == 6)
    out.check(k3rec["indicator"]["literal"]["eps3"] == "8/1", "K3 eps3 not recorded as 8 in the report")
    v3min = min(Fraction(r["indicator"]["literal"]["v3"]) for r in ham)
    out.note(f"{len(ham)} Hamiltonian instances, min literal v3 = {float(v3min):.4f}")
    return out.finish()


def criterion_6():
    out = Outcome(6, 60)
    rng = random.Random(6)
    s = build_system(DirectedGraph.complete(3))
    agg = aggregate(s)
    for t in range(50):
        pt = [Fraction(rng.randint(-40, 40), rng.randint(1, 30)) for _ in s.registry.names]
        lhs = agg.eval_exact(pt)
        rhs = sum(v * v for v in s.values_at(pt))
        out.check(lhs == rhs, f"point {t}: aggregate {lhs} != sum of squares {rhs}")
    out.note(f"50 exact matches on the K3 aggregate ({len(agg.terms)} terms)")
    return out.finish()


def criterion_7():
    out = Outcome(7, 120)
    sys5 = PulseSystem(5, LAB_R, QuadExt(Fraction(1, 10)))
    for i in range(1, 6):
        for j in range(i + 1, 6):
            v = incommensurability_check(sys5, i, j, 10_000)
            out.check(v.passed, f"({i},{j}) commensurable at {v.violation}")
            tr = token_alignment(sys5, i, j, 20)
            bad = [e.index for e in tr.entries if not e.gap > 0]
            if len(tr) < 20 or bad:
                out.check(False, f"token ({i},{j}): {len(tr)} of 20 events, non-positive gap at visit {bad}")
            cf = cf_alignment(sys5, i, j, 20)
            g = cf.gaps
            out.check(all(x > 0 for x in g) and all(b < a for a, b in zip(g, g[1:])),
                      f"cf ({i},{j}) gaps not strictly decreasing")
    out.note("incommensurable pairs, positive token gaps, decreasing cf gaps")
    return out.finish()


def criterion_8():
    out = Outcome(8, 120)
    horizons = (25, 50, 100, 200, 400)
    baseline = 50
    facts = []
    for n in (2, 3):
        s = PulseSystem(n, LAB_R, QuadExt(Fraction(2, 5)))
        counts = [len(simultaneous_high_intervals(s, QuadExt(h), QuadExt(Fraction(3, 10)))) for h in horizons]
        out.check(counts == sorted(counts), f"n={n}: counts {counts} decrease")
        c = dict(zip(horizons, counts))
        out.check(c[2 * baseline] > c[baseline], f"n={n}: no increase from {baseline} to {2 * baseline}")
        facts.append(f"n={n} counts {counts}")
    out.note(", ".join(facts))
    return out.finish()


def criterion_9():
    out = Outcome(9, 60)
    ca = TrigPoly.var("cos_a")
    unit = Box(BASE, ((-1, 1),) * 4)
    v = branch_and_prune(ca * ca + 1, unit, Fraction(1, 2), budget=10)
    out.check(v.infeasible and v.nodes <= 10, f"cos_a^2 + 1: {v.status} after {v.nodes} nodes")
    rng = random.Random(9)
    wrong = 0
    for _ in range(20):
        bounds = []
        for _ in range(4):
            lo = Fraction(rng.randint(-8, 6), 4)
            bounds.append((lo, lo + Fraction(rng.randint(1, 8), 4)))
        box = Box(BASE, tuple(bounds))
        root = [Fraction(rng.randint(0, 12), 12) * (hi - lo) + lo for lo, hi in bounds]
        sos = TrigPoly.zero().as_raw()
        for _ in range(3):
            terms = {tuple(rng.randint(0, 3) for _ in range(4)): Fraction(rng.randint(-9, 9), rng.randint(1, 4))
                     for _ in range(4)}
            q = TrigPoly(BASE, terms, normal=False)
            q = q - q.eval_exact(root)
            sos = sos + q * q
        if branch_and_prune(sos, box, 0, budget=150).infeasible:
            wrong += 1
    out.check(wrong == 0, f"{wrong} planted-root instances declared infeasible")
    out.note(f"infeasible in {v.nodes} node(s); 20 planted roots never infeasible")
    return out.finish()


def criterion_10(tmp: Path):
    out = Outcome(10, 600)
    d = tmp / "corpus10"
    write_corpus(d, [
        ("k3.json", DirectedGraph.complete(3)),
        ("n4_cycle_chord.json", DirectedGraph.from_edges(4, [(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)])),
    ])
    opts = ReportOptions()
    first = dumps_report(corpus_report(d, opts))
    second = dumps_report(corpus_report(d, opts))
    (tmp / "report10.json").write_text(first)
    out.check(first == second, "report differs between identical runs")
    rep = json.loads(first)
    summary = []
    for rec in rep["records"]:
        ladders = rec.get("pattern_search", [])
        out.check(bool(ladders), f"{rec['file']}: no pattern-search record")
        for lad in ladders:
            out.check([lv["grid"] for lv in lad["levels"]] == [8, 64, 512, 4096], f"{rec['file']}: ladder levels")
            bounds = lad["phi_min_upper_bounds"]
            out.check(len(bounds) == 4, f"{rec['file']}: missing upper bounds")
            summary.append(f"{rec['file']} {lad['certificate']}: {float(bounds[-1]):.6g}")
    out.note("deterministic; phi_min upper bounds " + ", ".join(summary))
    return out.finish()


@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(number, tmp_path):
    fn = globals()[f"criterion_{number}"]
    ok, line = fn(tmp_path) if number in (5, 10) else fn()
    assert ok, line


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as td:
        results = []
        for n in range(1, 11):
            fn = globals()[f"criterion_{n}"]
            results.append((fn(Path(td)) if n in (5, 10) else fn())[0])
    sys.exit(0 if all(results) else 1)
