"""Per-graph corpus reports combining the oracle, discrete checks, sweeps and pattern search."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import mpmath

from .graph import GraphError, hamiltonian_cycles, indicator_x, is_hamiltonian, parse_graph
from .reduction import (
    BudgetExceeded,
    ReductionConfig,
    ResidualRecord,
    Semantics,
    discrete_bruteforce,
    indicator_check,
)
from .search import LADDER, SweepConfig, certificate_pattern, pattern_ladder, sweep


def num_json(v):
    """Exact values as ``"p/q"`` strings, floating values as 17-digit decimals."""
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, Fraction)):
        v = Fraction(v)
        return f"{v.numerator}/{v.denominator}"
    return mpmath.nstr(mpmath.mpf(v), 17, strip_zeros=False)


def record_json(rec: ResidualRecord) -> dict:
    doc = {k: num_json(getattr(rec, k)) for k in ("s1", "s2", "s3", "v1", "v2", "v3")}
    doc["eps1"] = num_json(rec.eps1)
    doc["eps2"] = num_json(rec.s2)
    doc["eps3"] = num_json(rec.s3)
    doc["total"] = num_json(rec.total)
    doc["upper"] = num_json(rec.upper)
    doc["feasible"] = rec.feasible
    return doc


@dataclass(frozen=True)
class ReportOptions:
    sweep: SweepConfig = field(default_factory=SweepConfig)
    ladder: tuple[int, ...] = LADDER
    max_certificates: int = 4
    bruteforce_max_edges: int = 12
    eps_exponent: int | None = None
    include_box_bounds: bool = False

    def config(self, semantics: Semantics) -> ReductionConfig:
        return ReductionConfig(semantics, self.eps_exponent, self.include_box_bounds)

    def to_json(self) -> dict:
        return {
            "sweep": self.sweep.to_json(),
            "ladder": list(self.ladder),
            "max_certificates": self.max_certificates,
            "bruteforce_max_edges": self.bruteforce_max_edges,
            "eps_exponent": self.eps_exponent,
            "include_box_bounds": self.include_box_bounds,
        }


def graph_record(name: str, text: bytes, opts: ReportOptions) -> dict:
    rec: dict = {"file": name}
    try:
        g = parse_graph(text)
    except GraphError as exc:
        rec["error"] = f"invalid graph: {exc}"
        return rec
    rec["n"] = g.n
    rec["edge_count"] = len(g.edges)
    cert = is_hamiltonian(g)
    rec["hamiltonian"] = cert is not None
    rec["certificate"] = list(cert.order) if cert else None
    certs = list(hamiltonian_cycles(g, limit=opts.max_certificates)) if cert and g.n <= 8 else ([cert] if cert else [])
    rec["certificates_examined"] = [list(c.order) for c in certs]

    sems = (Semantics.TOKEN, Semantics.LITERAL)
    rec["indicator"] = {
        s.value: (record_json(indicator_check(g, opts.config(s), indicator_x(g, cert))) if cert else None)
        for s in sems
    }
    brute = {}
    for s in sems:
        try:
            b = discrete_bruteforce(g, opts.config(s), opts.bruteforce_max_edges)
        except BudgetExceeded as exc:
            brute[s.value] = {"skipped": str(exc)}
            continue
        brute[s.value] = {
            "feasible": b.feasible,
            "matches_oracle": b.feasible == rec["hamiltonian"],
            "satisfying_count": len(b.satisfying),
            "assignments": b.assignments,
        }
    rec["discrete_bruteforce"] = brute

    try:
        sw = sweep(g, opts.config(Semantics.TOKEN), opts.sweep)
        best = sw.argmin
        rec["sweep"] = {
            "semantics": Semantics.TOKEN.value,
            "grid": [sw.grid_alpha, sw.grid_beta],
            "argmin_cell": [best.a, best.b],
            "alpha": num_json(best.alpha),
            "beta": num_json(best.beta),
            "min_total": num_json(best.record.total),
        }
    except BudgetExceeded as exc:
        rec["sweep"] = {"skipped": str(exc)}

    rec["pattern_search"] = [
        {"certificate": list(c.order), **pattern_ladder(g, certificate_pattern(c), opts.sweep, opts.ladder).to_json()}
        for c in certs
    ] if opts.ladder else []
    return rec


def corpus_report(directory: str | Path, opts: ReportOptions | None = None,
                  files: Sequence[Path] | None = None) -> dict:
    """One record per ``*.json`` file, ordered by file name; per-file failures are recorded, not raised."""
    opts = opts or ReportOptions()
    d = Path(directory)
    paths = sorted(files if files is not None else d.glob("*.json"), key=lambda p: p.name)
    records = []
    for p in paths:
        try:
            records.append(graph_record(p.name, p.read_bytes(), opts))
        except Exception as exc:  # recorded and carried on, by contract
            records.append({"file": p.name, "error": f"{type(exc).__name__}: {exc}"})
    return {"options": opts.to_json(), "records": records}


def dumps_report(rep: dict) -> str:
    return json.dumps(rep, indent=2, sort_keys=False) + "\n"
