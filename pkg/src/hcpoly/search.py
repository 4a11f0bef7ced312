"""Grid sweeps over (alpha, beta), derivative-free refinement and target-pattern search."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np

from .graph import DirectedGraph, HamiltonCertificate
from .reduction import BudgetExceeded, ReductionConfig, ResidualRecord, edge_index, residuals
from .trigpoly import DEFAULT_PRECISION, MIN_PRECISION

LADDER = (8, 64, 512, 4096)
SWEEP_HEADER = ("alpha", "beta", "v1", "v2", "v3", "total")
_GRID_CHUNK = 1 << 22  # float64 cells evaluated per numpy block


@dataclass(frozen=True)
class SweepConfig:
    grid_alpha: int = 8
    grid_beta: int = 8
    precision: int = DEFAULT_PRECISION
    budget: int = 10_000  # objective evaluations allowed to refine
    max_cells: int = 1 << 16

    def __post_init__(self) -> None:
        if self.grid_alpha < 2 or self.grid_beta < 2:
            raise ValueError("grid cell counts must be >= 2")
        if self.precision < MIN_PRECISION:
            raise ValueError(f"precision must be >= {MIN_PRECISION} bits")
        if self.budget < 0:
            raise ValueError("refinement budget must be >= 0")

    def to_json(self) -> dict:
        return {
            "grid_alpha": self.grid_alpha,
            "grid_beta": self.grid_beta,
            "precision": self.precision,
            "budget": self.budget,
            "max_cells": self.max_cells,
        }


def cell_center(index: int, cells: int, precision: int) -> mpmath.mpf:
    with mpmath.workprec(precision):
        return (index + mpmath.mpf(1) / 2) * 2 * mpmath.pi / cells


@dataclass(frozen=True)
class SweepCell:
    a: int
    b: int
    alpha: mpmath.mpf
    beta: mpmath.mpf
    record: ResidualRecord


@dataclass(frozen=True)
class SweepResult:
    cells: tuple[SweepCell, ...]
    grid_alpha: int
    grid_beta: int

    @property
    def argmin(self) -> SweepCell:
        # first minimum in row-major order
        return min(self.cells, key=lambda c: c.record.total)

    def __len__(self) -> int:
        return len(self.cells)


def _sweep_row(args) -> list[tuple[int, int, ResidualRecord]]:
    g, cfg, sc, a = args
    alpha = cell_center(a, sc.grid_alpha, sc.precision)
    out = []
    for b in range(sc.grid_beta):
        beta = cell_center(b, sc.grid_beta, sc.precision)
        out.append((a, b, residuals(g, cfg, alpha, beta, sc.precision)))
    return out


def sweep(g: DirectedGraph, cfg: ReductionConfig, sc: SweepConfig, workers: int = 1) -> SweepResult:
    """Residuals at every cell center, alpha-major; rows may be farmed out to worker processes."""
    n_cells = sc.grid_alpha * sc.grid_beta
    if n_cells > sc.max_cells:
        raise BudgetExceeded(f"{n_cells} grid cells exceed the sweep budget of {sc.max_cells}")
    jobs = [(g, cfg, sc, a) for a in range(sc.grid_alpha)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    cells = []
    for row in rows:
        for a, b, rec in row:
            cells.append(SweepCell(a, b, cell_center(a, sc.grid_alpha, sc.precision),
                                   cell_center(b, sc.grid_beta, sc.precision), rec))
    return SweepResult(tuple(cells), sc.grid_alpha, sc.grid_beta)


def _dec(v, digits: int = 17) -> str:
    return mpmath.nstr(mpmath.mpf(v), digits, strip_zeros=False) if not isinstance(v, int) else str(v)


def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for c in result.cells:
        r = c.record
        w.writerow([_dec(c.alpha), _dec(c.beta), _dec(r.v1), _dec(r.v2), _dec(r.v3), _dec(r.total)])
    return buf.getvalue()


@dataclass(frozen=True)
class Descent:
    point: tuple
    value: object
    start_value: object
    evaluations: int
    final_step: object
    exhausted: bool


def pattern_descent(f: Callable, start: Sequence, step, min_step, budget: int,
                    wrap: object | None = None) -> Descent:
    """Compass search: try +step then -step on each axis, keep strict improvements, halve on failure.

    Stops once ``step < min_step`` or after ``budget`` evaluations of ``f``
    (the evaluation of ``start`` included).  With ``wrap`` set, coordinates
    are reduced modulo it.
    """
    x = list(start)
    if budget <= 0:
        return Descent(tuple(x), None, None, 0, step, True)
    fx = f(*x)
    f0 = fx
    evals = 1
    while step >= min_step:
        improved = False
        for k in range(len(x)):
            for sign in (1, -1):
                if evals >= budget:
                    return Descent(tuple(x), fx, f0, evals, step, True)
                y = list(x)
                y[k] = y[k] + sign * step
                if wrap is not None:
                    y[k] = y[k] % wrap
                fy = f(*y)
                evals += 1
                if fy < fx:
                    x, fx = y, fy
                    improved = True
                    break
        if not improved:
            step = step / 2
    return Descent(tuple(x), fx, f0, evals, step, False)


@dataclass(frozen=True)
class RefineResult:
    alpha: object
    beta: object
    record: ResidualRecord | None
    start_record: ResidualRecord | None
    evaluations: int
    exhausted: bool


def _two_pi(precision: int):
    with mpmath.workprec(precision):
        return 2 * mpmath.pi


def refine(g: DirectedGraph, cfg: ReductionConfig, start: tuple, sc: SweepConfig,
           step=None) -> RefineResult:
    """Pattern search on the residual total starting from ``start``."""
    tp = _two_pi(sc.precision)
    alpha, beta = (mpmath.mpf(v) for v in start)
    if not (0 <= alpha < tp and 0 <= beta < tp):
        raise ValueError(f"start ({start[0]}, {start[1]}) outside [0, 2pi)^2")
    if sc.budget == 0:
        return RefineResult(start[0], start[1], None, None, 0, True)
    cache: dict = {}

    def total(a, b):
        rec = residuals(g, cfg, a, b, sc.precision)
        cache[a, b] = rec
        return rec.total

    with mpmath.workprec(sc.precision):
        if step is None:
            step = tp / (2 * max(sc.grid_alpha, sc.grid_beta))
        d = pattern_descent(total, (alpha, beta), mpmath.mpf(step),
                            mpmath.mpf(2) ** (-(sc.precision // 2)), sc.budget, wrap=tp)
    a, b = d.point
    return RefineResult(a, b, cache[a, b], cache[alpha, beta], d.evaluations, d.exhausted)


def _check_pattern(g: DirectedGraph, H: Iterable[tuple[int, int]]) -> frozenset:
    hs = frozenset((int(i), int(j)) for i, j in H)
    for i, j in sorted(hs):
        if not (1 <= i <= g.n and 1 <= j <= g.n) or i == j or not g.c(i, j):
            raise ValueError(f"pattern edge {i}->{j} is not a cost-1 edge of the graph")
    return hs


def pattern_objective(g: DirectedGraph, H, alpha, beta, precision: int = DEFAULT_PRECISION) -> mpmath.mpf:
    """Squared distance of the edge values from the 2-on-H, 0-elsewhere target."""
    hs = _check_pattern(g, H)
    with mpmath.workprec(precision):
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        phi = mpmath.mpf(0)
        for i, j in g.edges:
            x = 1 + mpmath.cos(a + edge_index(g.n, i, j) * b)
            phi += (x - 2) ** 2 if (i, j) in hs else x ** 2
        return phi


def _pattern_arrays(g: DirectedGraph, hs: frozenset):
    ks = np.array([edge_index(g.n, i, j) for i, j in g.edges], dtype=np.float64)
    target = np.array([2.0 if e in hs else 0.0 for e in g.edges])
    return ks, target


def pattern_grid(g: DirectedGraph, H, cells: int) -> tuple[float, int, int]:
    """Float64 minimum of the pattern objective over the grid nodes ``2 pi (a, b) / cells``.

    Node coordinates are computed as ``2 pi * (a / cells)`` so nested grids
    share bit-identical nodes.  Returns the first minimum in row-major order.
    """
    hs = _check_pattern(g, H)
    ks, target = _pattern_arrays(g, hs)
    frac = np.arange(cells, dtype=np.float64) / cells
    angles = 2 * math.pi * frac
    rows = max(1, _GRID_CHUNK // (cells * max(1, len(ks))))
    best = (math.inf, 0, 0)
    for a0 in range(0, cells, rows):
        al = angles[a0:a0 + rows]
        phi = np.zeros((len(al), cells))
        for k, t in zip(ks, target):
            x = 1.0 + np.cos(al[:, None] + k * angles[None, :])
            phi += (x - t) ** 2
        idx = int(np.argmin(phi))
        v = float(phi.flat[idx])
        if v < best[0]:
            best = (v, a0 + idx // cells, idx % cells)
    return best


@dataclass(frozen=True)
class PatternResult:
    pattern: tuple[tuple[int, int], ...]
    cells: int
    alpha: object
    beta: object
    phi_min: object
    grid_min: float
    grid_node: tuple[int, int]
    evaluations: int
    exhausted: bool

    def to_json(self) -> dict:
        return {
            "pattern": [list(e) for e in self.pattern],
            "grid": self.cells,
            "grid_min_float64": self.grid_min,
            "grid_node": list(self.grid_node),
            "alpha": _dec(self.alpha),
            "beta": _dec(self.beta),
            "phi_min": _dec(self.phi_min),
            "phi_min_is": "upper bound on the true minimum",
            "refine_evaluations": self.evaluations,
            "refine_budget_exhausted": self.exhausted,
        }


def pattern_search(g: DirectedGraph, H, sc: SweepConfig, cells: int | None = None) -> PatternResult:
    """Grid minimum of the pattern objective, refined by compass search.

    ``phi_min`` is only an upper bound on the true minimum.
    """
    hs = _check_pattern(g, H)
    cells = cells or max(sc.grid_alpha, sc.grid_beta)
    gv, ia, ib = pattern_grid(g, hs, cells)
    prec = sc.precision
    with mpmath.workprec(prec):
        tp = 2 * mpmath.pi
        a0 = tp * mpmath.mpf(ia) / cells
        b0 = tp * mpmath.mpf(ib) / cells
        f = lambda a, b: pattern_objective(g, hs, a, b, prec)  # noqa: E731
        if sc.budget == 0:
            val = f(a0, b0)
            return PatternResult(tuple(sorted(hs)), cells, a0, b0, val, gv, (ia, ib), 0, True)
        d = pattern_descent(f, (a0, b0), tp / (2 * cells), mpmath.mpf(2) ** (-(prec // 2)),
                            sc.budget, wrap=tp)
    a, b = d.point
    return PatternResult(tuple(sorted(hs)), cells, a, b, d.value, gv, (ia, ib), d.evaluations, d.exhausted)


@dataclass(frozen=True)
class Ladder:
    pattern: tuple[tuple[int, int], ...]
    levels: tuple[PatternResult, ...]
    best: tuple  # running minimum of phi_min per level

    def to_json(self) -> dict:
        return {
            "pattern": [list(e) for e in self.pattern],
            "levels": [lv.to_json() for lv in self.levels],
            "phi_min_upper_bounds": [_dec(v) for v in self.best],
            "note": "values are upper bounds from finite grids plus local refinement; no global optimality is claimed",
        }


def pattern_ladder(g: DirectedGraph, H, sc: SweepConfig, levels: Sequence[int] = LADDER) -> Ladder:
    results = []
    best = []
    for cells in levels:
        r = pattern_search(g, H, sc, cells)
        results.append(r)
        best.append(r.phi_min if not best or r.phi_min < best[-1] else best[-1])
    return Ladder(results[0].pattern, tuple(results), tuple(best))


def certificate_pattern(cert: HamiltonCertificate) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(cert.edges()))
