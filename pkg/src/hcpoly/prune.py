"""Interval enclosures of polynomials over rational boxes, and branch-and-prune.

Branch-and-prune only ever certifies infeasibility: a verdict of
``infeasible`` comes with leaf boxes covering the input box, each with an
enclosure lower bound above the threshold.  Anything else is ``unknown``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .reduction import ReductionConfig, system_registry
from .trigpoly import TrigPoly, VarRegistry


class DimensionMismatch(ValueError):
    pass


Interval = tuple[Fraction, Fraction]


@dataclass(frozen=True)
class Box:
    registry: VarRegistry
    bounds: tuple[Interval, ...]

    def __post_init__(self) -> None:
        b = tuple((Fraction(lo), Fraction(hi)) for lo, hi in self.bounds)
        if len(b) != len(self.registry):
            raise DimensionMismatch(f"box has {len(b)} intervals for {len(self.registry)} variables")
        for name, (lo, hi) in zip(self.registry.names, b):
            if lo > hi:
                raise ValueError(f"empty interval for {name}: [{lo}, {hi}]")
        object.__setattr__(self, "bounds", b)

    def widths(self) -> list[Fraction]:
        return [hi - lo for lo, hi in self.bounds]

    def widest(self) -> int:
        """Index of the widest coordinate; ties go to the lowest index."""
        w = self.widths()
        return max(range(len(w)), key=lambda k: (w[k], -k))

    def bisect(self, k: int | None = None) -> tuple[Box, Box]:
        k = self.widest() if k is None else k
        lo, hi = self.bounds[k]
        mid = (lo + hi) / 2
        left = list(self.bounds)
        right = list(self.bounds)
        left[k] = (lo, mid)
        right[k] = (mid, hi)
        return Box(self.registry, tuple(left)), Box(self.registry, tuple(right))

    def midpoint(self) -> list[Fraction]:
        return [(lo + hi) / 2 for lo, hi in self.bounds]

    def contains(self, point: Sequence) -> bool:
        return all(lo <= Fraction(v) <= hi for v, (lo, hi) in zip(point, self.bounds))

    def to_json(self) -> dict:
        return {name: [_q(lo), _q(hi)] for name, (lo, hi) in zip(self.registry.names, self.bounds)}


def _q(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def box_from_json(doc: dict, registry: VarRegistry) -> Box:
    missing = [n for n in registry.names if n not in doc]
    extra = [n for n in doc if n not in registry.names]
    if missing or extra:
        raise DimensionMismatch(f"box variables mismatch: missing {missing}, unknown {extra}")
    return Box(registry, tuple((Fraction(doc[n][0]), Fraction(doc[n][1])) for n in registry.names))


def default_box(n: int, cfg: ReductionConfig) -> Box:
    """Trig variables in [-1, 1]; eps and slack variables in the ranges their bounds allow.

    Slack ``z`` on an eps bound satisfies ``z^2 <= 2^-E``; the rational radius
    ``2^-floor(E/2)`` covers that.  Box-bound slacks satisfy ``z^2 <= 2``.
    """
    reg = system_registry(cfg)
    e = cfg.exponent(n)
    lam = cfg.eps_bound(n)
    r = Fraction(1, 2 ** (e // 2))
    bounds = []
    for name in reg.names:
        if name.startswith(("cos_", "sin_")):
            bounds.append((Fraction(-1), Fraction(1)))
        elif name.startswith("eps"):
            bounds.append((Fraction(0), lam))
        elif int(name[1:]) <= 6:
            bounds.append((-r, r))
        else:
            bounds.append((Fraction(-3, 2), Fraction(3, 2)))
    return Box(reg, tuple(bounds))


def _imul(a: Interval, b: Interval) -> Interval:
    a0, a1 = a
    b0, b1 = b
    if a0 >= 0 and b0 >= 0:
        return a0 * b0, a1 * b1
    ps = (a0 * b0, a0 * b1, a1 * b0, a1 * b1)
    return min(ps), max(ps)


def _ipow(iv: Interval, k: int) -> Interval:
    lo, hi = iv
    if k == 0:
        return Fraction(1), Fraction(1)
    a, b = lo ** k, hi ** k
    if k % 2 == 0:
        if lo <= 0 <= hi:
            return Fraction(0), max(a, b)
        return min(a, b), max(a, b)
    return a, b


def interval_eval(p: TrigPoly, box: Box) -> Interval:
    """Enclosure of the range of ``p`` over ``box``, term by term.

    Even powers use their true range (``x^2`` over ``[-1, 1]`` is ``[0, 1]``),
    so single-variable squares are tight.
    """
    if p.registry != box.registry:
        raise DimensionMismatch(f"polynomial over {p.registry.names}, box over {box.registry.names}")
    powers: dict[tuple[int, int], Interval] = {}
    lo_total = Fraction(0)
    hi_total = Fraction(0)
    for e, c in p.terms.items():
        enc: Interval | None = None
        for v, k in enumerate(e):
            if not k:
                continue
            key = (v, k)
            pv = powers.get(key)
            if pv is None:
                pv = powers[key] = _ipow(box.bounds[v], k)
            enc = pv if enc is None else _imul(enc, pv)
        if enc is None:
            lo_total += c
            hi_total += c
        elif c > 0:
            lo_total += c * enc[0]
            hi_total += c * enc[1]
        else:
            lo_total += c * enc[1]
            hi_total += c * enc[0]
    return lo_total, hi_total


@dataclass(frozen=True)
class PruneVerdict:
    status: str  # "infeasible" or "unknown"
    nodes: int
    budget: int
    leaves: tuple[tuple[Box, Fraction], ...] = field(default=())
    best_point: tuple[Fraction, ...] | None = None
    best_value: Fraction | None = None
    exhausted: bool = False

    @property
    def infeasible(self) -> bool:
        return self.status == "infeasible"

    def to_json(self) -> dict:
        doc = {
            "verdict": self.status,
            "leaf_count": len(self.leaves),
            "nodes_used": self.nodes,
            "budget": self.budget,
            "budget_exhausted": self.exhausted,
        }
        if self.best_point is not None:
            doc["best_candidate"] = {
                "point": [_q(v) for v in self.best_point],
                "point_decimal": [float(v) for v in self.best_point],
                "value": _q(self.best_value),
                "value_decimal": float(self.best_value),
            }
        if self.infeasible:
            doc["certificate"] = [{"box": b.to_json(), "lower_bound": _q(lb)} for b, lb in self.leaves]
        return doc


def branch_and_prune(p: TrigPoly, box: Box, threshold=0, budget: int = 1000) -> PruneVerdict:
    """Bisect until every leaf's enclosure lower bound exceeds ``threshold``, or the budget runs out.

    Depth-first, left child first, so the search tree and the leaf order are
    deterministic.  ``budget`` caps the number of boxes examined.
    """
    threshold = Fraction(threshold)
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    stack = [box]
    pruned = []
    nodes = 0
    best_pt = None
    best_val = None
    while stack:
        if nodes >= budget:
            return PruneVerdict("unknown", nodes, budget, best_point=best_pt, best_value=best_val, exhausted=True)
        b = stack.pop()
        nodes += 1
        lo, _ = interval_eval(p, b)
        if lo > threshold:
            pruned.append((b, lo))
            continue
        mid = b.midpoint()
        val = p.eval_exact(mid)
        if best_val is None or val < best_val:
            best_pt, best_val = tuple(mid), val
        if all(w == 0 for w in b.widths()):
            # a degenerate box that cannot be pruned holds a point at or below threshold
            return PruneVerdict("unknown", nodes, budget, best_point=best_pt, best_value=best_val)
        left, right = b.bisect()
        stack.append(right)
        stack.append(left)
    return PruneVerdict("infeasible", nodes, budget, leaves=tuple(pruned))
