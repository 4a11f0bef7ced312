"""Constraint Sets 1-5 for a directed graph, slack conversion, aggregation and residuals.

The same constraint-set arithmetic (see :func:`constraint_values`) runs over
polynomials when building equations and over plain numbers when computing
residuals, so the symbolic system and the numeric checks cannot drift apart.
"""
from __future__ import annotations

import enum
import itertools
import json
import threading
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

import mpmath

from .graph import DirectedGraph
from .trigpoly import (
    BASE_VARS,
    DEFAULT_PRECISION,
    TrigPoly,
    VarRegistry,
    cos_alpha_plus_k_beta,
    from_json,
    trig_point,
)

EPS_VARS = ("eps1", "eps2", "eps3")
CROSS_CHECK_TOL = 1e-9


class Semantics(str, enum.Enum):
    """How Constraint Set 3 propagates the signal.

    LITERAL iterates ``Y[i] += sum_j Y[j] x[i,j] / 2`` exactly as printed.
    TOKEN moves a unit token along chosen edges and accumulates its visits.
    """

    LITERAL = "literal"
    TOKEN = "token"


class CrossCheckError(RuntimeError):
    """Polynomial and transcendental evaluation of an edge value disagree."""


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class ReductionConfig:
    semantics: Semantics = Semantics.TOKEN
    eps_exponent: int | None = None  # None means N^2
    include_box_bounds: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "semantics", Semantics(self.semantics))
        if self.eps_exponent is not None and (not isinstance(self.eps_exponent, int) or self.eps_exponent < 1):
            raise ValueError(f"eps_exponent must be a positive integer, got {self.eps_exponent!r}")

    def exponent(self, n: int) -> int:
        return n * n if self.eps_exponent is None else self.eps_exponent

    def eps_bound(self, n: int) -> Fraction:
        return Fraction(1, 2 ** self.exponent(n))

    def to_json(self) -> dict:
        return {
            "semantics": self.semantics.value,
            "eps_exponent": self.eps_exponent,
            "include_box_bounds": self.include_box_bounds,
        }


def edge_index(n: int, i: int, j: int) -> int:
    """Frequency index ``k = (i - 1) N + j`` of the edge variable for ``i -> j``."""
    if i == j:
        raise ValueError(f"no edge variable for the diagonal pair ({i}, {j})")
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"pair ({i}, {j}) outside 1..{n}")
    return (i - 1) * n + j


def system_registry(cfg: ReductionConfig) -> VarRegistry:
    n_slack = 6 + (8 if cfg.include_box_bounds else 0)
    return VarRegistry(BASE_VARS + EPS_VARS + tuple(f"z{m}" for m in range(1, n_slack + 1)))


def edge_poly(g: DirectedGraph, i: int, j: int, registry: VarRegistry | None = None) -> TrigPoly:
    """``x_ij = (1 + cos(a + k b)) * C_ij`` as a normal-form polynomial."""
    reg = registry or VarRegistry()
    k = edge_index(g.n, i, j)
    if not g.c(i, j):
        return TrigPoly.zero(reg)
    return cos_alpha_plus_k_beta(k, reg) + 1


def edge_polys(g: DirectedGraph, registry: VarRegistry | None = None) -> dict[tuple[int, int], TrigPoly]:
    return {p: edge_poly(g, *p, registry) for p in g.pairs()}


# -- constraint-set arithmetic, generic over the value ring ----------------

def _half(v):
    if isinstance(v, int):
        return v // 2 if v % 2 == 0 else Fraction(v, 2)
    return v / 2


def _is_zero(v) -> bool:
    return v.is_zero() if isinstance(v, TrigPoly) else v == 0


def cs1_sum(n: int, x: Mapping, one):
    """``sum_{i != j} (2 - x_ij)^2 + x_ij^2``."""
    total = one * 0
    for (i, j), v in x.items():
        if _is_zero(v):
            total = total + 4
        else:
            total = total + (2 - v) * (2 - v) + v * v
    return total


def cs2_sum(n: int, x: Mapping, one):
    """``sum_i (prod_{j != i} (x_ij + 1) - 3)^2``."""
    total = one * 0
    for i in range(1, n + 1):
        p = one
        for j in range(1, n + 1):
            if j != i and not _is_zero(x[i, j]):
                p = p * (x[i, j] + 1)
        d = p - 3
        total = total + d * d
    return total


def propagate(n: int, x: Mapping, semantics: Semantics, one) -> list:
    """Signal strengths ``Y_{., N+1}`` after N propagation steps from node 1."""
    zero = one * 0
    y = [one] + [zero] * (n - 1)
    if Semantics(semantics) is Semantics.LITERAL:
        for _ in range(n):
            nxt = []
            for i in range(1, n + 1):
                acc = y[i - 1]
                for j in range(1, n + 1):
                    if j != i and not _is_zero(x[i, j]) and not _is_zero(y[j - 1]):
                        acc = acc + _half(y[j - 1] * x[i, j])
                nxt.append(acc)
            y = nxt
    else:
        s = list(y)
        for _ in range(n):
            nxt = []
            for j in range(1, n + 1):
                acc = zero
                for i in range(1, n + 1):
                    if i != j and not _is_zero(x[i, j]) and not _is_zero(s[i - 1]):
                        acc = acc + _half(s[i - 1] * x[i, j])
                nxt.append(acc)
            s = nxt
            y = [a + b for a, b in zip(y, s)]
    return y


def cs3_sum(n: int, x: Mapping, semantics: Semantics, one):
    """``(Y_1 - 2)^2 + sum_{i >= 2} (Y_i - 1)^2`` at step N + 1."""
    y = propagate(n, x, semantics, one)
    total = (y[0] - 2) * (y[0] - 2)
    for v in y[1:]:
        total = total + (v - 1) * (v - 1)
    return total


def constraint_values(n: int, x: Mapping, semantics: Semantics, one=1):
    return cs1_sum(n, x, one), cs2_sum(n, x, one), cs3_sum(n, x, semantics, one)


# -- equations and systems -------------------------------------------------

@dataclass(frozen=True)
class Equation:
    poly: TrigPoly
    label: str
    provenance: str

    def to_json(self) -> dict:
        return {"label": self.label, "provenance": self.provenance, "poly": self.poly.to_json()}


class ConstraintSystem:
    """Ordered equations over a fixed registry.

    The registry and labels are fixed by the configuration alone; when built
    from a graph the polynomials are expanded on first access to
    :attr:`equations`.
    """

    def __init__(self, registry: VarRegistry, config: ReductionConfig, n: int,
                 equations: tuple[Equation, ...] | None = None, graph: DirectedGraph | None = None) -> None:
        if equations is None and graph is None:
            raise ValueError("need equations or a graph to build them from")
        self.registry = registry
        self.config = config
        self.n = n
        self._graph = graph
        self._equations = None
        self._lock = threading.Lock()
        if equations is not None:
            self._set(tuple(equations))

    def _set(self, eqs: tuple[Equation, ...]) -> None:
        labels = [e.label for e in eqs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate equation labels: {labels}")
        for e in eqs:
            if e.poly.registry != self.registry:
                raise ValueError(f"equation {e.label} uses a different registry")
        self._equations = eqs

    @property
    def equations(self) -> tuple[Equation, ...]:
        with self._lock:
            if self._equations is None:
                g, cfg, reg = self._graph, self.config, self.registry
                self._set((
                    build_cs1(g, cfg, reg),
                    build_cs2(g, cfg, reg),
                    build_cs3(g, cfg, reg),
                    *build_cs4(g, cfg, reg),
                    *build_cs5(cfg, reg),
                ))
            return self._equations

    def __len__(self) -> int:
        return len(self.labels())

    def __getitem__(self, label: str) -> Equation:
        for e in self.equations:
            if e.label == label:
                return e
        raise KeyError(label)

    def labels(self) -> list[str]:
        if self._equations is not None:
            return [e.label for e in self._equations]
        return system_labels(self.config)

    def values_at(self, point) -> list[Fraction]:
        return [e.poly.eval_exact(point) for e in self.equations]

    def to_json(self) -> dict:
        return {
            "config": {**self.config.to_json(), "n": self.n},
            "variables": list(self.registry.names),
            "equations": [e.to_json() for e in self.equations],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":")) + "\n"


def system_labels(cfg: ReductionConfig) -> list[str]:
    labels = ["CS1", "CS2", "CS3"]
    labels += [f"CS4.{e}.{side}" for e in EPS_VARS for side in ("lower", "upper")]
    labels += ["CS5.pythagoras_alpha", "CS5.pythagoras_beta"]
    if cfg.include_box_bounds:
        labels += [f"CS5.{v}.{side}" for v in BASE_VARS for side in ("lower", "upper")]
    return labels


def system_from_json(doc: dict) -> ConstraintSystem:
    cfg_doc = dict(doc["config"])
    n = cfg_doc.pop("n")
    cfg = ReductionConfig(**cfg_doc)
    reg = VarRegistry(tuple(doc["variables"]))
    eqs = tuple(Equation(from_json(e["poly"], reg), e["label"], e["provenance"]) for e in doc["equations"])
    return ConstraintSystem(reg, cfg, n, equations=eqs)


def _registry(cfg: ReductionConfig, registry: VarRegistry | None) -> VarRegistry:
    return registry or system_registry(cfg)


def build_cs1(g: DirectedGraph, cfg: ReductionConfig, registry: VarRegistry | None = None) -> Equation:
    reg = _registry(cfg, registry)
    one = TrigPoly.constant(1, reg)
    s1 = cs1_sum(g.n, edge_polys(g, reg), one)
    # S1 = 4N(N-1) - eps1
    poly = s1 - 4 * g.n * (g.n - 1) + TrigPoly.var("eps1", reg)
    return Equation(poly, "CS1", "constraint-set-1")


def build_cs2(g: DirectedGraph, cfg: ReductionConfig, registry: VarRegistry | None = None) -> Equation:
    reg = _registry(cfg, registry)
    one = TrigPoly.constant(1, reg)
    poly = cs2_sum(g.n, edge_polys(g, reg), one) - TrigPoly.var("eps2", reg)
    return Equation(poly, "CS2", "constraint-set-2")


def build_cs3(g: DirectedGraph, cfg: ReductionConfig, registry: VarRegistry | None = None) -> Equation:
    reg = _registry(cfg, registry)
    one = TrigPoly.constant(1, reg)
    poly = cs3_sum(g.n, edge_polys(g, reg), cfg.semantics, one) - TrigPoly.var("eps3", reg)
    return Equation(poly, "CS3", f"constraint-set-3:{cfg.semantics.value}")


def slackify(p: TrigPoly, kind: str, bound, slack: str, label: str, provenance: str) -> Equation:
    """Turn ``p <= bound`` (kind ``"upper"``) or ``p >= bound`` (``"lower"``) into ``z^2 + gap = 0``."""
    z = TrigPoly.var(slack, p.registry, normal=p.normal)
    if kind == "upper":
        gap = p - bound
    elif kind == "lower":
        gap = -p + bound
    else:
        raise ValueError(f"bound kind must be 'upper' or 'lower', got {kind!r}")
    return Equation(z * z + gap, label, provenance)


def build_cs4(g: DirectedGraph, cfg: ReductionConfig, registry: VarRegistry | None = None) -> list[Equation]:
    """``0 <= eps_k <= 2^-E`` for k = 1..3, as six slack equations on z1..z6."""
    reg = _registry(cfg, registry)
    lam = cfg.eps_bound(g.n)
    out = []
    slack = 1
    for name in EPS_VARS:
        eps = TrigPoly.var(name, reg)
        out.append(slackify(eps, "lower", 0, f"z{slack}", f"CS4.{name}.lower", "constraint-set-4"))
        out.append(slackify(eps, "upper", lam, f"z{slack + 1}", f"CS4.{name}.upper", "constraint-set-4"))
        slack += 2
    return out


def build_cs5(cfg: ReductionConfig, registry: VarRegistry | None = None) -> list[Equation]:
    """Pythagorean identities, plus the eight ``-1 <= . <= 1`` rows when configured.

    These stay as raw polynomials: in normal form ``sin^2 + cos^2 - 1`` is
    identically zero.
    """
    reg = _registry(cfg, registry)
    out = []
    for angle in ("a", "b"):
        c = TrigPoly.var(f"cos_{angle}", reg, normal=False)
        s = TrigPoly.var(f"sin_{angle}", reg, normal=False)
        out.append(Equation(s * s + c * c - 1, f"CS5.pythagoras_{'alpha' if angle == 'a' else 'beta'}",
                            "constraint-set-5"))
    if cfg.include_box_bounds:
        slack = 7
        for name in BASE_VARS:
            v = TrigPoly.var(name, reg, normal=False)
            out.append(slackify(v, "lower", -1, f"z{slack}", f"CS5.{name}.lower", "constraint-set-5"))
            out.append(slackify(v, "upper", 1, f"z{slack + 1}", f"CS5.{name}.upper", "constraint-set-5"))
            slack += 2
    return out


def build_system(g: DirectedGraph, cfg: ReductionConfig | None = None) -> ConstraintSystem:
    cfg = cfg or ReductionConfig()
    return ConstraintSystem(system_registry(cfg), cfg, g.n, graph=g)


def aggregate(sys: ConstraintSystem) -> TrigPoly:
    """Sum of squared equation polynomials, as a raw polynomial.

    Squares are taken without the sin reduction so the value equals the sum of
    squared equation values at every point, not only on the unit circles.
    """
    total = TrigPoly.zero(sys.registry).as_raw()
    for e in sys.equations:
        p = e.poly.as_raw()
        total = total + p * p
    return total


# -- residuals ---------------------------------------------------------------

def interval_distance(v, lo, hi):
    return max(0, lo - v, v - hi)


@dataclass(frozen=True)
class ResidualRecord:
    """Distances of each constraint-set value to its allowed ``[0, 2^-E]`` interval."""

    s1: object
    s2: object
    s3: object
    eps1: object  # 4N(N-1) - S1
    v1: object
    v2: object
    v3: object
    upper: Fraction

    @property
    def total(self):
        return self.v1 + self.v2 + self.v3

    @property
    def worst(self):
        return max(self.v1, self.v2, self.v3)

    @property
    def feasible(self) -> bool:
        return self.v1 == 0 and self.v2 == 0 and self.v3 == 0

    def as_floats(self) -> dict[str, float]:
        return {k: float(getattr(self, k)) for k in ("s1", "s2", "s3", "v1", "v2", "v3", "total")}


def record_from_values(n: int, s1, s2, s3, upper: Fraction) -> ResidualRecord:
    gap = 4 * n * (n - 1) - s1
    return ResidualRecord(
        s1=s1, s2=s2, s3=s3, eps1=gap,
        v1=interval_distance(gap, 0, upper),
        v2=interval_distance(s2, 0, upper),
        v3=interval_distance(s3, 0, upper),
        upper=upper,
    )


def numeric_edge_values(g: DirectedGraph, alpha, beta, precision: int = DEFAULT_PRECISION,
                        tol: float = CROSS_CHECK_TOL) -> dict[tuple[int, int], mpmath.mpf]:
    """Edge values at ``(alpha, beta)``, by polynomial evaluation checked against ``1 + cos(a + k b)``."""
    pt = trig_point(alpha, beta, precision=precision)
    out = {}
    with mpmath.workprec(precision):
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        for i, j in g.pairs():
            if not g.c(i, j):
                out[i, j] = 0
                continue
            k = edge_index(g.n, i, j)
            sym = edge_poly(g, i, j).eval(pt, precision)
            direct = 1 + mpmath.cos(a + k * b)
            if abs(sym - direct) > tol:
                raise CrossCheckError(f"x[{i},{j}] at ({alpha}, {beta}): polynomial {sym} vs direct {direct}")
            out[i, j] = sym
    return out


def residuals(g: DirectedGraph, cfg: ReductionConfig, alpha, beta,
              precision: int = DEFAULT_PRECISION) -> ResidualRecord:
    x = numeric_edge_values(g, alpha, beta, precision)
    with mpmath.workprec(precision):
        s1, s2, s3 = constraint_values(g.n, x, cfg.semantics, mpmath.mpf(1))
        upper = cfg.eps_bound(g.n)
        up = mpmath.mpf(upper.numerator) / upper.denominator
        rec = record_from_values(g.n, s1, s2, s3, up)
    return replace(rec, upper=upper)


def indicator_check(g: DirectedGraph, cfg: ReductionConfig, xvals: Mapping[tuple[int, int], object]) -> ResidualRecord:
    """Residuals of given edge values, bypassing the trig substitution."""
    x = {}
    for i, j in g.pairs():
        if (i, j) not in xvals:
            raise ValueError(f"edge value for ({i}, {j}) missing")
        v = xvals[i, j]
        if not 0 <= v <= 2:
            raise ValueError(f"edge value x[{i},{j}] = {v} outside [0, 2]")
        if not g.c(i, j) and v != 0:
            raise ValueError(f"edge ({i}, {j}) has cost 0 but value {v}")
        x[i, j] = v
    s1, s2, s3 = constraint_values(g.n, x, cfg.semantics, 1)
    return record_from_values(g.n, s1, s2, s3, cfg.eps_bound(g.n))


@dataclass(frozen=True)
class BruteforceResult:
    feasible: bool
    satisfying: tuple[tuple[tuple[int, int], ...], ...] = field(default=())
    assignments: int = 0


def discrete_bruteforce(g: DirectedGraph, cfg: ReductionConfig, max_edges: int = 12) -> BruteforceResult:
    """Try every {0, 2} assignment on the cost-1 edges.

    ``satisfying`` lists the edge sets carrying value 2, sorted.
    """
    edges = g.edges
    if len(edges) > max_edges:
        raise BudgetExceeded(f"{len(edges)} cost-1 edges exceed the brute-force budget of {max_edges}")
    base = {p: 0 for p in g.pairs()}
    sat = []
    count = 0
    for bits in itertools.product((0, 2), repeat=len(edges)):
        count += 1
        x = dict(base)
        for e, v in zip(edges, bits):
            x[e] = v
        if indicator_check(g, cfg, x).feasible:
            sat.append(tuple(e for e, v in zip(edges, bits) if v))
    sat.sort()
    return BruteforceResult(bool(sat), tuple(sat), count)
