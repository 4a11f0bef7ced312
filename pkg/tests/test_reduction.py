import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from hcpoly.graph import DirectedGraph, HamiltonCertificate, indicator_x
from hcpoly.reduction import (
    BudgetExceeded,
    ConstraintSystem,
    Equation,
    ReductionConfig,
    Semantics,
    aggregate,
    build_cs1,
    build_cs2,
    build_cs3,
    build_cs5,
    build_system,
    constraint_values,
    discrete_bruteforce,
    edge_index,
    edge_poly,
    indicator_check,
    numeric_edge_values,
    propagate,
    residuals,
    slackify,
    system_from_json,
    system_registry,
)
from hcpoly.trigpoly import BASE, TrigPoly, deserialize, rational_circle_point, serialize

K3 = DirectedGraph.complete(3)
TOKEN = ReductionConfig()
LITERAL = ReductionConfig(semantics=Semantics.LITERAL)
TRI = indicator_x(K3, HamiltonCertificate((1, 2, 3)))


def zeros(g):
    return {p: 0 for p in g.pairs()}


def test_edge_index_is_injective():
    for n in range(2, 9):
        ks = [edge_index(n, i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
        assert len(set(ks)) == len(ks)
        assert min(ks) >= 1 and max(ks) <= n * n


def test_edge_poly_examples():
    g = DirectedGraph.from_edges(3, [(1, 2)])
    assert edge_poly(g, 2, 1).is_zero()
    ca, sa, cb, sb = (TrigPoly.var(n) for n in BASE.names)
    assert edge_poly(g, 1, 2) == 1 + ca * (2 * cb * cb - 1) - 2 * sa * sb * cb
    with pytest.raises(ValueError):
        edge_poly(g, 1, 1)


def test_edge_values_in_range_and_dual_path():
    g = DirectedGraph.complete(4)
    rng = random.Random(5)
    for _ in range(100):
        a, b = rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi)
        x = numeric_edge_values(g, a, b)  # raises on a dual-path mismatch
        assert all(0 <= v <= 2 for v in x.values())


def test_edge_polys_in_range_float_samples():
    polys = [edge_poly(DirectedGraph.complete(3), i, j) for i, j in K3.edges]
    rng = random.Random(9)
    for _ in range(10_000 // len(polys)):
        a, b = rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi)
        pt = [math.cos(a), math.sin(a), math.cos(b), math.sin(b)]
        for p in polys:
            assert -1e-9 <= p.eval_float(pt) <= 2 + 1e-9


def test_cs1_examples():
    s1, _, _ = constraint_values(3, TRI, Semantics.TOKEN)
    assert 4 * 3 * 2 - s1 == 0
    x = dict(TRI)
    x[1, 2] = 1
    s1, _, _ = constraint_values(3, x, Semantics.TOKEN)
    assert 24 - s1 == 2


def test_cs2_per_node_terms():
    g = DirectedGraph.complete(3)
    base = zeros(g)
    for out, term in [((2, 0), 0), ((2, 2), 36), ((0, 0), 4)]:
        x = dict(base)
        x[1, 2], x[1, 3] = out
        x[2, 3] = 2
        x[3, 1] = 2
        _, s2, _ = constraint_values(3, x, Semantics.TOKEN)
        assert s2 == term


def test_cs3_hand_iterations():
    assert propagate(3, TRI, Semantics.LITERAL, 1) == [2, 3, 3]
    assert propagate(3, TRI, Semantics.TOKEN, 1) == [2, 1, 1]
    assert constraint_values(3, TRI, Semantics.LITERAL)[2] == 8
    assert constraint_values(3, TRI, Semantics.TOKEN)[2] == 0
    for n in (3, 4, 5):
        g = DirectedGraph.complete(n)
        for sem in Semantics:
            assert propagate(n, zeros(g), sem, 1) == [1] + [0] * (n - 1)
            assert constraint_values(n, zeros(g), sem)[2] == 1 + (n - 1)


def test_symbolic_constraint_sets_match_numeric_values():
    rng = random.Random(2)
    g = DirectedGraph.from_edges(3, [(1, 2), (2, 3), (3, 1), (1, 3)])
    for cfg in (TOKEN, LITERAL):
        reg = system_registry(cfg)
        eqs = [build_cs1(g, cfg, reg), build_cs2(g, cfg, reg), build_cs3(g, cfg, reg)]
        for _ in range(5):
            c1, s1 = rational_circle_point(Fraction(rng.randint(-9, 9), rng.randint(1, 9)))
            c2, s2 = rational_circle_point(Fraction(rng.randint(-9, 9), rng.randint(1, 9)))
            eps = [Fraction(rng.randint(0, 9), 7) for _ in range(3)]
            pt = [c1, s1, c2, s2] + eps + [0] * (len(reg) - 7)
            x = {}
            for i, j in g.pairs():
                x[i, j] = edge_poly(g, i, j).eval_exact([c1, s1, c2, s2])
            v1, v2, v3 = constraint_values(3, x, cfg.semantics)
            assert eqs[0].poly.eval_exact(pt) == v1 - 24 + eps[0]
            assert eqs[1].poly.eval_exact(pt) == v2 - eps[1]
            assert eqs[2].poly.eval_exact(pt) == v3 - eps[2]


def test_cs5_examples():
    eqs = build_cs5(TOKEN)
    assert len(eqs) == 2
    reg = system_registry(TOKEN)
    pt = [Fraction(3, 5), Fraction(4, 5), 1, 0] + [0] * 9
    assert eqs[0].poly.eval_exact(pt) == 0
    pt = [1, 1, 1, 0] + [0] * 9
    assert eqs[0].poly.eval_exact(pt) == 1
    assert len(reg) == 13
    assert len(build_cs5(ReductionConfig(include_box_bounds=True))) == 10


def test_slackify_examples():
    reg = system_registry(TOKEN)
    p = TrigPoly.var("eps1", reg)
    up = slackify(p, "upper", Fraction(1, 4), "z1", "t", "t")
    lo = slackify(p, "lower", 0, "z2", "s", "s")
    pt = lambda e, z1, z2: [0, 0, 0, 0, e, 0, 0, z1, z2] + [0] * 4  # noqa: E731
    # p = lambda: only z = 0
    assert up.poly.eval_exact(pt(Fraction(1, 4), 0, 0)) == 0
    assert up.poly.eval_exact(pt(Fraction(1, 4), Fraction(1, 10), 0)) != 0
    # p >= 0 with p = 1/4: z = +-1/2
    for z in (Fraction(1, 2), Fraction(-1, 2)):
        assert lo.poly.eval_exact(pt(Fraction(1, 4), 0, z)) == 0
    # p <= 1/4 with p = 1: z^2 would have to be -3/4, so the row stays positive
    assert up.poly.eval_exact(pt(1, 0, 0)) == Fraction(3, 4)
    with pytest.raises(ValueError):
        slackify(p, "sideways", 0, "z1", "x", "x")


def test_build_system_counts():
    s = build_system(K3)
    assert len(s) == 11 and len(s.registry) == 13
    b = build_system(K3, ReductionConfig(include_box_bounds=True))
    assert len(b) == 19 and len(b.registry) == 21
    assert len(b.equations) == 19
    for n in range(3, 9):
        assert len(build_system(DirectedGraph.complete(n)).registry) == 13


def test_system_round_trips():
    s = build_system(K3, ReductionConfig(include_box_bounds=True))
    for e in s.equations:
        assert deserialize(serialize(e.poly), s.registry) == e.poly
    t = system_from_json(s.to_json())
    assert t.labels() == s.labels()
    assert [e.poly for e in t.equations] == [e.poly for e in s.equations]


def test_aggregate_examples():
    reg = system_registry(TOKEN)
    p = TrigPoly.var("cos_a", reg) - 1
    q = TrigPoly.var("eps1", reg) * 2
    sys_ = ConstraintSystem(reg, TOKEN, 3, equations=(Equation(p, "p", "t"), Equation(q, "q", "t")))
    pt = [2, 0, 0, 0, 1] + [0] * 8
    assert aggregate(sys_).eval_exact(pt) == 5
    empty = ConstraintSystem(reg, TOKEN, 3, equations=())
    assert aggregate(empty).is_zero()


def test_aggregate_zero_exactly_at_roots():
    s = build_system(K3, LITERAL)
    agg = aggregate(s)
    # a constructed root of every row but CS1/CS2/CS3 is still not a root of the aggregate
    pt = [1, 0, 1, 0, 0, 0, 0] + [0] * 6
    vals = s.values_at(pt)
    assert agg.eval_exact(pt) == sum(v * v for v in vals) > 0
    # on the small system {cos_a - 3/5 = 0, Pythagoras} the root (3/5, 4/5) zeroes the aggregate
    reg = system_registry(TOKEN)
    ca, sa = TrigPoly.var("cos_a", reg, normal=False), TrigPoly.var("sin_a", reg, normal=False)
    small = ConstraintSystem(reg, TOKEN, 3, equations=(
        Equation(ca - Fraction(3, 5), "a", "t"), Equation(ca * ca + sa * sa - 1, "b", "t")))
    root = [Fraction(3, 5), Fraction(4, 5)] + [0] * 11
    assert aggregate(small).eval_exact(root) == 0
    assert aggregate(small).eval_exact([Fraction(3, 5), Fraction(-4, 5)] + [0] * 11) == 0
    assert aggregate(small).eval_exact([Fraction(4, 5), Fraction(3, 5)] + [0] * 11) > 0


def test_aggregate_law_with_box_bounds():
    g = DirectedGraph.from_edges(4, [(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)])
    s = build_system(g, ReductionConfig(Semantics.LITERAL, include_box_bounds=True))
    agg = aggregate(s)
    rng = random.Random(3)
    for _ in range(3):
        pt = [Fraction(rng.randint(-9, 9), rng.randint(1, 7)) for _ in s.registry.names]
        assert agg.eval_exact(pt) == sum(v * v for v in s.values_at(pt))


def test_residual_example_k3_origin():
    r = residuals(K3, TOKEN, 0, 0)
    assert r.s1 == 24 and r.v1 == 0
    assert r.s2 == 108
    assert r.v2 == 108 - mpmath.mpf(2) ** -9


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_residuals_non_negative(a, b):
    r = residuals(K3, LITERAL, a, b)
    assert r.v1 >= 0 and r.v2 >= 0 and r.v3 >= 0
    assert r.total == r.v1 + r.v2 + r.v3


def test_indicator_check_examples():
    t = indicator_check(K3, TOKEN, TRI)
    assert (t.v1, t.v2, t.v3) == (0, 0, 0)
    lit = indicator_check(K3, LITERAL, TRI)
    assert lit.v3 == 8 - Fraction(1, 512)
    z = indicator_check(K3, TOKEN, zeros(K3))
    assert z.v2 == 12 - Fraction(1, 512)
    with pytest.raises(ValueError):
        indicator_check(K3, TOKEN, {**TRI, (1, 2): 3})
    g = DirectedGraph.from_edges(3, [(1, 2), (2, 3), (3, 1)])
    with pytest.raises(ValueError):
        indicator_check(g, TOKEN, {**zeros(g), (2, 1): 2})


def test_discrete_bruteforce_examples():
    r = discrete_bruteforce(K3, TOKEN)
    assert r.assignments == 64
    assert r.satisfying == (((1, 2), (2, 3), (3, 1)), ((1, 3), (2, 1), (3, 2)))
    two = DirectedGraph.from_edges(4, [(1, 2), (2, 1), (3, 4), (4, 3)])
    r = discrete_bruteforce(two, TOKEN)
    assert not r.feasible and r.assignments == 16
    sink = DirectedGraph.from_edges(3, [(1, 2), (2, 3), (2, 1)])
    assert not discrete_bruteforce(sink, TOKEN).feasible
    with pytest.raises(BudgetExceeded):
        discrete_bruteforce(DirectedGraph.complete(4), TOKEN, max_edges=11)


def test_literal_semantics_rejects_the_triangle():
    assert not discrete_bruteforce(K3, LITERAL).feasible


def test_cs2_admits_two_cycles_short_of_n_minus_2():
    # two disjoint 2-cycles pass CS1 and CS2; only CS3 rejects them
    two = DirectedGraph.from_edges(4, [(1, 2), (2, 1), (3, 4), (4, 3)])
    x = {**zeros(two), (1, 2): 2, (2, 1): 2, (3, 4): 2, (4, 3): 2}
    r = indicator_check(two, TOKEN, x)
    assert r.v1 == 0 and r.v2 == 0 and r.v3 > 0


def test_eps_exponent_config():
    cfg = ReductionConfig(eps_exponent=3)
    assert cfg.eps_bound(10) == Fraction(1, 8)
    assert TOKEN.eps_bound(3) == Fraction(1, 512)
    with pytest.raises(ValueError):
        ReductionConfig(eps_exponent=0)
