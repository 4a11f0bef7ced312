import random
from fractions import Fraction

import pytest

from hcpoly.graph import DirectedGraph
from hcpoly.prune import Box, DimensionMismatch, branch_and_prune, default_box, interval_eval
from hcpoly.reduction import ReductionConfig, aggregate, build_system, system_registry
from hcpoly.trigpoly import BASE, TrigPoly

ca, sa, cb, sb = (TrigPoly.var(n) for n in BASE.names)
UNIT = Box(BASE, ((-1, 1),) * 4)


def test_even_power_rule():
    assert interval_eval(ca * ca, UNIT) == (0, 1)
    assert interval_eval(ca ** 3, UNIT) == (-1, 1)


def test_interval_addition():
    assert interval_eval(ca + sa, Box(BASE, ((0, 1),) * 4)) == (0, 2)


def test_dimension_mismatch():
    reg = system_registry(ReductionConfig())
    with pytest.raises(DimensionMismatch):
        interval_eval(TrigPoly.var("cos_a", reg), UNIT)
    with pytest.raises(DimensionMismatch):
        Box(BASE, ((0, 1),) * 3)
    with pytest.raises(ValueError):
        Box(BASE, ((1, 0),) * 4)


def random_poly(rng, registry=BASE, terms=5):
    n = len(registry)
    t = {}
    for _ in range(terms):
        e = tuple(rng.randint(0, 3) for _ in range(n))
        t[e] = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
    return TrigPoly(registry, t, normal=False)


def random_box(rng, n=4):
    out = []
    for _ in range(n):
        lo = Fraction(rng.randint(-8, 6), 4)
        out.append((lo, lo + Fraction(rng.randint(0, 8), 4)))
    return Box(BASE, tuple(out))


def test_enclosures_contain_sampled_values():
    rng = random.Random(17)
    samples = 0
    for _ in range(100):
        p, box = random_poly(rng), random_box(rng)
        lo, hi = interval_eval(p, box)
        corners = [[b[rng.randint(0, 1)] for b in box.bounds] for _ in range(8)]
        pts = corners + [[Fraction(rng.randint(0, 64), 64) * (b[1] - b[0]) + b[0] for b in box.bounds]
                         for _ in range(992)]
        for pt in pts:
            assert lo <= p.eval_exact(pt) <= hi if len(pts) < 100 else lo - 1e-9 <= p.eval_float(pt) <= hi + 1e-9
            samples += 1
    assert samples == 100_000


def test_constant_offset_is_infeasible_quickly():
    v = branch_and_prune(ca * ca + 1, UNIT, Fraction(1, 2), budget=10)
    assert v.infeasible and v.nodes <= 10
    assert v.leaves[0][1] >= 1


def test_root_gives_unknown_with_nearby_candidate():
    v = branch_and_prune(ca * ca, UNIT, 0, budget=200)
    assert not v.infeasible
    assert abs(v.best_point[0]) <= Fraction(1, 8)
    assert v.best_value == 0


def test_planted_roots_never_infeasible():
    rng = random.Random(23)
    for _ in range(20):
        box = random_box(rng)
        root = [Fraction(rng.randint(0, 12), 12) * (b[1] - b[0]) + b[0] for b in box.bounds]
        sos = TrigPoly.zero().as_raw()
        for _ in range(3):
            q = random_poly(rng, terms=4)
            q = q - q.eval_exact(root)
            sos = sos + q * q
        assert sos.eval_exact(root) == 0
        v = branch_and_prune(sos, box, 0, budget=150)
        assert not v.infeasible


def test_certificate_covers_the_box():
    box = Box(BASE, ((-1, 1), (-1, 1), (0, 1), (0, 1)))
    p = (ca - Fraction(1, 3)) ** 2 + (sa - Fraction(1, 5)) ** 2 + Fraction(1, 100)
    v = branch_and_prune(p.as_raw(), box, Fraction(1, 50), budget=5000)
    assert v.infeasible
    volume = sum(
        (b.bounds[0][1] - b.bounds[0][0]) * (b.bounds[1][1] - b.bounds[1][0])
        * (b.bounds[2][1] - b.bounds[2][0]) * (b.bounds[3][1] - b.bounds[3][0])
        for b, _ in v.leaves
    )
    assert volume == 4
    assert all(lb > Fraction(1, 50) for _, lb in v.leaves)
    assert v.to_json() == branch_and_prune(p.as_raw(), box, Fraction(1, 50), budget=5000).to_json()


def test_budget_exhaustion_is_unknown():
    v = branch_and_prune((ca - Fraction(1, 3)) ** 2 + Fraction(1, 10 ** 6), UNIT, Fraction(1, 10 ** 5), budget=3)
    assert v.status == "unknown" and v.exhausted


def test_bisection_is_widest_first_lowest_index():
    box = Box(BASE, ((0, 1), (0, 2), (0, 2), (0, 1)))
    left, right = box.bisect()
    assert left.bounds[1] == (0, 1) and right.bounds[1] == (1, 2)


def test_default_box_ranges():
    cfg = ReductionConfig()
    box = default_box(3, cfg)
    d = dict(zip(box.registry.names, box.bounds))
    assert d["cos_a"] == (-1, 1)
    assert d["eps2"] == (0, Fraction(1, 512))
    assert d["z1"] == (-Fraction(1, 16), Fraction(1, 16))
    big = default_box(3, ReductionConfig(include_box_bounds=True))
    assert dict(zip(big.registry.names, big.bounds))["z14"] == (Fraction(-3, 2), Fraction(3, 2))


def tiny_positive_box(p, centre, radius=Fraction(1, 2 ** 48), limit=Fraction(1, 2 ** 160)):
    """Shrink the radius around ``centre`` until the enclosure lower bound is positive."""
    while radius >= limit:
        box = Box(p.registry, tuple((c - radius, c + radius) for c in centre))
        if interval_eval(p, box)[0] > 0:
            return box
        radius /= 16
    raise AssertionError("no positive enclosure found")


def test_aggregate_tiny_box_is_infeasible():
    # around alpha = beta = 0 every edge value is 2 and CS2 is far from satisfied
    g = DirectedGraph.complete(3)
    p = aggregate(build_system(g))
    centre = [1, 0, 1, 0] + [0] * 9
    assert p.eval_exact(centre) > 0
    box = tiny_positive_box(p, centre)
    v = branch_and_prune(p, box, 0, budget=5)
    assert v.infeasible and v.nodes == 1
