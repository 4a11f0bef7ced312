"""Test corpora: every digraph up to isomorphism for small N, plus seeded random graphs."""
from __future__ import annotations

import itertools
import random
from pathlib import Path

from .graph import DirectedGraph, dump_graph

DEFAULT_SEED = 20240601


def _pair_list(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def canonical_mask(n: int, mask: int, perms=None) -> int:
    """Smallest edge bitmask over all relabelings; equal for isomorphic digraphs."""
    pairs = _pair_list(n)
    bit = {p: k for k, p in enumerate(pairs)}
    edges = [pairs[k] for k in range(len(pairs)) if mask >> k & 1]
    best = None
    for perm in perms or itertools.permutations(range(n)):
        m = 0
        for i, j in edges:
            m |= 1 << bit[perm[i], perm[j]]
        if best is None or m < best:
            best = m
    return best


def nonisomorphic_digraphs(n: int) -> list[DirectedGraph]:
    """One representative (the canonical one) per isomorphism class, by increasing mask."""
    if n > 4:
        raise ValueError("exhaustive isomorphism classes are only generated for n <= 4")
    pairs = _pair_list(n)
    perms = list(itertools.permutations(range(n)))
    seen = set()
    for mask in range(1 << len(pairs)):
        seen.add(canonical_mask(n, mask, perms))
    out = []
    for mask in sorted(seen):
        edges = [(i + 1, j + 1) for k, (i, j) in enumerate(pairs) if mask >> k & 1]
        out.append(DirectedGraph.from_edges(n, edges))
    return out


def random_digraphs(count: int = 50, seed: int = DEFAULT_SEED, sizes=(5, 6), max_edges: int = 12) -> list[DirectedGraph]:
    """Seeded random digraphs; every other one has a planted directed tour."""
    rng = random.Random(seed)
    out = []
    for t in range(count):
        n = sizes[t % len(sizes)]
        pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
        m = rng.randint(n, max_edges)
        chosen: set[tuple[int, int]] = set()
        if t % 2 == 0:
            order = list(range(1, n + 1))
            rng.shuffle(order)
            chosen.update((order[k], order[(k + 1) % n]) for k in range(n))
        rest = [p for p in pairs if p not in chosen]
        chosen.update(rng.sample(rest, m - len(chosen)))
        out.append(DirectedGraph.from_edges(n, sorted(chosen)))
    return out


def acceptance_corpus(seed: int = DEFAULT_SEED) -> list[tuple[str, DirectedGraph]]:
    named = []
    for n in (3, 4):
        for k, g in enumerate(nonisomorphic_digraphs(n)):
            named.append((f"iso_n{n}_{k:03d}.json", g))
    for k, g in enumerate(random_digraphs(seed=seed)):
        named.append((f"rand_n{g.n}_{k:03d}.json", g))
    return named


def write_corpus(directory: str | Path, graphs: list[tuple[str, DirectedGraph]]) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, g in graphs:
        p = d / name
        p.write_text(dump_graph(g), encoding="utf-8")
        paths.append(p)
    return paths
