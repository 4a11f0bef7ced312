"""Directed HCP instances, the graph JSON format and Hamiltonicity oracles."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Iterator

MAX_PERMUTATION_N = 8
MAX_DP_N = 18


class GraphError(ValueError):
    """Invalid graph document or graph data; ``location`` names the offending spot."""

    def __init__(self, message: str, location: str | None = None) -> None:
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class CertificateError(ValueError):
    pass


@dataclass(frozen=True)
class DirectedGraph:
    """Node count plus 0/1 cost matrix; nodes are 1-indexed.

    ``cost`` is stored 0-indexed as a tuple of row tuples, use :meth:`c` for
    the 1-indexed view.
    """

    n: int
    cost: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 2:
            raise GraphError(f"node count must be an integer >= 2, got {self.n!r}", "n")
        if len(self.cost) != self.n or any(len(r) != self.n for r in self.cost):
            raise GraphError("cost matrix must be n x n", "cost")
        for i, row in enumerate(self.cost):
            for j, v in enumerate(row):
                if v not in (0, 1) or isinstance(v, bool):
                    raise GraphError(f"cost must be 0 or 1, got {v!r}", f"cost[{i + 1}][{j + 1}]")
            if row[i] != 0:
                raise GraphError("self-loops are not allowed", f"cost[{i + 1}][{i + 1}]")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> DirectedGraph:
        if not isinstance(n, int) or isinstance(n, bool) or n < 2:
            raise GraphError(f"node count must be an integer >= 2, got {n!r}", "n")
        m = [[0] * n for _ in range(n)]
        for idx, (i, j) in enumerate(edges):
            loc = f"edges[{idx}]"
            for v in (i, j):
                if not isinstance(v, int) or isinstance(v, bool) or not 1 <= v <= n:
                    raise GraphError(f"node index {v!r} outside 1..{n}", loc)
            if i == j:
                raise GraphError(f"self-loop {i}->{j} rejected", loc)
            if m[i - 1][j - 1]:
                raise GraphError(f"duplicate edge {i}->{j}", loc)
            m[i - 1][j - 1] = 1
        return cls(n, tuple(tuple(r) for r in m))

    @classmethod
    def complete(cls, n: int) -> DirectedGraph:
        return cls.from_edges(n, ((i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j))

    def c(self, i: int, j: int) -> int:
        return self.cost[i - 1][j - 1]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(1, self.n + 1) for j in range(1, self.n + 1) if self.c(i, j)]

    def pairs(self) -> Iterator[tuple[int, int]]:
        """All ordered pairs ``i != j`` in row-major order."""
        for i in range(1, self.n + 1):
            for j in range(1, self.n + 1):
                if i != j:
                    yield i, j

    def relabel(self, perm: tuple[int, ...]) -> DirectedGraph:
        """Graph with node ``v`` renamed ``perm[v - 1]``."""
        return DirectedGraph.from_edges(self.n, ((perm[i - 1], perm[j - 1]) for i, j in self.edges))

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}


def parse_graph(text: str | bytes) -> DirectedGraph:
    """Parse the graph JSON document ``{"n": int, "edges": [[from, to], ...]}``."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise GraphError(f"not valid UTF-8 ({exc.reason})", f"byte {exc.start}") from None
    if text.startswith("\ufeff"):
        raise GraphError("byte order mark not allowed", "byte 0")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(doc, dict):
        raise GraphError("top level must be an object", "$")
    extra = set(doc) - {"n", "edges"}
    if extra:
        raise GraphError(f"unknown field(s) {sorted(extra)}", "$")
    for key in ("n", "edges"):
        if key not in doc:
            raise GraphError(f"missing field {key!r}", "$")
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise GraphError(f"n must be an integer, got {n!r}", "n")
    if not isinstance(doc["edges"], list):
        raise GraphError("edges must be an array", "edges")
    pairs = []
    for idx, e in enumerate(doc["edges"]):
        if not isinstance(e, list) or len(e) != 2:
            raise GraphError("edge must be a [from, to] pair", f"edges[{idx}]")
        pairs.append((e[0], e[1]))
    return DirectedGraph.from_edges(n, pairs)


def dump_graph(g: DirectedGraph) -> str:
    return json.dumps(g.to_json(), separators=(",", ":")) + "\n"


@dataclass(frozen=True)
class HamiltonCertificate:
    order: tuple[int, ...]

    def edges(self) -> list[tuple[int, int]]:
        o = self.order
        return [(o[t], o[(t + 1) % len(o)]) for t in range(len(o))]

    def check(self, g: DirectedGraph) -> None:
        """Raise :class:`CertificateError` unless this is a directed tour of ``g``."""
        if sorted(self.order) != list(range(1, g.n + 1)):
            raise CertificateError(f"{self.order} is not a permutation of 1..{g.n}")
        for i, j in self.edges():
            if not g.c(i, j):
                raise CertificateError(f"edge {i}->{j} of tour {self.order} is not in the graph")

    def is_valid(self, g: DirectedGraph) -> bool:
        try:
            self.check(g)
        except CertificateError:
            return False
        return True


def hamiltonian_cycles(g: DirectedGraph, limit: int | None = None) -> Iterator[HamiltonCertificate]:
    """Every directed Hamiltonian cycle, as tours starting at node 1, in lexicographic order."""
    if g.n > MAX_PERMUTATION_N:
        raise ValueError(f"permutation enumeration limited to n <= {MAX_PERMUTATION_N}")
    found = 0
    for rest in itertools.permutations(range(2, g.n + 1)):
        order = (1, *rest)
        if all(g.c(order[t], order[(t + 1) % g.n]) for t in range(g.n)):
            yield HamiltonCertificate(order)
            found += 1
            if limit is not None and found >= limit:
                return


def hamiltonian_dp(g: DirectedGraph) -> HamiltonCertificate | None:
    """Subset dynamic programming over (visited set, current node).

    ``ok[mask][v]`` says a path from ``v`` can cover the nodes missing from
    ``mask`` and close back to node 1; the tour is then read off greedily,
    which yields the lexicographically smallest one.
    """
    n = g.n
    if n > MAX_DP_N:
        raise ValueError(f"subset DP limited to n <= {MAX_DP_N}")
    full = (1 << n) - 1
    succ = [[j for j in range(n) if g.cost[i][j]] for i in range(n)]
    ok = [bytearray(n) for _ in range(1 << n)]
    for v in range(n):
        ok[full][v] = 1 if g.cost[v][0] else 0
    # masks always contain node 0 (node 1); iterate from larger to smaller
    for mask in range(full - 1, 0, -1):
        if not mask & 1:
            continue
        row = ok[mask]
        for v in range(n):
            if not mask >> v & 1:
                continue
            for u in succ[v]:
                if not mask >> u & 1 and ok[mask | 1 << u][u]:
                    row[v] = 1
                    break
    if not ok[1][0]:
        return None
    order = [0]
    mask = 1
    while mask != full:
        v = order[-1]
        u = next(u for u in succ[v] if not mask >> u & 1 and ok[mask | 1 << u][u])
        order.append(u)
        mask |= 1 << u
    return HamiltonCertificate(tuple(v + 1 for v in order))


def is_hamiltonian(g: DirectedGraph) -> HamiltonCertificate | None:
    """Lexicographically smallest tour starting at node 1, or ``None``."""
    if g.n <= MAX_PERMUTATION_N:
        return next(hamiltonian_cycles(g, limit=1), None)
    return hamiltonian_dp(g)


def indicator_x(g: DirectedGraph, cert: HamiltonCertificate) -> dict[tuple[int, int], int]:
    """Idealized edge values: 2 on tour edges, 0 on every other ordered pair."""
    cert.check(g)
    tour = set(cert.edges())
    return {p: (2 if p in tour else 0) for p in g.pairs()}
