"""Small combinatorial graphs with exact clique and chromatic numbers.

Vertices are enumerated explicitly and adjacency is stored as one int
bitmask per vertex.  Everything here is meant for graphs of a few dozen
vertices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

from .fairness import top_values
from .model import Instance, bundle_value

DEFAULT_VERTEX_CAP = 64


class CapExceeded(Exception):
    pass


class DimensionMismatch(ValueError):
    pass


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class Graph:
    labels: tuple
    adj: tuple[int, ...]
    name: str = ""

    @classmethod
    def from_predicate(cls, labels: Sequence, adjacent: Callable, name: str = "") -> "Graph":
        labels = tuple(labels)
        adj = [0] * len(labels)
        for a, b in itertools.combinations(range(len(labels)), 2):
            if adjacent(labels[a], labels[b]):
                adj[a] |= 1 << b
                adj[b] |= 1 << a
        return cls(labels, tuple(adj), name)

    @classmethod
    def from_edges(cls, n: int, edges, name: str = "") -> "Graph":
        adj = [0] * n
        for a, b in edges:
            if a == b:
                raise ValueError("self-loops are not allowed")
            adj[a] |= 1 << b
            adj[b] |= 1 << a
        return cls(tuple(range(n)), tuple(adj), name)

    @property
    def order(self) -> int:
        return len(self.adj)

    def degree(self, x: int) -> int:
        return self.adj[x].bit_count()

    def edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a in range(self.order) for b in _bits(self.adj[a]) if a < b]

    def has_edge(self, a: int, b: int) -> bool:
        return bool(self.adj[a] >> b & 1)

    def index(self, label) -> int:
        return self.labels.index(label)

    def is_independent(self, vertices) -> bool:
        mask = 0
        for x in vertices:
            mask |= 1 << x
        return all(not (self.adj[x] & mask) for x in vertices)

    def is_clique(self, vertices) -> bool:
        vs = list(vertices)
        return all(self.has_edge(a, b) for a, b in itertools.combinations(vs, 2))

    def is_proper_coloring(self, colors: Sequence[int]) -> bool:
        return len(colors) == self.order and all(colors[a] != colors[b] for a, b in self.edges())

    def to_dimacs(self) -> str:
        edges = self.edges()
        lines = [f"c {self.name}"] if self.name else []
        lines.append(f"p edge {self.order} {len(edges)}")
        lines.extend(f"e {a + 1} {b + 1}" for a, b in edges)
        return "\n".join(lines) + "\n"


def gamma_graph(n: int) -> Graph:
    """All subsets of range(n); A ~ B iff |A & B| <= 1 and |A | B| >= n - 1."""
    labels = [frozenset(_bits(mask)) for mask in range(1 << n)]
    return Graph.from_predicate(
        labels,
        lambda a, b: len(a & b) <= 1 and len(a | b) >= n - 1,
        name=f"gamma({n})",
    )


def kneser_graph(n: int, k: int, s: int = 0) -> Graph:
    """k-subsets of range(n); adjacent iff they share at most s elements."""
    if not 0 <= s < k <= n:
        raise ValueError("need 0 <= s < k <= n")
    labels = [frozenset(c) for c in itertools.combinations(range(n), k)]
    return Graph.from_predicate(labels, lambda a, b: len(a & b) <= s, name=f"kneser({n},{k},{s})")


def kneser_lower_bound(n: int, k: int, s: int) -> int:
    return n - 2 * k + 2 * s + 2


# --- cliques -------------------------------------------------------------------------


def max_clique(g: Graph) -> list[int]:
    """A maximum clique, by branch and bound with a greedy-coloring bound."""
    best: list[int] = []

    def color_bound(cand: int):
        # greedy sequential coloring; returns vertices with their color count
        order, bounds = [], []
        uncolored = cand
        color = 0
        while uncolored:
            color += 1
            avail = uncolored
            while avail:
                x = (avail & -avail).bit_length() - 1
                avail &= ~g.adj[x] & ~(1 << x)
                uncolored &= ~(1 << x)
                order.append(x)
                bounds.append(color)
        return order, bounds

    def expand(current: list[int], cand: int):
        nonlocal best
        order, bounds = color_bound(cand)
        for x, bound in zip(reversed(order), reversed(bounds)):
            if len(current) + bound <= len(best):
                return
            current.append(x)
            nxt = cand & g.adj[x]
            if nxt:
                expand(current, nxt)
            elif len(current) > len(best):
                best = list(current)
            current.pop()
            cand &= ~(1 << x)

    if g.order:
        expand([], (1 << g.order) - 1)
    return sorted(best)


# --- coloring ------------------------------------------------------------------------


def dsatur_coloring(g: Graph) -> list[int]:
    """Greedy DSatur coloring (an upper bound on the chromatic number)."""
    n = g.order
    colors = [-1] * n
    seen = [0] * n  # bitmask of neighbouring colors
    for _ in range(n):
        x = max(
            (v for v in range(n) if colors[v] < 0),
            key=lambda v: (seen[v].bit_count(), g.degree(v), -v),
        )
        c = 0
        while seen[x] >> c & 1:
            c += 1
        colors[x] = c
        for y in _bits(g.adj[x]):
            seen[y] |= 1 << c
    return colors


def is_k_colorable(g: Graph, k: int, seed: Sequence[int] = ()) -> list[int] | None:
    """A proper coloring with at most k colors, or None.

    DSatur backtracking with forward checking.  ``seed`` should be a clique;
    its vertices are fixed to colors 0, 1, ... which removes color symmetry
    among them.  Otherwise a vertex may only open the next unused color.
    """
    n = g.order
    if n == 0:
        return []
    if k <= 0:
        return None
    if len(seed) > k:
        return None
    full = (1 << k) - 1
    colors = [-1] * n
    banned = [0] * n

    def assign(x, c, trail):
        colors[x] = c
        bit = 1 << c
        for y in _bits(g.adj[x]):
            if colors[y] < 0 and not banned[y] & bit:
                banned[y] |= bit
                trail.append(y)
                if banned[y] == full:
                    return False
        return True

    def undo(x, c, trail):
        colors[x] = -1
        bit = 1 << c
        for y in trail:
            banned[y] &= ~bit

    for c, x in enumerate(seed):
        if not assign(x, c, []):
            return None
    used = len(seed)
    degree = [g.degree(v) for v in range(n)]

    def solve(remaining: int, used: int) -> bool:
        if not remaining:
            return True
        x, best = -1, None
        for v in range(n):
            if colors[v] >= 0:
                continue
            free = (full & ~banned[v] & ((1 << used) - 1)).bit_count()
            key = (free, -degree[v])
            if best is None or key < best:
                x, best = v, key
                if free == 0 and used >= k:
                    return False
        options = [c for c in range(used) if not banned[x] >> c & 1]
        if used < k:
            options.append(used)
        for c in options:
            trail: list[int] = []
            ok = assign(x, c, trail)
            if ok and solve(remaining - 1, max(used, c + 1)):
                return True
            undo(x, c, trail)
        return False

    if solve(n - len(seed), used):
        return list(colors)
    return None


@dataclass(frozen=True)
class ColoringResult:
    chromatic_number: int
    coloring: tuple[int, ...]
    clique: tuple[int, ...]


def chromatic_number(g: Graph, cap: int = DEFAULT_VERTEX_CAP) -> ColoringResult:
    """Exact chromatic number with an optimal coloring as witness.

    Starts from the DSatur upper bound and a maximum clique lower bound,
    then tightens the upper bound one color at a time until the search
    proves the next step impossible.
    """
    if g.order > cap:
        raise CapExceeded(f"{g.order} vertices exceed the cap of {cap}")
    if g.order == 0:
        return ColoringResult(0, (), ())
    clique = max_clique(g)
    best = dsatur_coloring(g)
    upper = max(best) + 1
    while upper > len(clique):
        trial = is_k_colorable(g, upper - 1, clique)
        if trial is None:
            break
        best = trial
        upper = max(trial) + 1
    assert g.is_proper_coloring(best)
    return ColoringResult(upper, tuple(best), tuple(clique))


def check_kneser_lower_bound(n: int, k: int, s: int, cap: int = DEFAULT_VERTEX_CAP) -> bool:
    """Exact chromatic number of K(n, k, s) is at least n - 2k + 2s + 2."""
    g = kneser_graph(n, k, s)
    if g.order > cap:
        raise CapExceeded(f"K({n},{k},{s}) has {g.order} vertices, cap is {cap}")
    return chromatic_number(g, cap).chromatic_number >= kneser_lower_bound(n, k, s)


def in_cap_kneser_parameters(cap: int = DEFAULT_VERTEX_CAP, max_n: int = 64):
    """All (n, k, s) with 0 <= s < k < n and C(n, k) <= cap."""
    from math import comb

    out = []
    for n in range(2, max_n + 1):
        for k in range(1, n):
            if comb(n, k) > cap:
                continue
            out.extend((n, k, s) for s in range(k))
    return out


# --- failure sets of two-agent allocations ----------------------------------------


@dataclass(frozen=True)
class FailureSetVerdict:
    """For each of v_1, v_2, u_1, u_2: the first bundles A whose split
    (A, M - A) fails EF-1 for that row, as vertex indices of Gamma(m)."""

    failure_sets: tuple[tuple[int, ...], ...]
    independent: tuple[bool, ...]
    uncovered: tuple[int, ...]  # vertices in no failure set: doubly EF-1 splits

    @property
    def verdict(self) -> bool:
        return all(self.independent) and bool(self.uncovered)


def non_ef1_independent_set(instance: Instance, graph: Graph | None = None) -> FailureSetVerdict:
    n, m = instance.n, instance.m
    if n != 2:
        raise DimensionMismatch(f"needs 2 agents, got {n}")
    if graph is None:
        graph = gamma_graph(m)
    if graph.order != 1 << m:
        raise DimensionMismatch(f"graph has {graph.order} vertices, expected 2^{m}")
    rows = [(instance.v[0], 0), (instance.v[1], 1), (instance.u[0], 0), (instance.u[1], 1)]
    everything = frozenset(range(m))
    sets = []
    for row, agent in rows:
        fails = []
        for x, first in enumerate(graph.labels):
            mine, other = (first, everything - first) if agent == 0 else (everything - first, first)
            if bundle_value(row, mine) < bundle_value(row, other) - top_values(row, 1, other):
                fails.append(x)
        sets.append(tuple(fails))
    covered = set().union(*sets)
    uncovered = tuple(x for x in range(graph.order) if x not in covered)
    return FailureSetVerdict(tuple(sets), tuple(graph.is_independent(s) for s in sets), uncovered)


__all__ = [
    "CapExceeded",
    "ColoringResult",
    "DEFAULT_VERTEX_CAP",
    "DimensionMismatch",
    "FailureSetVerdict",
    "Graph",
    "check_kneser_lower_bound",
    "chromatic_number",
    "dsatur_coloring",
    "gamma_graph",
    "in_cap_kneser_parameters",
    "is_k_colorable",
    "kneser_graph",
    "kneser_lower_bound",
    "max_clique",
    "non_ef1_independent_set",
]
