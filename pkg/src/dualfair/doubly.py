"""Constructive doubly-fair allocation algorithms for additive valuations.

* :func:`solve_identical_allocator_ef1` - envy-cycle round picking when the
  allocator values items the same for every agent (doubly EF-1).
* :func:`solve_two_agent_doubly_ef1` - odd cycle of label sequences for two
  agents (doubly EF-1).
* :func:`solve_doubly_prop_log` - recursive halving with LP-rounded splits
  (doubly PROP-2*ceil(log2 n)).
* :func:`solve_bivalued_prop2` - class-aware round robin for personalized
  bi-valued matrices (doubly PROP-2).

Dummy items used for padding never leave this module.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .fairness import is_ef_c_rows, top_values
from .model import Allocation, Instance, bivalued_partition, bundle_value, row_levels
from .numeric import LinearProgram, solve_vertex_optimal, Infeasible


class NotIdenticalAllocator(ValueError):
    pass


class NotTwoAgents(ValueError):
    pass


def log2_ceil(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0


def prop_log_guarantee(n: int) -> int:
    """The c for which :func:`solve_doubly_prop_log` guarantees doubly PROP-c."""
    return 2 * log2_ceil(n)


# --- envy graph ---------------------------------------------------------------


class EnvyGraph:
    """Edge i -> j iff agent i values j's bundle strictly above her own."""

    def __init__(self, valuations: Sequence[Sequence[Fraction]], bundles: Sequence[Sequence[int]]):
        self.n = len(bundles)
        self.bundles = [list(b) for b in bundles]
        vals = [[bundle_value(valuations[i], b) for b in bundles] for i in range(self.n)]
        self.succ = [
            [j for j in range(self.n) if j != i and vals[i][i] < vals[i][j]]
            for i in range(self.n)
        ]

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in self.succ[i]]

    def find_cycle(self) -> list[int] | None:
        """A directed cycle ``[c0, c1, ...]`` with ``c_t -> c_{t+1}``, or None.

        Depth-first from the lowest agent, neighbours in index order.
        """
        state = [0] * self.n  # 0 new, 1 on stack, 2 done
        for root in range(self.n):
            if state[root]:
                continue
            path = [root]
            iters = [iter(self.succ[root])]
            state[root] = 1
            while path:
                nxt = next(iters[-1], None)
                if nxt is None:
                    state[path.pop()] = 2
                    iters.pop()
                    continue
                if state[nxt] == 1:
                    return path[path.index(nxt):]
                if state[nxt] == 0:
                    state[nxt] = 1
                    path.append(nxt)
                    iters.append(iter(self.succ[nxt]))
        return None

    def is_acyclic(self) -> bool:
        return self.find_cycle() is None

    def topological_order(self) -> list[int]:
        """Kahn's order; among available sources the lowest index goes first."""
        indeg = [0] * self.n
        for i in range(self.n):
            for j in self.succ[i]:
                indeg[j] += 1
        heap = [i for i in range(self.n) if indeg[i] == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            i = heapq.heappop(heap)
            order.append(i)
            for j in self.succ[i]:
                indeg[j] -= 1
                if indeg[j] == 0:
                    heapq.heappush(heap, j)
        if len(order) != self.n:
            raise ValueError("envy graph has a cycle")
        return order


def eliminate_cycles(valuations, bundles):
    """Rotate bundles along envy cycles until the envy graph is acyclic.

    Every agent on a rotated cycle takes the bundle she envied.  Accepts a
    list of bundles or an :class:`Allocation` and returns the same kind.
    """
    as_alloc = isinstance(bundles, Allocation)
    current = [list(b) for b in (bundles.bundles if as_alloc else bundles)]
    while True:
        cycle = EnvyGraph(valuations, current).find_cycle()
        if cycle is None:
            break
        taken = [current[cycle[(t + 1) % len(cycle)]] for t in range(len(cycle))]
        for agent, bundle in zip(cycle, taken):
            current[agent] = bundle
    if as_alloc:
        return Allocation(tuple(map(tuple, current)), bundles.m)
    return current


# --- identical allocator: envy-cycle rounds --------------------------------------


def _strip(bundles, m) -> Allocation:
    return Allocation(tuple(tuple(g for g in b if g < m) for b in bundles), m)


def solve_identical_allocator_ef1(instance: Instance, check_rounds: bool = False) -> Allocation:
    """Doubly EF-1 allocation when all rows of ``u`` coincide.

    Items are taken in descending allocator value, ``n`` per round; agents
    pick their favourite in topological order of the envy graph, then envy
    cycles are eliminated.  ``check_rounds`` asserts EF-1 for both matrices
    after every round.
    """
    if any(row != instance.u[0] for row in instance.u):
        raise NotIdenticalAllocator("allocator rows differ between agents")
    n, m = instance.n, instance.m
    total = m + (-m) % n
    zero = (Fraction(0),) * (total - m)
    v = [tuple(row) + zero for row in instance.v]
    u = tuple(instance.u[0]) + zero
    order = sorted(range(total), key=lambda g: (-u[g], g))
    bundles: list[list[int]] = [[] for _ in range(n)]
    for start in range(0, total, n):
        group = order[start:start + n]
        for i in EnvyGraph(v, bundles).topological_order():
            row = v[i]
            pick = min(group, key=lambda g: (-row[g], g))
            bundles[i].append(pick)
            group.remove(pick)
        bundles = eliminate_cycles(v, bundles)
        if check_rounds:
            assert is_ef_c_rows(v, bundles, 1), "round broke EF-1 for the agents"
            assert is_ef_c_rows([u] * n, bundles, 1), "round broke EF-1 for the allocator"
    return _strip(bundles, m)


# --- two agents: odd cycle of label sequences ------------------------------------


def label_sequences(k: int) -> list[str]:
    """The k+1 labelings: alternating ``+-+-...``, then each next one flips
    every label except the one at position i (0-based) for i = 0..k-1."""
    current = ["+" if t % 2 == 0 else "-" for t in range(k)]
    out = ["".join(current)]
    flip = {"+": "-", "-": "+"}
    for i in range(k):
        current = [lab if t == i else flip[lab] for t, lab in enumerate(current)]
        out.append("".join(current))
    return out


@dataclass(frozen=True)
class TwoAgentConstruction:
    padded_m: int
    groups: tuple[tuple[int, int], ...]  # (a_i, b_i), u_1(a_i) >= u_1(b_i)
    labels: tuple[str, ...]
    first_bundles: tuple[frozenset[int], ...]  # agent 1's bundle per candidate (padded ids)


def two_agent_construction(instance: Instance) -> TwoAgentConstruction:
    if instance.n != 2:
        raise NotTwoAgents(f"need exactly 2 agents, got {instance.n}")
    m = instance.m
    total = m + (-m) % 4
    zero = (Fraction(0),) * (total - m)
    v1 = tuple(instance.v[0]) + zero
    u1 = tuple(instance.u[0]) + zero
    by_v = sorted(range(total), key=lambda g: (-v1[g], g))
    pairs = []
    for t in range(0, total, 2):
        x, y = by_v[t], by_v[t + 1]
        pairs.append((x, y) if u1[x] >= u1[y] else (y, x))
    # stable: equal gaps keep the v_1 order of the pairs
    groups = sorted(pairs, key=lambda ab: -(u1[ab[0]] - u1[ab[1]]))
    labels = label_sequences(len(groups))
    firsts = tuple(
        frozenset(a if lab == "+" else b for (a, b), lab in zip(groups, seq)) for seq in labels
    )
    return TwoAgentConstruction(total, tuple(groups), tuple(labels), firsts)


def solve_two_agent_doubly_ef1(instance: Instance) -> Allocation:
    """Doubly EF-1 for two agents: first candidate that agent 2's rows accept."""
    cons = two_agent_construction(instance)
    m = instance.m
    rows2 = [instance.v[1], instance.u[1]]
    for first in cons.first_bundles:
        a1 = tuple(sorted(g for g in first if g < m))
        a2 = tuple(g for g in range(m) if g not in first)
        if all(
            bundle_value(row, a2) >= bundle_value(row, a1) - top_values(row, 1, a1)
            for row in rows2
        ):
            return Allocation((a1, a2), m)
    raise AssertionError("no candidate passed for agent 2; the odd-cycle argument was violated")


# --- recursive halving via LP splits ----------------------------------------------


def balanced_lp(instance: Instance, group1: Sequence[int], group2: Sequence[int], items: Sequence[int]) -> LinearProgram:
    """Fractional split LP: x_j is the share of ``items[j]`` given to group 1.

    Objective is the first group-1 agent's value (its own constraint is
    implied by a non-negative optimum); group 1 gets at least a
    ``|group1|/n`` share under every other row, group 2 at least the rest.
    """
    n = len(group1) + len(group2)
    share = Fraction(len(group1), n)
    rows = []

    def row(w, rel):
        coeffs = tuple(w[g] for g in items)
        rows.append((coeffs, rel, share * sum(coeffs, Fraction(0))))

    for idx, i in enumerate(group1):
        row(instance.u[i], ">=")
        if idx:
            row(instance.v[i], ">=")
    for i in group2:
        row(instance.u[i], "<=")
        row(instance.v[i], "<=")
    lead = instance.v[group1[0]]
    k = len(items)
    return LinearProgram(
        tuple(lead[g] for g in items),
        tuple(rows),
        (Fraction(0),) * k,
        (Fraction(1),) * k,
    )


def is_two_balanced(instance: Instance, group1, group2, x1, x2, k1: int, k2: int) -> bool:
    """Direct evaluation of the 2-balanced PROP-(k1, k2) inequalities."""
    n = len(group1) + len(group2)
    everything = list(x1) + list(x2)
    for group, mine, theirs, k in ((group1, x1, x2, k1), (group2, x2, x1, k2)):
        share = Fraction(len(group), n)
        for i in group:
            for w in (instance.v[i], instance.u[i]):
                if bundle_value(w, mine) < share * bundle_value(w, everything) - top_values(w, k, theirs):
                    return False
    return True


def split_from_vertex(items: Sequence[int], values: Sequence[Fraction]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Round a vertex: integral ones stay, the first ceil(t/2) fractional go to side 1."""
    frac = [j for j, x in enumerate(values) if x.denominator != 1]
    give = set(frac[: (len(frac) + 1) // 2])
    x1 = tuple(items[j] for j, x in enumerate(values) if x == 1 or j in give)
    x2 = tuple(items[j] for j, x in enumerate(values) if not (x == 1 or j in give))
    return x1, x2


def balanced_split(instance: Instance, group1: Sequence[int], group2: Sequence[int], items: Sequence[int] | None = None):
    """Split ``items`` into (X1, X2): a 2-balanced PROP-(n-1, n) split for
    agent groups (group1, group2), with ``|group1| = floor(n/2)``."""
    if items is None:
        items = range(instance.m)
    items = list(items)
    n = len(group1) + len(group2)
    if len(group1) != n // 2 or not group1:
        raise ValueError("group1 must hold floor(n/2) >= 1 agents")
    try:
        sol = solve_vertex_optimal(balanced_lp(instance, group1, group2, items))
    except Infeasible as exc:  # the uniform point is always feasible
        raise AssertionError("split LP reported infeasible") from exc
    assert sol.objective_value >= Fraction(len(group1), n) * bundle_value(instance.v[group1[0]], items)
    assert len(sol.fractional_indices()) <= 2 * n - 1, "vertex has too many fractional coordinates"
    x1, x2 = split_from_vertex(items, sol.values)
    assert is_two_balanced(instance, group1, group2, x1, x2, n - 1, n), "rounded split is not 2-balanced"
    return x1, x2


def solve_doubly_prop_log(instance: Instance) -> Allocation:
    """Doubly PROP-(2*ceil(log2 n)) by recursive halving of the agent set."""
    bundles: list[tuple[int, ...]] = [()] * instance.n

    def recurse(agents, items):
        if len(agents) == 1:
            bundles[agents[0]] = tuple(items)
            return
        half = len(agents) // 2
        x1, x2 = balanced_split(instance, agents[:half], agents[half:], items)
        recurse(agents[:half], x1)
        recurse(agents[half:], x2)

    recurse(list(range(instance.n)), list(range(instance.m)))
    return Allocation(tuple(bundles), instance.m)


# --- personalized bi-valued: class-aware round robin ---------------------------


@dataclass(frozen=True)
class KappaState:
    """kappa[i][j] = |A_i & S_i^(j+1)| - |P & S_i^(j+1)| / n after one pick."""

    step: int
    agent: int
    item: int
    kappa: tuple[tuple[Fraction, Fraction, Fraction, Fraction], ...]

    def violations(self) -> list[str]:
        out = []
        for i, (k1, k2, k3, _) in enumerate(self.kappa):
            if k1 + k2 < -2:
                out.append(f"step {self.step}: agent {i} kappa1+kappa2 = {k1 + k2} < -2")
            if k1 + k3 < -2:
                out.append(f"step {self.step}: agent {i} kappa1+kappa3 = {k1 + k3} < -2")
            if k1 + k2 < -1 and k1 + k3 < -1:
                out.append(f"step {self.step}: agent {i} both sums below -1")
        return out


def solve_bivalued_prop2(instance: Instance, trace: list | None = None) -> Allocation:
    """Doubly PROP-2 for personalized bi-valued v and u.

    On her turn agent i takes (lowest index first) from S^1 if possible;
    otherwise from S^2 or S^3, preferring S^2 when kappa^(2) <= kappa^(3)
    and both are available; otherwise from S^4.  Pass a list as ``trace``
    to receive a :class:`KappaState` after every pick.
    """
    n, m = instance.n, instance.m
    parts = [bivalued_partition(instance, i) for i in range(n)]
    classes = [[sorted(s) for s in p.classes()] for p in parts]
    cls_of = [[0] * m for _ in range(n)]
    for i in range(n):
        for j, s in enumerate(classes[i]):
            for g in s:
                cls_of[i][g] = j
    mine = [[0] * 4 for _ in range(n)]  # |A_i & S_i^j|
    taken = [[0] * 4 for _ in range(n)]  # |P & S_i^j|
    pos = [[0] * 4 for _ in range(n)]  # scan pointer per class
    allocated = [False] * m
    bundles: list[list[int]] = [[] for _ in range(n)]

    def first_free(i, j):
        lst = classes[i][j]
        p = pos[i][j]
        while p < len(lst) and allocated[lst[p]]:
            p += 1
        pos[i][j] = p
        return lst[p] if p < len(lst) else None

    def kappa(i, j):
        return mine[i][j] - Fraction(taken[i][j], n)

    step = 0
    while step < m:
        for i in range(n):
            if step == m:
                break
            free = [first_free(i, j) for j in range(4)]
            if free[0] is not None:
                g = free[0]
            elif free[1] is not None and free[2] is not None:
                g = free[1] if kappa(i, 1) <= kappa(i, 2) else free[2]
            elif free[1] is not None or free[2] is not None:
                g = free[1] if free[1] is not None else free[2]
            else:
                g = free[3]
            allocated[g] = True
            bundles[i].append(g)
            mine[i][cls_of[i][g]] += 1
            for a in range(n):
                taken[a][cls_of[a][g]] += 1
            step += 1
            if trace is not None:
                trace.append(
                    KappaState(
                        step, i, g,
                        tuple(tuple(kappa(a, j) for j in range(4)) for a in range(n)),
                    )
                )
    return Allocation(tuple(map(tuple, bundles)), m)


def bivalued_bound_holds(instance: Instance, allocation: Allocation) -> bool:
    """w_i(A_i) >= w_i(M)/n - 2 q_i + p_i for w in (v, u) and every agent."""
    n = instance.n
    for i, bundle in enumerate(allocation.bundles):
        for w in (instance.v[i], instance.u[i]):
            levels = row_levels(w)
            if levels is None:
                raise ValueError(f"row of agent {i} is not bi-valued")
            p, q = levels
            if bundle_value(w, bundle) < bundle_value(w, range(instance.m)) / n - 2 * q + p:
                return False
    return True


__all__ = [
    "EnvyGraph",
    "KappaState",
    "NotIdenticalAllocator",
    "NotTwoAgents",
    "TwoAgentConstruction",
    "balanced_lp",
    "balanced_split",
    "bivalued_bound_holds",
    "eliminate_cycles",
    "is_two_balanced",
    "label_sequences",
    "log2_ceil",
    "prop_log_guarantee",
    "solve_bivalued_prop2",
    "solve_doubly_prop_log",
    "solve_identical_allocator_ef1",
    "solve_two_agent_doubly_ef1",
    "split_from_vertex",
    "two_agent_construction",
]
