"""Maximize the allocator's efficiency subject to the agents' fairness.

Two exact methods for binary agent valuations (an assignment LP for PROP-c,
a difference-vector DP for EF-c), two approximation algorithms for EF-1,
and builders for the hardness gadget instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .fairness import EF, PROP, FairnessReport, allocator_efficiency, check_ef_c, check_prop_c
from .model import Allocation, Instance, bundle_value, row_is_binary
from .numeric import (
    Infeasible,
    LinearProgram,
    is_totally_unimodular_bipartite_form,
    solve_vertex_optimal,
)
from .doubly import NotTwoAgents

EXACT, TWO_APPROX, M_APPROX = "exact", "2-approx", "m-approx"
GADGETS = ("thm51_partition_ef", "thm57_partition_prop", "thm55_independent_set", "thm66_triple")


class NoFeasibleAllocation(Exception):
    pass


class StateSpaceExceeded(Exception):
    pass


class BadParameters(ValueError):
    pass


class NotBinary(ValueError):
    pass


@dataclass(frozen=True)
class MaxEffResult:
    allocation: Allocation
    objective: Fraction
    method: str
    guarantee: str
    fairness_certificate: FairnessReport

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "guarantee": self.guarantee,
            "objective": str(self.objective),
            "allocation": self.allocation.to_json(),
            "certificate": self.fairness_certificate.to_json(),
        }


def _result(instance, allocation, criterion, c, method, guarantee) -> MaxEffResult:
    # the certificate is recomputed here, never taken from the solver
    if criterion == EF:
        cert = check_ef_c(instance, allocation, c, "v")
    else:
        cert = check_prop_c(instance, allocation, c, "v")
    if not cert.verdict:
        raise AssertionError(f"{method} produced an allocation failing {cert.label()}")
    return MaxEffResult(allocation, allocator_efficiency(instance, allocation), method, guarantee, cert)


def _require_binary_v(instance: Instance):
    if not all(row_is_binary(r) for r in instance.v):
        raise NotBinary("agents' valuations must be 0/1")


# --- two agents: pairing along agent 1's order ------------------------------------


def two_agent_pairing(instance: Instance) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """The EF-1 split (S1, S2) built pair by pair along agent 1's ranking.

    Within each consecutive pair the bundle agent 2 currently values more
    (S1 on a tie) receives the item agent 2 values less.
    """
    if instance.n != 2:
        raise NotTwoAgents(f"need exactly 2 agents, got {instance.n}")
    m = instance.m
    v1, v2 = instance.v
    order = sorted(range(m), key=lambda g: (-v1[g], g))
    if m % 2:
        order.append(None)
    val2 = lambda g: Fraction(0) if g is None else v2[g]
    s1, s2 = [], []
    w1 = w2 = Fraction(0)
    for t in range(0, len(order), 2):
        x, y = order[t], order[t + 1]
        richer_first = w1 >= w2
        small, big = (y, x) if val2(x) >= val2(y) else (x, y)
        if richer_first:
            s1.append(small)
            s2.append(big)
        else:
            s2.append(small)
            s1.append(big)
        w1 = w1 + val2(s1[-1])
        w2 = w2 + val2(s2[-1])
    strip = lambda s: tuple(sorted(g for g in s if g is not None))
    return strip(s1), strip(s2)


def maximize_two_agent_ef(instance: Instance, c: int = 1) -> MaxEffResult:
    """EF-1 (hence EF-c) allocation with at least half the optimal efficiency."""
    if c < 1:
        raise ValueError("c must be at least 1")
    s1, s2 = two_agent_pairing(instance)
    a = Allocation((s1, s2), instance.m)
    b = Allocation((s2, s1), instance.m)
    best = b if allocator_efficiency(instance, b) > allocator_efficiency(instance, a) else a
    return _result(instance, best, EF, c, "two-agent-pairing", TWO_APPROX)


# --- round robin behind the best single assignment ---------------------------------


def maximize_round_robin(instance: Instance, c: int = 1) -> MaxEffResult:
    """Give the single highest allocator-valued (agent, item) pair first, then
    round robin with that agent picking last in every round."""
    if c < 1:
        raise ValueError("c must be at least 1")
    n, m = instance.n, instance.m
    bundles: list[list[int]] = [[] for _ in range(n)]
    if m:
        fav, first = max(
            ((i, g) for i in range(n) for g in range(m)),
            key=lambda ig: (instance.u[ig[0]][ig[1]], -ig[0], -ig[1]),
        )
        bundles[fav].append(first)
        left = [g for g in range(m) if g != first]
        turn = [i for i in range(n) if i != fav] + [fav]
        k = 0
        while left:
            i = turn[k % n]
            row = instance.v[i]
            pick = min(left, key=lambda g: (-row[g], g))
            bundles[i].append(pick)
            left.remove(pick)
            k += 1
    alloc = Allocation(tuple(map(tuple, bundles)), m)
    return _result(instance, alloc, EF, c, "round-robin", M_APPROX)


# --- binary agents, PROP-c: assignment LP ------------------------------------------


def prop_assignment_lp(instance: Instance, c: int) -> LinearProgram:
    """Variables x[i*m + j]; agent rows sum_j v_ij x_ij >= ceil(v_i(M)/n) - c,
    item rows sum_i x_ij <= 1, x >= 0."""
    n, m = instance.n, instance.m
    rows = []
    for i in range(n):
        coeffs = [Fraction(0)] * (n * m)
        for j in range(m):
            coeffs[i * m + j] = instance.v[i][j]
        need = -((-bundle_value(instance.v[i], range(m))) // n) - c
        rows.append((tuple(coeffs), ">=", Fraction(need)))
    for j in range(m):
        coeffs = [Fraction(0)] * (n * m)
        for i in range(n):
            coeffs[i * m + j] = Fraction(1)
        rows.append((tuple(coeffs), "<=", Fraction(1)))
    objective = tuple(instance.u[i][j] for i in range(n) for j in range(m))
    return LinearProgram(objective, tuple(rows))


def _le_form(lp: LinearProgram):
    return [tuple(-a for a in coeffs) if rel == ">=" else coeffs for coeffs, rel, _ in lp.rows]


def maximize_binary_prop_lp(instance: Instance, c: int = 1) -> MaxEffResult:
    """Exact optimum under PROP-c when v is binary.

    For 0/1 rows PROP-c is equivalent to v_i(A_i) >= ceil(v_i(M)/n) - c,
    and the constraint matrix is totally unimodular, so a vertex optimum is
    already an assignment.
    """
    _require_binary_v(instance)
    if c < 0:
        raise ValueError("c must be non-negative")
    n, m = instance.n, instance.m
    lp = prop_assignment_lp(instance, c)
    assert is_totally_unimodular_bipartite_form(_le_form(lp)), "assignment LP lost its block structure"
    try:
        sol = solve_vertex_optimal(lp)
    except Infeasible:
        raise NoFeasibleAllocation(f"no PROP-{c} allocation exists") from None
    if sol.fractional_indices():
        raise AssertionError("vertex of the assignment LP is fractional")
    owners = [0] * m  # items nobody takes go to agent 0
    for i in range(n):
        for j in range(m):
            if sol.values[i * m + j] == 1:
                owners[j] = i
    alloc = Allocation.from_assignment(owners, n)
    res = _result(instance, alloc, PROP, c, "lp-binary", EXACT)
    assert res.objective >= sol.objective_value
    return res


# --- binary agents, EF-c: DP over envy differences --------------------------------


def maximize_binary_ef_dp(
    instance: Instance,
    c: int = 1,
    max_agents: int = 4,
    max_states: int = 2_000_000,
) -> MaxEffResult:
    """Exact optimum under EF-c when v is binary.

    Items are assigned in index order.  The state is the vector of
    differences t_ij = v_i(A_i) - v_i(A_j) over ordered pairs; with 0/1
    values EF-c is exactly t_ij >= -c at the end.  A state is dropped once
    the items still ahead cannot lift some t_ij back to -c.
    """
    _require_binary_v(instance)
    if c < 0:
        raise ValueError("c must be non-negative")
    n, m = instance.n, instance.m
    if n > max_agents:
        raise ValueError(f"DP limited to {max_agents} agents, got {n}")
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    v = [[int(x) for x in row] for row in instance.v]
    # ahead[k][i]: items k.. that agent i values at 1
    ahead = [[0] * n for _ in range(m + 1)]
    for k in range(m - 1, -1, -1):
        ahead[k] = [ahead[k + 1][i] + v[i][k] for i in range(n)]

    start = (0,) * len(pairs)
    layer = {start: Fraction(0)}
    parents: list[dict] = []
    for k in range(m):
        nxt: dict = {}
        back: dict = {}
        for state, val in layer.items():
            for a in range(n):
                t = list(state)
                for p, (i, j) in enumerate(pairs):
                    if i == a:
                        t[p] += v[i][k]
                    elif j == a:
                        t[p] -= v[i][k]
                if any(t[p] + ahead[k + 1][i] < -c for p, (i, _) in enumerate(pairs)):
                    continue
                key = tuple(t)
                cand = val + instance.u[a][k]
                if key not in nxt or cand > nxt[key]:
                    nxt[key] = cand
                    back[key] = (state, a)
        if len(nxt) > max_states:
            raise StateSpaceExceeded(f"{len(nxt)} states after item {k}")
        parents.append(back)
        layer = nxt

    finals = [s for s in layer if all(x >= -c for x in s)]
    if not finals:
        raise NoFeasibleAllocation(f"no EF-{c} allocation exists")
    best = max(finals, key=lambda s: layer[s])
    owners = [0] * m
    state = best
    for k in range(m - 1, -1, -1):
        state, owners[k] = parents[k][state]
    alloc = Allocation.from_assignment(owners, n)
    res = _result(instance, alloc, EF, c, "dp-binary", EXACT)
    assert res.objective == layer[best]
    return res


# --- gadget instances --------------------------------------------------------------


def _weights(params) -> tuple[Fraction, ...]:
    try:
        e = tuple(Fraction(x) for x in params["e"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BadParameters("parameter 'e' must be a list of rationals") from exc
    if not e or any(x < 0 for x in e):
        raise BadParameters("'e' must be a non-empty list of non-negative rationals")
    return e


def gadget_profiles(kind: str, params: dict | None = None) -> list[tuple[tuple[Fraction, ...], ...]]:
    """The valuation profiles of a gadget; three for the triple example, two otherwise."""
    inst = build_gadget(kind, params)
    if kind == "thm66_triple":
        w = ((Fraction(0), Fraction(1), Fraction(1)),) * 2
        return [inst.u, inst.v, w]
    return [inst.v, inst.u]


def build_gadget(kind: str, params: dict | None = None) -> Instance:
    """Hardness gadgets and the triple-profile example.

    * ``thm51_partition_ef``: ``{"e": [...]}`` summing to 1; two agents,
      EF-1 efficiency 2 exactly when ``e`` splits evenly.
    * ``thm57_partition_prop``: ``{"e": [...], "n": even}``; PROP-1
      efficiency n exactly when ``e`` splits evenly.
    * ``thm55_independent_set``: ``{"vertices": k, "edges": [[a, b], ...]}``;
      agent 0 is the zero-valuation agent the allocator favours.
    * ``thm66_triple``: two agents, three items; ``u`` and ``v`` are the
      first two of the three profiles from :func:`gadget_profiles`.
    """
    params = dict(params or {})
    zero, one = Fraction(0), Fraction(1)
    if kind == "thm51_partition_ef":
        e = _weights(params)
        if sum(e) != 1:
            raise BadParameters("'e' must sum to 1")
        z = (zero,) * len(e)
        v = (e + (one, zero), e + (zero, one))
        u = (z + (zero, one), z + (one, zero))
        return Instance(v, u, tags={"u": "binary"})
    if kind == "thm57_partition_prop":
        e = _weights(params)
        n = params.get("n", 4)
        if not isinstance(n, int) or n < 2 or n % 2:
            raise BadParameters("'n' must be an even integer >= 2")
        s, k = n // 2, len(e)
        big = Fraction(n, 2) - 1
        big *= sum(e)
        v, u = [], []
        for a in range(n):
            row = []
            for grp in range(s):
                row.extend(e if a // 2 == grp else (zero,) * k)
            row.extend(zero if b == a else big for b in range(n))
            row.extend((big, big))
            v.append(tuple(row))
            u.append((zero,) * (s * k) + tuple(one if b == a else zero for b in range(n)) + (zero, zero))
        return Instance(tuple(v), tuple(u), tags={"u": "binary"})
    if kind == "thm55_independent_set":
        k = params.get("vertices")
        edges = params.get("edges", [])
        if not isinstance(k, int) or k < 0:
            raise BadParameters("'vertices' must be a non-negative integer")
        norm = []
        for ed in edges:
            if len(ed) != 2 or not all(isinstance(x, int) and 0 <= x < k for x in ed) or ed[0] == ed[1]:
                raise BadParameters(f"bad edge {ed!r}")
            norm.append(tuple(ed))
        v = [(zero,) * k]
        u = [(one,) * k]
        for a, b in norm:
            v.append(tuple(one if g in (a, b) else zero for g in range(k)))
            u.append((zero,) * k)
        return Instance(tuple(v), tuple(u), tags={"v": "binary", "u": "binary"})
    if kind == "thm66_triple":
        u = ((one, one, zero),) * 2
        v = ((one, zero, one),) * 2
        return Instance(v, u, tags={"v": "binary", "u": ["binary", "identical_allocator"]})
    raise BadParameters(f"unknown gadget kind {kind!r}; expected one of {', '.join(GADGETS)}")


__all__ = [
    "BadParameters",
    "EXACT",
    "GADGETS",
    "M_APPROX",
    "MaxEffResult",
    "NoFeasibleAllocation",
    "NotBinary",
    "StateSpaceExceeded",
    "TWO_APPROX",
    "build_gadget",
    "gadget_profiles",
    "maximize_binary_ef_dp",
    "maximize_binary_prop_lp",
    "maximize_round_robin",
    "maximize_two_agent_ef",
    "prop_assignment_lp",
    "two_agent_pairing",
]
