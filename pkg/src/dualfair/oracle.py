"""Brute-force ground truth over all n^m allocations.

Allocations are numbered by a mixed-radix counter whose digit j is the
owner of item j, item 0 most significant, so index order equals
lexicographic order of assignment vectors.  Blocks of the range are
evaluated with numpy on integer-scaled valuations (each row multiplied
by the lcm of its denominators, which preserves every comparison), and
merged in index order keeping only strictly better values.  The first
optimum in index order is therefore the lexicographically smallest one,
with or without worker processes.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .doubly import is_two_balanced
from .fairness import CRITERIA, EF, PROP, check_multi_fair
from .maxeff import NoFeasibleAllocation
from .model import Allocation, Instance, bundle_value, random_instance

DEFAULT_CAP = 10**7
CAP_ENV = "DUALFAIR_CAP"
PERSPECTIVES = ("agents", "allocator", "doubly")
_INT_LIMIT = 2**62


class CapExceeded(Exception):
    pass


def enumeration_cap(cap: int | None = None) -> int:
    if cap is not None:
        return cap
    env = os.environ.get(CAP_ENV)
    return int(env) if env else DEFAULT_CAP


def _check_cap(n: int, m: int, cap: int | None) -> int:
    total = n**m
    limit = enumeration_cap(cap)
    if total > limit:
        raise CapExceeded(f"{n}^{m} = {total} allocations exceed the cap of {limit}")
    return total


def _lcm_of_denominators(values) -> int:
    return math.lcm(1, *(Fraction(x).denominator for x in values))


def _scaled(rows) -> np.ndarray | None:
    """Integer copy of ``rows`` with each row scaled by its own lcm, or None
    if sums could overflow int64."""
    out = []
    for row in rows:
        k = _lcm_of_denominators(row)
        ints = [int(x * k) for x in row]
        if (sum(ints) + 1) * max(len(rows), 1) >= _INT_LIMIT:
            return None
        out.append(ints)
    return np.array(out, dtype=np.int64).reshape(len(rows), -1)


@dataclass(frozen=True)
class _Plan:
    n: int
    m: int
    criterion: str | None
    c: int
    profiles: tuple  # per profile: (W, order, W_sorted, totals)
    weights: np.ndarray | None  # allocator objective, globally scaled
    first_only: bool


def _make_plan(n, m, profiles, criterion, c, objective_rows, first_only) -> _Plan | None:
    packed = []
    for rows in profiles:
        w = _scaled(rows)
        if w is None:
            return None
        order = np.argsort(-w, axis=1, kind="stable")
        packed.append((w, order, np.take_along_axis(w, order, axis=1), w.sum(axis=1)))
    weights = None
    if objective_rows is not None:
        k = _lcm_of_denominators(x for row in objective_rows for x in row)
        ints = [[int(x * k) for x in row] for row in objective_rows]
        if m and sum(max(col) for col in zip(*ints)) >= _INT_LIMIT:
            return None
        weights = np.array(ints, dtype=np.int64).reshape(n, m)
    return _Plan(n, m, criterion, c, tuple(packed), weights, first_only)


def _owners(plan: _Plan, lo: int, hi: int) -> np.ndarray:
    idx = np.arange(lo, hi, dtype=np.int64)
    powers = np.array([plan.n ** (plan.m - 1 - j) for j in range(plan.m)], dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % plan.n


def _feasible(plan: _Plan, onehot: np.ndarray) -> np.ndarray:
    size = onehot.shape[0]
    ok = np.ones(size, dtype=bool)
    if plan.criterion is None:
        return ok
    as_int = onehot.astype(np.int64)
    for w, order, w_sorted, totals in plan.profiles:
        vals = as_int @ w.T  # vals[b, a, i] = w_i(bundle a)
        for i in range(plan.n):
            if plan.criterion == EF:
                held = onehot[:, :, order[i]]
                top = ((np.cumsum(held, axis=2) <= plan.c) & held).astype(np.int64) @ w_sorted[i]
                own = vals[:, i, i]
                ok &= np.all(own[:, None] >= vals[:, :, i] - top, axis=1)
            else:
                outside = ~onehot[:, i, order[i]]
                top = ((np.cumsum(outside, axis=1) <= plan.c) & outside).astype(np.int64) @ w_sorted[i]
                ok &= plan.n * (vals[:, i, i] + top) >= totals[i]
    return ok


def _scan(plan: _Plan, lo: int, hi: int):
    """Best (value, index) in [lo, hi), earliest index on ties, or None."""
    block = max(1, (1 << 20) // max(1, plan.n * max(plan.m, 1)))
    best = None
    agents = np.arange(plan.n)
    for start in range(lo, hi, block):
        stop = min(hi, start + block)
        owners = _owners(plan, start, stop)
        onehot = owners[:, None, :] == agents[None, :, None]
        ok = _feasible(plan, onehot)
        if not ok.any():
            continue
        if plan.first_only or plan.weights is None:
            k = int(np.argmax(ok))
            if best is None:
                best = (0, start + k)
            if plan.first_only:
                return best
            continue
        sw = (onehot * plan.weights[None, :, :]).sum(axis=(1, 2))
        sw = np.where(ok, sw, -1)
        k = int(np.argmax(sw))
        if best is None or sw[k] > best[0]:
            best = (int(sw[k]), start + k)
    return best


def _scan_python(n, m, profiles, criterion, c, objective_rows, first_only, lo, hi):
    # exact fallback for values too large for int64
    best = None
    for idx in range(lo, hi):
        owners, x = [], idx
        for _ in range(m):
            owners.append(x % n)
            x //= n
        alloc = Allocation.from_assignment(owners[::-1], n)
        if criterion is not None and not check_multi_fair(list(profiles), alloc, criterion, c).verdict:
            continue
        val = Fraction(0)
        if objective_rows is not None:
            val = sum((bundle_value(objective_rows[i], b) for i, b in enumerate(alloc.bundles)), Fraction(0))
        if best is None or val > best[0]:
            best = (val, idx)
        if first_only or objective_rows is None:
            return best
    return best


def _chunk_worker(args):
    plan, lo, hi = args
    return _scan(plan, lo, hi)


def _search(n, m, profiles, criterion, c, objective_rows, first_only, cap, jobs):
    """(value, index, scale) of the best feasible allocation, or None."""
    total = _check_cap(n, m, cap)
    if criterion is not None and criterion not in CRITERIA:
        raise ValueError(f"criterion must be EF or PROP, not {criterion!r}")
    if c < 0:
        raise ValueError("c must be non-negative")
    plan = _make_plan(n, m, profiles, criterion, c, objective_rows, first_only)
    if plan is None:
        found = _scan_python(n, m, profiles, criterion, c, objective_rows, first_only, 0, total)
        return None if found is None else (found[0], found[1])
    if jobs > 1 and total > 1:
        pieces = jobs * 4
        bounds = [total * k // pieces for k in range(pieces + 1)]
        tasks = [(plan, bounds[k], bounds[k + 1]) for k in range(pieces) if bounds[k] < bounds[k + 1]]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_chunk_worker, tasks))
        found = None
        for part in parts:
            if part is None:
                continue
            if found is None or (not first_only and part[0] > found[0]):
                found = part
            if first_only:
                break
    else:
        found = _scan(plan, 0, total)
    if found is None:
        return None
    value = Fraction(0)
    if objective_rows is not None:
        value = Fraction(found[0], _lcm_of_denominators(x for row in objective_rows for x in row))
    return value, found[1]


def _decode(index: int, n: int, m: int) -> Allocation:
    owners = []
    for _ in range(m):
        owners.append(index % n)
        index //= n
    return Allocation.from_assignment(owners[::-1], n)


def _profiles_for(instance: Instance, perspective: str):
    if perspective == "agents":
        return [instance.v]
    if perspective == "allocator":
        return [instance.u]
    if perspective == "doubly":
        return [instance.v, instance.u]
    raise ValueError(f"unknown perspective {perspective!r}")


@dataclass(frozen=True)
class OracleResult:
    optimum: Fraction
    witness: Allocation
    index: int  # position of the witness in enumeration order

    def to_json(self) -> dict:
        return {"optimum": str(self.optimum), "witness": self.witness.to_json(), "index": self.index}


def enumerate_best(
    instance: Instance,
    criterion: str | None = EF,
    c: int = 1,
    perspective: str = "agents",
    objective: str = "allocator_efficiency",
    cap: int | None = None,
    jobs: int = 1,
) -> OracleResult:
    """Constrained optimum by full enumeration.

    ``objective`` is ``"allocator_efficiency"`` or ``"none"``; with none the
    first feasible allocation is returned with optimum 0.  ``criterion=None``
    drops the constraint.  Raises :class:`NoFeasibleAllocation`.
    """
    if objective not in ("allocator_efficiency", "none"):
        raise ValueError(f"unknown objective {objective!r}")
    rows = instance.u if objective == "allocator_efficiency" else None
    profiles = _profiles_for(instance, perspective) if criterion is not None else []
    found = _search(instance.n, instance.m, profiles, criterion, c, rows, rows is None, cap, jobs)
    if found is None:
        raise NoFeasibleAllocation(f"no allocation satisfies {criterion}-{c} ({perspective})")
    return OracleResult(found[0], _decode(found[1], instance.n, instance.m), found[1])


def exists_multi_fair(profiles, criterion: str, c: int, cap: int | None = None, jobs: int = 1):
    """(True, witness) for the first allocation fair under every profile, else (False, None)."""
    if not profiles:
        raise ValueError("at least one profile is required")
    n = len(profiles[0])
    m = len(profiles[0][0]) if n else 0
    for rows in profiles:
        if len(rows) != n or any(len(r) != m for r in rows):
            raise ValueError("profiles must share one shape")
    norm = [tuple(tuple(Fraction(x) for x in r) for r in rows) for rows in profiles]
    found = _search(n, m, norm, criterion, c, None, True, cap, jobs)
    if found is None:
        return False, None
    return True, _decode(found[1], n, m)


def exists_balanced_split(instance: Instance, k1: int | None = None, k2: int | None = None):
    """Probe for a 2-balanced PROP-(k1, k2) split with the agents halved in
    index order, over all splits whose first side has ceil(m/2) items.

    Defaults to k1 = k2 = n/2.  Returns (found, (X1, X2) or None).
    """
    n, m = instance.n, instance.m
    if n < 2 or n % 2:
        raise ValueError("needs an even number of agents")
    k1 = n // 2 if k1 is None else k1
    k2 = n // 2 if k2 is None else k2
    group1, group2 = list(range(n // 2)), list(range(n // 2, n))
    for x1 in itertools.combinations(range(m), (m + 1) // 2):
        chosen = set(x1)
        x2 = tuple(g for g in range(m) if g not in chosen)
        if is_two_balanced(instance, group1, group2, x1, x2, k1, k2):
            return True, (x1, x2)
    return False, None


# --- counterexample search ---------------------------------------------------------


SPACES = ("binary", "bivalued", "small-integer")


@dataclass
class SearchReport:
    space: str
    criterion: str
    c: int
    n_range: tuple[int, int]
    m_range: tuple[int, int]
    seed: int
    max_value: int
    exhaustive: bool = True
    instances_examined: int = 0
    counterexamples: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "space": self.space,
            "criterion": self.criterion,
            "c": self.c,
            "perspective": "doubly",
            "n_range": list(self.n_range),
            "m_range": list(self.m_range),
            "seed": self.seed,
            "max_value": self.max_value,
            "exhaustive": self.exhaustive,
            "instances_examined": self.instances_examined,
            "counterexamples_found": len(self.counterexamples),
            "counterexamples": [inst.to_json() for inst in self.counterexamples],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _binary_instances(n: int, m: int):
    cells = n * m
    for bits in itertools.product((0, 1), repeat=2 * cells):
        v = tuple(tuple(bits[i * m:(i + 1) * m]) for i in range(n))
        u = tuple(tuple(bits[cells + i * m:cells + (i + 1) * m]) for i in range(n))
        yield Instance(v, u)


def search_counterexamples(
    space: str = "binary",
    n_range: tuple[int, int] = (2, 2),
    m_range: tuple[int, int] = (1, 3),
    criterion: str = PROP,
    c: int = 1,
    budget: int = 10_000,
    seed: int = 0,
    max_value: int = 5,
    cap: int | None = None,
    progress: Callable[[int], None] | None = None,
) -> SearchReport:
    """Look for instances with no doubly fair allocation.

    The binary space is swept exhaustively when every (n, m) cell fits in
    ``budget``; otherwise instances are drawn from a seeded generator until
    the budget is spent.  A report never claims universal existence.
    """
    if space not in SPACES:
        raise ValueError(f"space must be one of {SPACES}")
    report = SearchReport(space, criterion, c, tuple(n_range), tuple(m_range), seed, max_value)
    sizes = [(n, m) for n in range(n_range[0], n_range[1] + 1) for m in range(m_range[0], m_range[1] + 1)]
    sweep = space == "binary" and sum(4 ** (n * m) for n, m in sizes) <= budget

    def examine(inst):
        ok, _ = exists_multi_fair([inst.v, inst.u], criterion, c, cap)
        report.instances_examined += 1
        if not ok:
            again, _ = _reverify(inst, criterion, c)
            if again:
                raise AssertionError("counterexample failed re-verification")
            report.counterexamples.append(inst)
        if progress and report.instances_examined % 1000 == 0:
            progress(report.instances_examined)

    if sweep:
        for n, m in sizes:
            for inst in _binary_instances(n, m):
                examine(inst)
    else:
        report.exhaustive = False
        kind = {"binary": "binary", "bivalued": "bivalued", "small-integer": "general"}[space]
        rng = random.Random(seed)
        for _ in range(budget if sizes else 0):
            n, m = sizes[rng.randrange(len(sizes))]
            examine(random_instance(n, m, rng.getrandbits(64), max_value=max_value, kind=kind))
    if progress:
        progress(report.instances_examined)
    return report


def _reverify(instance: Instance, criterion: str, c: int):
    # independent path: exact Fractions, no numpy
    n, m = instance.n, instance.m
    found = _scan_python(n, m, [instance.v, instance.u], criterion, c, None, True, 0, n**m)
    return (found is not None), found


__all__ = [
    "CAP_ENV",
    "CapExceeded",
    "DEFAULT_CAP",
    "OracleResult",
    "SPACES",
    "SearchReport",
    "enumerate_best",
    "enumeration_cap",
    "exists_balanced_split",
    "exists_multi_fair",
    "search_counterexamples",
]
