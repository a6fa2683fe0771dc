"""Exact EF-c / PROP-c checkers and the allocator's efficiency.

All checks assume additive valuations.  For a valuation row ``w`` the
deciding quantity is ``top_values(w, c, S)``: the sum of the ``c`` largest
values in ``S``.  Removing those items is the best any removal set of size
at most ``c`` can do, so a single comparison decides each pair/agent.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .model import Allocation, Instance, bundle_value

EF, PROP = "EF", "PROP"
CRITERIA = (EF, PROP)


class DimensionMismatch(ValueError):
    pass


def top_items(row: Sequence[Fraction], t: int, items) -> tuple[int, ...]:
    """Up to ``t`` items of largest value; ties go to the lowest index."""
    if t <= 0:
        return ()
    ranked = sorted(items, key=lambda g: (-row[g], g))
    return tuple(sorted(ranked[:t]))


def top_values(row: Sequence[Fraction], t: int, items) -> Fraction:
    """Sum of the largest ``min(t, |items|)`` values of ``row`` over ``items``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return Fraction(0)
    vals = sorted((row[g] for g in items), reverse=True)
    return sum(vals[:t], Fraction(0))


@dataclass(frozen=True)
class Witness:
    """Verdict for one (agent, other) pair or one agent.

    ``other`` is None for proportionality.  ``removal`` is the removal set B
    used (the top-c items).  ``deficit`` is how far the inequality misses,
    zero when satisfied.
    """

    profile: int
    agent: int
    other: int | None
    satisfied: bool
    removal: tuple[int, ...]
    deficit: Fraction

    def to_json(self) -> dict:
        return {
            "profile": self.profile,
            "agent": self.agent,
            "other": self.other,
            "satisfied": self.satisfied,
            "removal": list(self.removal),
            "deficit": str(self.deficit),
        }


@dataclass(frozen=True)
class FairnessReport:
    criterion: str
    c: int
    perspective: str  # "agents", "allocator", "doubly" or "multi"
    verdict: bool
    witnesses: tuple[Witness, ...]

    def violations(self) -> list[Witness]:
        return [w for w in self.witnesses if not w.satisfied]

    def label(self) -> str:
        prefix = {"doubly": "doubly ", "multi": "multi-profile "}.get(self.perspective, "")
        return f"{prefix}{self.criterion}-{self.c}"

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "c": self.c,
            "perspective": self.perspective,
            "label": self.label(),
            "verdict": self.verdict,
            "witnesses": [w.to_json() for w in self.witnesses],
        }


def _ef_witnesses(rows, bundles, c, profile=0):
    out = []
    own = [bundle_value(rows[i], bundles[i]) for i in range(len(rows))]
    for i, row in enumerate(rows):
        for j, other in enumerate(bundles):
            if i == j:
                continue
            removal = top_items(row, c, other)
            rest = bundle_value(row, other) - bundle_value(row, removal)
            deficit = rest - own[i]
            ok = deficit <= 0
            out.append(Witness(profile, i, j, ok, removal, max(deficit, Fraction(0))))
    return out


def _prop_witnesses(rows, bundles, c, profile=0):
    n = len(rows)
    m = sum(len(b) for b in bundles)
    out = []
    for i, row in enumerate(rows):
        mine = set(bundles[i])
        outside = [g for g in range(m) if g not in mine]
        removal = top_items(row, c, outside)
        share = bundle_value(row, range(m)) / n
        deficit = share - bundle_value(row, mine) - bundle_value(row, removal)
        ok = deficit <= 0
        out.append(Witness(profile, i, None, ok, removal, max(deficit, Fraction(0))))
    return out


def _check_rows(rows, allocation: Allocation, criterion: str, c: int, profile=0):
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be EF or PROP, not {criterion!r}")
    if c < 0:
        raise ValueError("c must be non-negative")
    if len(rows) != allocation.n:
        raise DimensionMismatch(f"{len(rows)} valuation rows for {allocation.n} bundles")
    if any(len(r) != allocation.m for r in rows):
        raise DimensionMismatch("valuation width differs from the allocation's item count")
    fn = _ef_witnesses if criterion == EF else _prop_witnesses
    return fn(rows, allocation.bundles, c, profile)


def check_ef_c(instance: Instance, allocation: Allocation, c: int, matrix: str = "v") -> FairnessReport:
    """EF-c for the chosen matrix: ``"v"`` (agents) or ``"u"`` (allocator)."""
    ws = _check_rows(instance.matrix(matrix), allocation, EF, c)
    persp = "agents" if matrix == "v" else "allocator"
    return FairnessReport(EF, c, persp, all(w.satisfied for w in ws), tuple(ws))


def check_prop_c(instance: Instance, allocation: Allocation, c: int, matrix: str = "v") -> FairnessReport:
    ws = _check_rows(instance.matrix(matrix), allocation, PROP, c)
    persp = "agents" if matrix == "v" else "allocator"
    return FairnessReport(PROP, c, persp, all(w.satisfied for w in ws), tuple(ws))


def check(instance: Instance, allocation: Allocation, criterion: str, c: int, matrix: str = "v") -> FairnessReport:
    if criterion == EF:
        return check_ef_c(instance, allocation, c, matrix)
    return check_prop_c(instance, allocation, c, matrix)


def check_multi_fair(profiles, allocation: Allocation, criterion: str, c: int, perspective: str = "multi") -> FairnessReport:
    """The criterion for every valuation profile at once.

    ``profiles`` is a list of n x m matrices.  With ``[v, u]`` this is the
    doubly-fair check.
    """
    if not profiles:
        raise DimensionMismatch("at least one profile is required")
    shape = (len(profiles[0]), len(profiles[0][0]) if profiles[0] else 0)
    ws = []
    for k, rows in enumerate(profiles):
        if (len(rows), len(rows[0]) if rows else 0) != shape:
            raise DimensionMismatch(f"profile {k} has a different shape than profile 0")
        ws.extend(_check_rows(rows, allocation, criterion, c, profile=k))
    return FairnessReport(criterion, c, perspective, all(w.satisfied for w in ws), tuple(ws))


def check_doubly(instance: Instance, allocation: Allocation, criterion: str, c: int) -> FairnessReport:
    return check_multi_fair([instance.v, instance.u], allocation, criterion, c, perspective="doubly")


def check_perspective(instance: Instance, allocation: Allocation, criterion: str, c: int, perspective: str) -> FairnessReport:
    if perspective == "agents":
        return check(instance, allocation, criterion, c, "v")
    if perspective == "allocator":
        return check(instance, allocation, criterion, c, "u")
    if perspective == "doubly":
        return check_doubly(instance, allocation, criterion, c)
    raise ValueError(f"unknown perspective {perspective!r}")


def allocator_efficiency(instance: Instance, allocation: Allocation) -> Fraction:
    """Sum over agents of the allocator's value for that agent's bundle."""
    return sum(
        (bundle_value(instance.u[i], b) for i, b in enumerate(allocation.bundles)),
        Fraction(0),
    )


def is_ef_c_rows(rows, bundles, c: int) -> bool:
    """Fast boolean EF-c test on raw rows and (possibly partial) bundles."""
    vals = [[bundle_value(row, b) for b in bundles] for row in rows]
    for i, row in enumerate(rows):
        mine = vals[i][i]
        for j, other in enumerate(bundles):
            if i != j and vals[i][j] - top_values(row, c, other) > mine:
                return False
    return True
