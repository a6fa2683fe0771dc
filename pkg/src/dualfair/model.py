"""Instances, allocations and valuation classes, plus the JSON file format.

Instance JSON::

    {"agents": 2, "items": 3,
     "agent_valuations": [[2, 1, 0], [0, 1, 2]],
     "allocator_valuations": [[0, 2, 1], [1, 2, 0]],
     "tags": {"v": "general", "u": ["binary", "identical_allocator"]}}

``agents``/``items`` may be counts or lists of display names.  Every value is
an integer or a ``"p/q"`` string.  Items are addressed by 0-based index.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .numeric import rational

TAGS = ("general", "binary", "personalized_bivalued", "identical_allocator")
MATRICES = ("v", "u")


class FormatError(ValueError):
    """Instance or allocation text is not well-formed JSON of the right shape."""


class ValidationError(ValueError):
    """Well-formed input whose contents violate an instance invariant."""


class NotBivalued(ValueError):
    pass


Matrix = tuple[tuple[Fraction, ...], ...]


def _as_matrix(rows) -> Matrix:
    return tuple(tuple(rational(x) for x in row) for row in rows)


def row_is_binary(row) -> bool:
    return all(x == 0 or x == 1 for x in row)


def row_levels(row) -> tuple[Fraction, Fraction] | None:
    """(low, high) levels of a row with at most two distinct values, else None.

    A constant row has ``low == high``: every item counts as high.
    """
    distinct = sorted(set(row))
    if len(distinct) > 2:
        return None
    if not distinct:
        return (Fraction(0), Fraction(0))
    return (distinct[0], distinct[-1])


def _satisfies(tag: str, which: str, rows: Matrix) -> bool:
    if tag == "general":
        return True
    if tag == "binary":
        return all(row_is_binary(r) for r in rows)
    if tag == "personalized_bivalued":
        return all(row_levels(r) is not None for r in rows)
    if tag == "identical_allocator":
        return which == "u" and all(r == rows[0] for r in rows)
    raise ValidationError(f"unknown class tag {tag!r}")


@dataclass(frozen=True)
class Instance:
    """n agents, m items; ``v`` is the agents' matrix, ``u`` the allocator's."""

    v: Matrix
    u: Matrix
    tags: dict = field(default_factory=dict, compare=False)
    agent_names: tuple[str, ...] | None = field(default=None, compare=False)
    item_names: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        v, u = _as_matrix(self.v), _as_matrix(self.u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "u", u)
        if not v:
            raise ValidationError("an instance needs at least one agent")
        if len(u) != len(v):
            raise ValidationError(f"v has {len(v)} rows but u has {len(u)}")
        m = len(v[0])
        for name, mat in (("v", v), ("u", u)):
            for i, row in enumerate(mat):
                if len(row) != m:
                    raise ValidationError(f"{name}[{i}] has {len(row)} entries, expected {m}")
                for x in row:
                    if x < 0:
                        raise ValidationError(f"negative value {x} in {name}[{i}]")
        tags = {}
        for which, declared in dict(self.tags).items():
            if which not in MATRICES:
                raise ValidationError(f"tags refer to unknown matrix {which!r}")
            declared = (declared,) if isinstance(declared, str) else tuple(declared)
            for tag in declared:
                if tag not in TAGS:
                    raise ValidationError(f"unknown class tag {tag!r}")
                if not _satisfies(tag, which, v if which == "v" else u):
                    raise ValidationError(f"matrix {which} is tagged {tag} but violates it")
            tags[which] = declared
        object.__setattr__(self, "tags", tags)
        if self.agent_names is not None and len(self.agent_names) != len(v):
            raise ValidationError("agent name count does not match the matrices")
        if self.item_names is not None and len(self.item_names) != m:
            raise ValidationError("item name count does not match the matrices")

    @property
    def n(self) -> int:
        return len(self.v)

    @property
    def m(self) -> int:
        return len(self.v[0])

    def matrix(self, which: str) -> Matrix:
        if which == "v":
            return self.v
        if which == "u":
            return self.u
        raise ValueError(f"matrix must be 'v' or 'u', not {which!r}")

    def restrict(self, agents: Sequence[int], items: Sequence[int]) -> "Instance":
        """Sub-instance on the given agents and items (re-indexed from 0)."""
        return Instance(
            tuple(tuple(self.v[i][g] for g in items) for i in agents),
            tuple(tuple(self.u[i][g] for g in items) for i in agents),
        )

    def to_json(self) -> dict:
        def enc(x: Fraction):
            return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

        out = {
            "agents": list(self.agent_names) if self.agent_names else self.n,
            "items": list(self.item_names) if self.item_names else self.m,
            "agent_valuations": [[enc(x) for x in r] for r in self.v],
            "allocator_valuations": [[enc(x) for x in r] for r in self.u],
        }
        if self.tags:
            out["tags"] = {k: list(t) for k, t in self.tags.items()}
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def parse_instance(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return instance_from_json(data)


def instance_from_json(data) -> Instance:
    if not isinstance(data, dict):
        raise FormatError("instance must be a JSON object")
    for key in ("agents", "items", "agent_valuations", "allocator_valuations"):
        if key not in data:
            raise FormatError(f"missing field {key!r}")
    unknown = set(data) - {"agents", "items", "agent_valuations", "allocator_valuations", "tags"}
    if unknown:
        raise FormatError(f"unknown fields {sorted(unknown)}")

    def count_and_names(x, what):
        if isinstance(x, bool):
            raise FormatError(f"{what} must be a count or a list of names")
        if isinstance(x, int):
            return x, None
        if isinstance(x, list) and all(isinstance(s, str) for s in x):
            return len(x), tuple(x)
        raise FormatError(f"{what} must be a count or a list of names")

    n, agent_names = count_and_names(data["agents"], "agents")
    m, item_names = count_and_names(data["items"], "items")
    if n < 1 or m < 0:
        raise ValidationError("need at least one agent and a non-negative item count")

    def matrix(key):
        rows = data[key]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise FormatError(f"{key} must be a list of lists")
        if len(rows) != n:
            raise ValidationError(f"{key} has {len(rows)} rows, expected {n}")
        out = []
        for r in rows:
            if len(r) != m:
                raise ValidationError(f"{key} row has {len(r)} entries, expected {m}")
            try:
                out.append(tuple(rational(x) for x in r))
            except (TypeError, ValueError, ZeroDivisionError) as exc:
                raise FormatError(f"bad number in {key}: {exc}") from exc
        return tuple(out)

    v = matrix("agent_valuations")
    u = matrix("allocator_valuations")
    tags = data.get("tags", {})
    if not isinstance(tags, dict):
        raise FormatError("tags must be an object keyed by 'v'/'u'")
    if m == 0:
        # the matrices carry no width; keep n empty rows
        v = tuple(() for _ in range(n))
        u = tuple(() for _ in range(n))
    return Instance(v, u, tags, agent_names, item_names)


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def classify(instance: Instance) -> frozenset[str]:
    """Every special class the matrices satisfy, ignoring declared tags.

    Members look like ``"binary(v)"``, ``"personalized_bivalued(u)"`` and
    ``"identical_allocator"``.  ``general`` holds for everything and is omitted.
    """
    out = set()
    for which in MATRICES:
        rows = instance.matrix(which)
        for tag in ("binary", "personalized_bivalued"):
            if _satisfies(tag, which, rows):
                out.add(f"{tag}({which})")
    if _satisfies("identical_allocator", "u", instance.u):
        out.add("identical_allocator")
    return frozenset(out)


@dataclass(frozen=True)
class Allocation:
    """A complete ordered partition of items ``0..m-1`` into n bundles."""

    bundles: tuple[tuple[int, ...], ...]
    m: int

    def __post_init__(self):
        bundles = tuple(tuple(sorted(int(g) for g in b)) for b in self.bundles)
        seen = set()
        for b in bundles:
            for g in b:
                if not 0 <= g < self.m:
                    raise ValidationError(f"item {g} out of range for m={self.m}")
                if g in seen:
                    raise ValidationError(f"item {g} appears in two bundles")
                seen.add(g)
        if len(seen) != self.m:
            missing = sorted(set(range(self.m)) - seen)
            raise ValidationError(f"allocation is incomplete, missing items {missing}")
        object.__setattr__(self, "bundles", bundles)

    @property
    def n(self) -> int:
        return len(self.bundles)

    @classmethod
    def from_assignment(cls, owners: Sequence[int], n: int) -> "Allocation":
        bundles = [[] for _ in range(n)]
        for g, i in enumerate(owners):
            bundles[i].append(g)
        return cls(tuple(map(tuple, bundles)), len(owners))

    def assignment(self) -> tuple[int, ...]:
        owner = [0] * self.m
        for i, b in enumerate(self.bundles):
            for g in b:
                owner[g] = i
        return tuple(owner)

    def to_json(self) -> dict:
        return {"bundles": [list(b) for b in self.bundles]}


def parse_allocation(text: str, m: int) -> Allocation:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid allocation JSON: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("bundles")
    if not isinstance(data, list) or not all(isinstance(b, list) for b in data):
        raise FormatError('allocation must be [[...], ...] or {"bundles": [[...], ...]}')
    return Allocation(tuple(tuple(b) for b in data), m)


@dataclass(frozen=True)
class BivaluedPartition:
    """Items split by (agent value high/low) x (allocator value high/low)."""

    agent: int
    s1: frozenset[int]  # v high, u high
    s2: frozenset[int]  # v high, u low
    s3: frozenset[int]  # v low, u high
    s4: frozenset[int]  # v low, u low
    p_v: Fraction
    q_v: Fraction
    p_u: Fraction
    q_u: Fraction

    def classes(self) -> tuple[frozenset[int], ...]:
        return (self.s1, self.s2, self.s3, self.s4)


def bivalued_partition(instance: Instance, agent: int) -> BivaluedPartition:
    lv = row_levels(instance.v[agent])
    lu = row_levels(instance.u[agent])
    if lv is None or lu is None:
        raise NotBivalued(f"agent {agent} has more than two distinct values in v or u")
    p_v, q_v = lv
    p_u, q_u = lu
    sets = ([], [], [], [])
    for g in range(instance.m):
        hi_v = instance.v[agent][g] == q_v
        hi_u = instance.u[agent][g] == q_u
        sets[(0 if hi_v else 2) + (0 if hi_u else 1)].append(g)
    return BivaluedPartition(agent, *map(frozenset, sets), p_v, q_v, p_u, q_u)


# --- seeded random instances --------------------------------------------------

RANDOM_KINDS = ("general", "binary", "binary_agents", "bivalued", "identical_allocator")


def random_instance(
    n: int,
    m: int,
    seed: int,
    max_value: int = 20,
    kind: str = "general",
) -> Instance:
    """Integer-valued instance from a seeded generator.

    ``kind``: ``general`` (values in [0, max_value]), ``binary``,
    ``binary_agents`` (binary v, general u), ``bivalued`` (two random
    levels per row and matrix) or
    ``identical_allocator`` (general v, one shared u row).
    """
    rng = random.Random(seed)

    def general_row():
        return [rng.randint(0, max_value) for _ in range(m)]

    def bivalued_row():
        lo = rng.randint(0, max_value - 1)
        hi = rng.randint(lo + 1, max_value)
        return [hi if rng.random() < 0.5 else lo for _ in range(m)]

    if kind == "general":
        v = [general_row() for _ in range(n)]
        u = [general_row() for _ in range(n)]
    elif kind == "binary":
        v = [[rng.randint(0, 1) for _ in range(m)] for _ in range(n)]
        u = [[rng.randint(0, 1) for _ in range(m)] for _ in range(n)]
    elif kind == "binary_agents":
        v = [[rng.randint(0, 1) for _ in range(m)] for _ in range(n)]
        u = [general_row() for _ in range(n)]
    elif kind == "bivalued":
        v = [bivalued_row() for _ in range(n)]
        u = [bivalued_row() for _ in range(n)]
    elif kind == "identical_allocator":
        v = [general_row() for _ in range(n)]
        shared = general_row()
        u = [list(shared) for _ in range(n)]
    else:
        raise ValueError(f"unknown random instance kind {kind!r}")
    if m == 0:
        v = [[] for _ in range(n)]
        u = [[] for _ in range(n)]
    return Instance(tuple(map(tuple, v)), tuple(map(tuple, u)))


def bundle_value(row: Sequence[Fraction], bundle: Iterable[int]) -> Fraction:
    return sum((row[g] for g in bundle), Fraction(0))
