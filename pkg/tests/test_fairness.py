import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from dualfair.fairness import (
    DimensionMismatch,
    allocator_efficiency,
    check,
    check_doubly,
    check_ef_c,
    check_multi_fair,
    check_prop_c,
    top_items,
    top_values,
)
from dualfair.maxeff import build_gadget, gadget_profiles
from dualfair.model import Allocation, Instance

INTRO = Instance(((2, 1, 0), (0, 1, 2)), ((0, 2, 1), (1, 2, 0)))
BY_AGENTS = Allocation(((0, 1), (2,)), 3)  # what agents alone would pick
GOOD = Allocation(((0, 2), (1,)), 3)


def test_top_values():
    row = (F(2), F(1), F(0))
    assert top_values(row, 2, []) == 0
    assert top_values(row, 5, [0, 1]) == 3
    assert top_values(row, 2, [0, 1, 2]) == 3
    assert top_values(row, 0, [0, 1, 2]) == 0
    assert top_items((F(1), F(3), F(3)), 1, [0, 1, 2]) == (1,)


def test_intro_instance_allocator_side():
    assert check_ef_c(INTRO, BY_AGENTS, 1, "v").verdict
    rep = check_ef_c(INTRO, BY_AGENTS, 1, "u")
    assert not rep.verdict
    (bad,) = rep.violations()
    assert (bad.agent, bad.other) == (1, 0)
    assert bad.deficit == 1
    assert allocator_efficiency(INTRO, BY_AGENTS) == 2


def test_intro_doubly_witness():
    assert check_doubly(INTRO, GOOD, "EF", 1).verdict
    assert check_doubly(INTRO, GOOD, "PROP", 1).verdict
    rep = check_doubly(INTRO, GOOD, "EF", 1)
    assert rep.label() == "doubly EF-1"
    assert {w.profile for w in rep.witnesses} == {0, 1}


def test_empty_and_single_agent():
    empty = Instance(((), ()), ((), ()))
    alloc = Allocation(((), ()), 0)
    for c in range(3):
        assert check_ef_c(empty, alloc, c).verdict
    assert allocator_efficiency(empty, alloc) == 0
    solo = Instance(((3, 4),), ((1, 1),))
    assert check_prop_c(solo, Allocation(((0, 1),), 2), 0).verdict


def test_triple_profile_table_has_no_ef1_allocation():
    profiles = gadget_profiles("thm66_triple")
    for owners in itertools.product(range(2), repeat=3):
        alloc = Allocation.from_assignment(owners, 2)
        assert not check_multi_fair(profiles, alloc, "EF", 1).verdict


def test_gadget_intended_allocation_efficiency():
    g = build_gadget("thm51_partition_ef", {"e": ["1/2", "1/2"]})
    alloc = Allocation(((0, 3), (1, 2)), 4)
    assert check_ef_c(g, alloc, 1).verdict
    assert allocator_efficiency(g, alloc) == 2


def test_multi_fair_shape_checks():
    with pytest.raises(DimensionMismatch):
        check_multi_fair([INTRO.v, ((1, 2), (3, 4))], GOOD, "EF", 1)
    with pytest.raises(DimensionMismatch):
        check_multi_fair([], GOOD, "EF", 1)
    with pytest.raises(DimensionMismatch):
        check_ef_c(INTRO, Allocation(((0, 1, 2),), 3), 1)


def test_single_profile_matches_plain_checker():
    for matrix in ("v", "u"):
        for crit in ("EF", "PROP"):
            a = check(INTRO, BY_AGENTS, crit, 1, matrix).verdict
            b = check_multi_fair([INTRO.matrix(matrix)], BY_AGENTS, crit, 1).verdict
            assert a == b


def test_report_json():
    data = check_ef_c(INTRO, BY_AGENTS, 1, "u").to_json()
    assert data["verdict"] is False
    assert data["criterion"] == "EF"
    assert any(w["deficit"] == "1" for w in data["witnesses"])


# --- properties -----------------------------------------------------------------------


@st.composite
def instance_and_allocation(draw, max_n=3, max_m=5):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(0, max_m))
    val = st.integers(0, 6)
    v = tuple(tuple(draw(val) for _ in range(m)) for _ in range(n))
    u = tuple(tuple(draw(val) for _ in range(m)) for _ in range(n))
    owners = [draw(st.integers(0, n - 1)) for _ in range(m)]
    return Instance(v, u), Allocation.from_assignment(owners, n)


def _ef_by_definition(rows, bundles, c):
    for i, row in enumerate(rows):
        own = sum((row[g] for g in bundles[i]), F(0))
        for j, other in enumerate(bundles):
            if i == j:
                continue
            if not any(
                own >= sum((row[g] for g in other if g not in b), F(0))
                for k in range(min(c, len(other)) + 1)
                for b in itertools.combinations(other, k)
            ):
                return False
    return True


def _prop_by_definition(rows, bundles, c):
    n = len(rows)
    m = sum(len(b) for b in bundles)
    for i, row in enumerate(rows):
        own = sum((row[g] for g in bundles[i]), F(0))
        outside = [g for g in range(m) if g not in bundles[i]]
        share = sum(row, F(0)) / n
        if not any(
            own + sum((row[g] for g in b), F(0)) >= share
            for k in range(min(c, len(outside)) + 1)
            for b in itertools.combinations(outside, k)
        ):
            return False
    return True


@settings(max_examples=300, deadline=None)
@given(instance_and_allocation(), st.integers(0, 3))
def test_checkers_match_definitions(pair, c):
    inst, alloc = pair
    for matrix in ("v", "u"):
        rows = inst.matrix(matrix)
        assert check_ef_c(inst, alloc, c, matrix).verdict == _ef_by_definition(rows, alloc.bundles, c)
        assert check_prop_c(inst, alloc, c, matrix).verdict == _prop_by_definition(rows, alloc.bundles, c)


@settings(max_examples=300, deadline=None)
@given(instance_and_allocation(), st.integers(0, 3))
def test_monotone_in_c_and_ef_implies_prop(pair, c):
    inst, alloc = pair
    for crit in ("EF", "PROP"):
        if check(inst, alloc, crit, c).verdict:
            assert check(inst, alloc, crit, c + 1).verdict
    if check_ef_c(inst, alloc, c).verdict:
        assert check_prop_c(inst, alloc, c).verdict


@settings(max_examples=200, deadline=None)
@given(instance_and_allocation(), st.integers(0, 2), st.fractions(min_value=F(1, 7), max_value=7))
def test_scaling_a_row_keeps_verdicts(pair, c, factor):
    inst, alloc = pair
    scaled = Instance(tuple(tuple(x * factor for x in r) if i == 0 else r for i, r in enumerate(inst.v)), inst.u)
    for crit in ("EF", "PROP"):
        before = [w.satisfied for w in check(inst, alloc, crit, c).witnesses if w.agent == 0]
        after = [w.satisfied for w in check(scaled, alloc, crit, c).witnesses if w.agent == 0]
        assert before == after


@settings(max_examples=200, deadline=None)
@given(instance_and_allocation(), st.integers(0, 2))
def test_satisfaction_witnesses_reverify(pair, c):
    inst, alloc = pair
    for w in check_ef_c(inst, alloc, c).witnesses:
        row = inst.v[w.agent]
        assert len(w.removal) <= c and set(w.removal) <= set(alloc.bundles[w.other])
        own = sum((row[g] for g in alloc.bundles[w.agent]), F(0))
        rest = sum((row[g] for g in alloc.bundles[w.other] if g not in w.removal), F(0))
        assert w.satisfied == (own >= rest)
