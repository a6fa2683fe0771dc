"""Acceptance suite at the stated sizes.

Run directly for one PASS/FAIL line per criterion:

    python tests/test_acceptance.py
"""

import random
import sys
import time

from dualfair.doubly import (
    balanced_lp,
    label_sequences,
    prop_log_guarantee,
    solve_bivalued_prop2,
    solve_doubly_prop_log,
    solve_identical_allocator_ef1,
    solve_two_agent_doubly_ef1,
)
from dualfair.fairness import check_doubly, check_ef_c, check_multi_fair
from dualfair.graphlab import (
    chromatic_number,
    gamma_graph,
    in_cap_kneser_parameters,
    kneser_graph,
    kneser_lower_bound,
    non_ef1_independent_set,
)
from dualfair.maxeff import (
    NoFeasibleAllocation,
    build_gadget,
    gadget_profiles,
    maximize_binary_ef_dp,
    maximize_binary_prop_lp,
    maximize_round_robin,
    maximize_two_agent_ef,
    prop_assignment_lp,
)
from dualfair.model import Allocation, Instance, random_instance
from dualfair.numeric import Infeasible, solve_vertex_optimal
from dualfair.oracle import enumerate_best, exists_multi_fair, search_counterexamples

INTRO = Instance(((2, 1, 0), (0, 1, 2)), ((0, 2, 1), (1, 2, 0)))


def _sizes(rng, n_lo, n_hi, m_hi):
    return rng.randint(n_lo, n_hi), rng.randint(0, m_hi)


# --- 1 -------------------------------------------------------------------------------


def doubly_fair_closure(runs=1000):
    rng = random.Random(1)
    solvers = [
        ("identical-ef1", solve_identical_allocator_ef1, "identical_allocator", (1, 8), "EF", lambda n: 1),
        ("two-agent-ef1", solve_two_agent_doubly_ef1, "general", (2, 2), "EF", lambda n: 1),
        ("prop-log", solve_doubly_prop_log, "general", (1, 8), "PROP", prop_log_guarantee),
        ("bivalued-prop2", solve_bivalued_prop2, "bivalued", (1, 8), "PROP", lambda n: 2),
    ]
    failures = []
    for name, fn, kind, (lo, hi), crit, c_of in solvers:
        for _ in range(runs):
            n, m = _sizes(rng, lo, hi, 24)
            seed = rng.getrandbits(64)
            inst = random_instance(n, m, seed, max_value=20, kind=kind)
            alloc = fn(inst)
            if not check_doubly(inst, alloc, crit, c_of(n)).verdict:
                failures.append((name, n, m, seed))
    return not failures, f"{4 * runs} solves, {len(failures)} failures"


# --- 2 -------------------------------------------------------------------------------


def _objective_or_none(fn, inst, c):
    try:
        return fn(inst, c).objective
    except NoFeasibleAllocation:
        return None


def _oracle_or_none(inst, crit, c):
    try:
        return enumerate_best(inst, crit, c).optimum
    except NoFeasibleAllocation:
        return None


def exact_methods_match_oracle(runs=500):
    rng = random.Random(2)
    mismatches = 0
    for _ in range(runs):
        n, m = _sizes(rng, 1, 3, 8)
        inst = random_instance(n, m, rng.getrandbits(64), max_value=20, kind="binary_agents")
        for c in (0, 1, 2):
            if _objective_or_none(maximize_binary_prop_lp, inst, c) != _oracle_or_none(inst, "PROP", c):
                mismatches += 1
            if _objective_or_none(maximize_binary_ef_dp, inst, c) != _oracle_or_none(inst, "EF", c):
                mismatches += 1
    return mismatches == 0, f"{runs} instances x 3 values of c, {mismatches} mismatches"


# --- 3 -------------------------------------------------------------------------------


def approximation_ratios(runs=500):
    rng = random.Random(3)
    bad = 0
    for _ in range(runs):
        inst = random_instance(2, rng.randint(0, 8), rng.getrandbits(64), max_value=20)
        if 2 * maximize_two_agent_ef(inst).objective < enumerate_best(inst, "EF", 1).optimum:
            bad += 1
    for _ in range(runs):
        n, m = _sizes(rng, 1, 3, 8)
        inst = random_instance(n, m, rng.getrandbits(64), max_value=20)
        if m * maximize_round_robin(inst).objective < enumerate_best(inst, "EF", 1).optimum:
            bad += 1
    return bad == 0, f"{2 * runs} runs, {bad} ratio violations"


# --- 4 -------------------------------------------------------------------------------


def numeric_anchors():
    checks = {}
    g = build_gadget("thm51_partition_ef", {"e": ["1/2", "1/2"]})
    checks["partition gadget optimum 2"] = enumerate_best(g, "EF", 1).optimum == 2
    by_agents = Allocation(((0, 1), (2,)), 3)
    checks["intro doubly EF-1 exists"] = exists_multi_fair([INTRO.v, INTRO.u], "EF", 1)[0]
    rep = check_ef_c(INTRO, by_agents, 1, "u")
    checks["intro agents' split fails allocator EF-1"] = (
        check_ef_c(INTRO, by_agents, 1, "v").verdict
        and not rep.verdict
        and [(w.agent, w.other) for w in rep.violations()] == [(1, 0)]
    )
    profiles = gadget_profiles("thm66_triple")
    checks["triple table has no EF-1 allocation"] = not any(
        check_multi_fair(profiles, Allocation.from_assignment(owners, 2), "EF", 1).verdict
        for owners in [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]
    )
    checks["label sequences for m=8"] = label_sequences(4) == ["+-+-", "++-+", "-++-", "+-++", "-+-+"]
    failed = [k for k, ok in checks.items() if not ok]
    return not failed, "all anchors hold" if not failed else "failed: " + "; ".join(failed)


# --- 5 -------------------------------------------------------------------------------


def graph_anchors():
    checks = {}
    checks["chi K(4,3,2) = 4"] = chromatic_number(kneser_graph(4, 3, 2)).chromatic_number == 4
    g3 = chromatic_number(gamma_graph(3))
    checks["gamma(3) 6-clique, chi >= 6"] = len(g3.clique) >= 6 and g3.chromatic_number >= 6
    checks["chi gamma(n) >= 5, n = 3..5"] = all(chromatic_number(gamma_graph(n)).chromatic_number >= 5 for n in (3, 4, 5))
    classic = [(n, k) for n, k, s in in_cap_kneser_parameters() if s == 0 and n >= 2 * k]
    checks["classic Kneser on all in-cap (n,k)"] = all(
        chromatic_number(kneser_graph(n, k, 0)).chromatic_number == n - 2 * k + 2 for n, k in classic
    )
    failed = [k for k, ok in checks.items() if not ok]
    return not failed, "all anchors hold" if not failed else "failed: " + "; ".join(failed)


def kneser_inequality_sweep():
    """chi(K(n,k,s)) >= n - 2k + 2s + 2 over every in-cap triple."""
    violations = []
    triples = in_cap_kneser_parameters()
    for n, k, s in triples:
        chi = chromatic_number(kneser_graph(n, k, s)).chromatic_number
        if chi < kneser_lower_bound(n, k, s):
            violations.append((n, k, s, chi))
    detail = f"{len(triples)} triples, {len(violations)} violations"
    if violations:
        detail += f" (all with n < 2k: {all(n < 2 * k for n, k, _, _ in violations)}; first {violations[:3]})"
    return not violations, detail


def graph_criterion():
    a_ok, a_detail = graph_anchors()
    b_ok, b_detail = kneser_inequality_sweep()
    return a_ok and b_ok, f"anchors: {a_detail}; inequality sweep: {b_detail}"


# --- 6 -------------------------------------------------------------------------------


def structural_invariants(runs=1000):
    rng = random.Random(6)
    problems = []
    graphs = {m: gamma_graph(m) for m in range(0, 9)}
    for _ in range(runs):
        m = rng.randint(0, 8)
        inst = random_instance(2, m, rng.getrandbits(64), max_value=20)
        if not non_ef1_independent_set(inst, graphs[m]).verdict:
            problems.append("failure sets")
    for _ in range(runs):
        n, m = _sizes(rng, 2, 8, 24)
        inst = random_instance(n, m, rng.getrandbits(64), max_value=20)
        g1, g2 = list(range(n // 2)), list(range(n // 2, n))
        sol = solve_vertex_optimal(balanced_lp(inst, g1, g2, list(range(m))))
        if len(sol.fractional_indices()) > 2 * n - 1:
            problems.append("fractional count")
    for _ in range(runs):
        n, m = _sizes(rng, 1, 3, 8)
        inst = random_instance(n, m, rng.getrandbits(64), max_value=20, kind="binary_agents")
        c = rng.randint(0, 2)
        try:
            sol = solve_vertex_optimal(prop_assignment_lp(inst, c))
        except Infeasible:
            continue  # infeasible LPs have no vertex to inspect
        if sol.fractional_indices():
            problems.append("assignment LP vertex")
    for _ in range(runs):
        n, m = _sizes(rng, 1, 8, 24)
        trace = []
        solve_bivalued_prop2(random_instance(n, m, rng.getrandbits(64), max_value=20, kind="bivalued"), trace)
        if any(state.violations() for state in trace):
            problems.append("kappa state")
    return not problems, f"{4 * runs} checks, {len(problems)} violations {sorted(set(problems))}"


# --- 7 -------------------------------------------------------------------------------


def counterexample_regression():
    rep = search_counterexamples("binary", (2, 2), (1, 3), "PROP", 1, budget=10**6)
    ok = rep.exhaustive and rep.instances_examined >= 2**12 and not rep.counterexamples
    return ok, f"examined {rep.instances_examined}, exhaustive={rep.exhaustive}, found {len(rep.counterexamples)}"


CRITERIA = [
    (1, "doubly fair closure", doubly_fair_closure),
    (2, "exact methods equal oracle", exact_methods_match_oracle),
    (3, "approximation ratios", approximation_ratios),
    (4, "numeric anchors", numeric_anchors),
    (5, "graph anchors", graph_criterion),
    (6, "structural invariants", structural_invariants),
    (7, "counterexample regression", counterexample_regression),
]


# --- pytest entry points -------------------------------------------------------------------


def _assert(result):
    ok, detail = result
    assert ok, detail


def test_criterion_1_doubly_fair_closure():
    _assert(doubly_fair_closure())


def test_criterion_2_exact_methods_equal_oracle():
    _assert(exact_methods_match_oracle())


def test_criterion_3_approximation_ratios():
    _assert(approximation_ratios())


def test_criterion_4_numeric_anchors():
    _assert(numeric_anchors())


def test_criterion_5_graph_anchors():
    _assert(graph_anchors())


def test_criterion_5_kneser_inequality_on_all_in_cap_triples():
    _assert(kneser_inequality_sweep())


def test_criterion_6_structural_invariants():
    _assert(structural_invariants())


def test_criterion_7_counterexample_regression():
    _assert(counterexample_regression())


def main() -> int:
    failed = 0
    for number, name, fn in CRITERIA:
        start = time.perf_counter()
        ok, detail = fn()
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {number} {name}: {detail} [{time.perf_counter() - start:.1f}s]", flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
