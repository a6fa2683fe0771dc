"""dualfair command line.

Exit codes: 0 success, 1 infeasible / no solution / failed check,
2 usage error or instance-class mismatch, 3 enumeration or state cap hit.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction

from . import doubly, graphlab, maxeff, oracle
from .fairness import allocator_efficiency, check_doubly, check_perspective
from .model import (
    RANDOM_KINDS,
    FormatError,
    NotBivalued,
    ValidationError,
    classify,
    load_instance,
    parse_allocation,
    random_instance,
)

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


# algorithm -> (callable, criterion, c(n), required class tags)
SOLVERS = {
    "identical-ef1": (doubly.solve_identical_allocator_ef1, "EF", lambda n: 1, {"identical_allocator"}),
    "two-agent-ef1": (doubly.solve_two_agent_doubly_ef1, "EF", lambda n: 1, set()),
    "prop-log": (doubly.solve_doubly_prop_log, "PROP", doubly.prop_log_guarantee, set()),
    "bivalued-prop2": (
        doubly.solve_bivalued_prop2,
        "PROP",
        lambda n: 2,
        {"personalized_bivalued(v)", "personalized_bivalued(u)"},
    ),
}

METHODS = {
    "two-agent": (maxeff.maximize_two_agent_ef, "EF"),
    "round-robin": (maxeff.maximize_round_robin, "EF"),
    "lp-binary": (maxeff.maximize_binary_prop_lp, "PROP"),
    "dp-binary": (maxeff.maximize_binary_ef_dp, "EF"),
}


def _emit(payload, out: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _criterion(name: str) -> str:
    return name.upper()


def _pick_solver(instance, name: str) -> str:
    tags = classify(instance)
    if name == "auto":
        if instance.n == 2:
            return "two-agent-ef1"
        if "identical_allocator" in tags:
            return "identical-ef1"
        if {"personalized_bivalued(v)", "personalized_bivalued(u)"} <= tags:
            return "bivalued-prop2"
        return "prop-log"
    needs = SOLVERS[name][3]
    missing = needs - tags
    if missing:
        raise UsageError(f"algorithm {name} needs an instance that is {', '.join(sorted(missing))}")
    if name == "two-agent-ef1" and instance.n != 2:
        raise UsageError(f"algorithm {name} needs exactly 2 agents, instance has {instance.n}")
    return name


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    name = _pick_solver(instance, args.algorithm)
    fn, criterion, c_of, _ = SOLVERS[name]
    alloc = fn(instance)
    cert = check_doubly(instance, alloc, criterion, c_of(instance.n))
    _emit({"algorithm": name, "allocation": alloc.to_json(), "certificate": cert.to_json()}, args.out)
    return EXIT_OK if cert.verdict else EXIT_INFEASIBLE


def cmd_check(args) -> int:
    instance = load_instance(args.instance)
    text = args.allocation
    if not text.lstrip().startswith(("[", "{")):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    alloc = parse_allocation(text, instance.m)
    report = check_perspective(instance, alloc, _criterion(args.criterion), args.c, args.perspective)
    _emit(report.to_json(), args.out)
    return EXIT_OK if report.verdict else EXIT_INFEASIBLE


def cmd_maximize(args) -> int:
    instance = load_instance(args.instance)
    fn, criterion = METHODS[args.method]
    if criterion != _criterion(args.constraint):
        raise UsageError(f"method {args.method} handles {criterion.lower()} constraints only")
    kwargs = {}
    if args.method == "dp-binary" and args.max_states:
        kwargs["max_states"] = args.max_states
    try:
        res = fn(instance, args.c, **kwargs)
    except (maxeff.NotBinary, doubly.NotTwoAgents) as exc:
        raise UsageError(str(exc)) from exc
    _emit(res.to_json(), args.out)
    return EXIT_OK


def _progress(count: int):
    print(f"examined {count}", file=sys.stderr, flush=True)


def cmd_oracle(args) -> int:
    if args.action == "search":
        rep = oracle.search_counterexamples(
            args.space,
            tuple(args.n),
            tuple(args.m),
            _criterion(args.criterion),
            args.c,
            args.budget,
            args.seed,
            args.max_value,
            cap=args.cap,
            progress=_progress,
        )
        _emit(rep.to_json(), args.out)
        return EXIT_OK
    if not args.instance:
        raise UsageError("--instance is required")
    instance = load_instance(args.instance)
    crit = _criterion(args.criterion)
    if args.action == "exists":
        profiles = [instance.v, instance.u] if args.perspective == "doubly" else [instance.matrix("v" if args.perspective == "agents" else "u")]
        ok, witness = oracle.exists_multi_fair(profiles, crit, args.c, args.cap, args.jobs)
        _emit({"exists": ok, "witness": witness.to_json() if witness else None}, args.out)
        return EXIT_OK if ok else EXIT_INFEASIBLE
    objective = "none" if args.objective == "none" else "allocator_efficiency"
    res = oracle.enumerate_best(instance, crit, args.c, args.perspective, objective, args.cap, args.jobs)
    _emit(res.to_json(), args.out)
    return EXIT_OK


def cmd_graph(args) -> int:
    if args.family == "kneser":
        g = graphlab.kneser_graph(args.n, args.k, args.s)
    else:
        g = graphlab.gamma_graph(args.n)
    if args.dimacs:
        with open(args.dimacs, "w", encoding="utf-8") as fh:
            fh.write(g.to_dimacs())
    res = graphlab.chromatic_number(g, args.cap)
    payload = {
        "graph": g.name,
        "vertices": g.order,
        "edges": len(g.edges()),
        "clique_number": len(res.clique),
        "chromatic_number": res.chromatic_number,
        "coloring": list(res.coloring),
    }
    if args.family == "kneser":
        bound = graphlab.kneser_lower_bound(args.n, args.k, args.s)
        payload["lower_bound"] = bound
        payload["lower_bound_holds"] = res.chromatic_number >= bound
    _emit(payload, args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.source == "gadget":
        params = json.loads(args.params) if args.params else {}
        try:
            inst = maxeff.build_gadget(args.kind, params)
        except maxeff.BadParameters as exc:
            raise UsageError(str(exc)) from exc
    else:
        inst = random_instance(args.n, args.m, args.seed, args.max_value, args.kind)
    _emit(inst.to_json(), args.out)
    return EXIT_OK


# --- bench ---------------------------------------------------------------------------


def _ratio(opt: Fraction | None, got: Fraction | None) -> str:
    if opt is None or got is None:
        return ""
    if got == 0:
        return "1" if opt == 0 else "inf"
    return str(opt / got)


def _bench_case(case: dict, seed: int):
    """One (case, seed) row plus whether its certificate passed."""
    kind = case.get("generator", "general")
    inst = random_instance(case["n"], case["m"], seed, case.get("max_value", 20), kind)
    method = case["method"]
    c = case.get("c", 1)
    start = time.perf_counter_ns()
    if method in SOLVERS:
        fn, crit, c_of, _ = SOLVERS[method]
        alloc = fn(inst)
        micros = (time.perf_counter_ns() - start) // 1000
        ok = check_doubly(inst, alloc, crit, c_of(inst.n)).verdict
        sw = allocator_efficiency(inst, alloc)
        return {"objective": str(sw), "oracle": "", "ratio": "", "micros": micros}, ok
    fn, crit = METHODS[method]
    try:
        res = fn(inst, c)
        got = res.objective
        ok = res.fairness_certificate.verdict
    except maxeff.NoFeasibleAllocation:
        got, ok = None, True
    micros = (time.perf_counter_ns() - start) // 1000
    opt = None
    if case.get("oracle", True):
        try:
            opt = oracle.enumerate_best(inst, crit, c, "agents").optimum
        except maxeff.NoFeasibleAllocation:
            opt = None
    row = {
        "objective": "" if got is None else str(got),
        "oracle": "" if opt is None else str(opt),
        "ratio": _ratio(opt, got),
        "micros": micros,
    }
    return row, ok


def run_bench(suite: dict, timing: bool = True):
    rows, summary = [], []
    for case in suite.get("cases", []):
        name = case.get("name", case["method"])
        seeds = case.get("seeds", 10)
        seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
        passed, worst, capped = 0, None, 0
        for seed in seed_list:
            try:
                row, ok = _bench_case(case, seed)
            except (oracle.CapExceeded, maxeff.StateSpaceExceeded):
                capped += 1
                rows.append({"case": name, "seed": seed, "method": case["method"], "objective": "cap", "oracle": "", "ratio": "", "micros": 0})
                continue
            passed += ok
            if row["ratio"] and row["ratio"] != "inf":
                r = Fraction(row["ratio"])
                worst = r if worst is None or r > worst else worst
            elif row["ratio"] == "inf":
                worst = "inf"
            if not timing:
                row["micros"] = 0
            rows.append({"case": name, "seed": seed, "method": case["method"], **row})
        summary.append({
            "case": name,
            "method": case["method"],
            "runs": len(seed_list),
            "capped": capped,
            "pass_rate": str(Fraction(passed, len(seed_list) - capped)) if len(seed_list) > capped else "",
            "worst_ratio": "" if worst is None else str(worst),
        })
    return rows, {"cases": summary}


def cmd_bench(args) -> int:
    if args.suite:
        with open(args.suite, encoding="utf-8") as fh:
            suite = json.load(fh)
    else:
        suite = {"cases": []}
    rows, summary = run_bench(suite, timing=not args.no_timing)
    header = ["case", "seed", "method", "objective", "oracle", "ratio", "micros"]
    fh = open(args.csv, "w", newline="", encoding="utf-8") if args.csv else sys.stderr
    try:
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.csv:
            fh.close()
    _emit(summary, args.out)
    return EXIT_OK


# --- argument parsing ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualfair", description="Fair division with an allocator's preference.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("--instance", required=True, help="instance JSON file")
        sp.add_argument("--out", help="write JSON here instead of stdout")

    sp = sub.add_parser("solve", help="compute a doubly fair allocation")
    common(sp)
    sp.add_argument("--algorithm", default="auto", choices=["auto", *SOLVERS])
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("check", help="evaluate EF-c / PROP-c for an allocation")
    common(sp)
    sp.add_argument("--allocation", required=True, help="JSON bundles or a file holding them")
    sp.add_argument("--criterion", choices=["ef", "prop"], default="ef")
    sp.add_argument("--c", type=int, default=1)
    sp.add_argument("--perspective", choices=["agents", "allocator", "doubly"], default="doubly")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("maximize", help="maximize allocator efficiency under agents' fairness")
    common(sp)
    sp.add_argument("--constraint", choices=["ef", "prop"], default="ef")
    sp.add_argument("--c", type=int, default=1)
    sp.add_argument("--method", choices=list(METHODS), required=True)
    sp.add_argument("--max-states", type=int, default=None)
    sp.set_defaults(func=cmd_maximize)

    sp = sub.add_parser("oracle", help="brute-force optimum, existence, or counterexample search")
    sp.add_argument("action", choices=["best", "exists", "search"])
    sp.add_argument("--instance")
    sp.add_argument("--out")
    sp.add_argument("--criterion", choices=["ef", "prop"], default="ef")
    sp.add_argument("--c", type=int, default=1)
    sp.add_argument("--perspective", choices=list(oracle.PERSPECTIVES), default="agents")
    sp.add_argument("--objective", choices=["sw", "none"], default="sw")
    sp.add_argument("--cap", type=int, default=None, help=f"enumeration cap (env {oracle.CAP_ENV})")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--space", choices=list(oracle.SPACES), default="binary")
    sp.add_argument("--n", type=int, nargs=2, default=[2, 2], metavar=("LO", "HI"))
    sp.add_argument("--m", type=int, nargs=2, default=[1, 3], metavar=("LO", "HI"))
    sp.add_argument("--budget", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-value", type=int, default=5)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("graph", help="exact chromatic number of a Kneser or gamma graph")
    sp.add_argument("family", choices=["kneser", "gamma"])
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--s", type=int, default=0)
    sp.add_argument("--cap", type=int, default=graphlab.DEFAULT_VERTEX_CAP)
    sp.add_argument("--dimacs", help="also write the graph in DIMACS format")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_graph)

    sp = sub.add_parser("gen", help="emit a random or gadget instance")
    sp.add_argument("source", choices=["random", "gadget"])
    sp.add_argument("--kind", default="general", help=f"random: {', '.join(RANDOM_KINDS)}; gadget: {', '.join(maxeff.GADGETS)}")
    sp.add_argument("--params", help="gadget parameters as JSON")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--m", type=int, default=4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-value", type=int, default=20)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("bench", help="run a solver / oracle suite")
    sp.add_argument("--suite", help="suite JSON; omitted means an empty suite")
    sp.add_argument("--csv", help="per-case CSV output (default: stderr)")
    sp.add_argument("--no-timing", action="store_true", help="write 0 in the micros column")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bench)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "gen" and args.source == "random" and args.kind not in RANDOM_KINDS:
        print(f"error: unknown random kind {args.kind!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, NotBivalued, doubly.NotIdenticalAllocator, doubly.NotTwoAgents) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, ValidationError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except maxeff.NoFeasibleAllocation as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (oracle.CapExceeded, graphlab.CapExceeded, maxeff.StateSpaceExceeded) as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP


def main() -> None:
    sys.exit(run())
