import csv
import io
import json
from fractions import Fraction

import pytest

from dualfair.cli import run
from dualfair.model import Instance, parse_instance
from dualfair.oracle import enumerate_best

INTRO = {
    "agents": 2,
    "items": ["g1", "g2", "g3"],
    "agent_valuations": [[2, 1, 0], [0, 1, 2]],
    "allocator_valuations": [[0, 2, 1], [1, 2, 0]],
}


@pytest.fixture
def intro(tmp_path):
    path = tmp_path / "intro.json"
    path.write_text(json.dumps(INTRO))
    return str(path)


def _run(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_doubly_witness(capsys, intro):
    code, out, _ = _run(capsys, "check", "--instance", intro, "--criterion", "ef", "--c", "1",
                        "--perspective", "doubly", "--allocation", "[[0,2],[1]]")
    assert code == 0
    assert json.loads(out)["verdict"] is True


def test_check_failure_exits_one(capsys, intro):
    code, out, _ = _run(capsys, "check", "--instance", intro, "--perspective", "allocator",
                        "--allocation", "[[0,1],[2]]")
    assert code == 1
    assert json.loads(out)["verdict"] is False


def test_solve_tag_mismatch(capsys, intro):
    code, out, err = _run(capsys, "solve", "--algorithm", "bivalued-prop2", "--instance", intro)
    assert code == 2 and out == ""
    assert "bivalued" in err


def test_solve_embeds_certificate(capsys, intro, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = _run(capsys, "solve", "--instance", intro, "--out", str(target))
    assert code == 0 and out == ""
    data = json.loads(target.read_text())
    assert data["algorithm"] == "two-agent-ef1"
    assert data["certificate"]["verdict"] is True


def test_maximize_lp_on_binary_gadget_variant(capsys, tmp_path):
    inst = Instance(((1, 1, 1, 0), (1, 1, 0, 1)), ((0, 0, 0, 1), (0, 0, 1, 0)))
    path = tmp_path / "gadget.json"
    path.write_text(inst.dumps())
    code, out, _ = _run(capsys, "maximize", "--constraint", "prop", "--c", "1", "--method", "lp-binary",
                        "--instance", str(path))
    assert code == 0
    data = json.loads(out)
    assert data["objective"] == str(enumerate_best(inst, "PROP", 1).optimum)
    assert data["certificate"]["verdict"] is True


def test_maximize_usage_errors(capsys, intro):
    assert _run(capsys, "maximize", "--constraint", "ef", "--method", "lp-binary", "--instance", intro)[0] == 2
    assert _run(capsys, "maximize", "--constraint", "prop", "--method", "lp-binary", "--instance", intro)[0] == 2


def test_oracle_commands(capsys, intro):
    code, out, _ = _run(capsys, "oracle", "best", "--instance", intro, "--perspective", "doubly", "--objective", "none")
    assert code == 0
    assert json.loads(out)["witness"]["bundles"] == [[0, 2], [1]]
    code, out, _ = _run(capsys, "oracle", "exists", "--instance", intro, "--perspective", "doubly")
    assert code == 0 and json.loads(out)["exists"] is True
    code, _, _ = _run(capsys, "oracle", "best", "--instance", intro, "--cap", "4")
    assert code == 3
    code, out, err = _run(capsys, "oracle", "search", "--n", "2", "2", "--m", "1", "2", "--c", "1")
    assert code == 0
    rep = json.loads(out)
    assert rep["exhaustive"] and rep["counterexamples_found"] == 0
    assert "examined" in err


def test_oracle_infeasible_exit(capsys, tmp_path):
    inst = Instance(((1,), (1,)), ((1,), (1,)))
    path = tmp_path / "one.json"
    path.write_text(inst.dumps())
    code, _, _ = _run(capsys, "oracle", "best", "--instance", str(path), "--criterion", "ef", "--c", "0")
    assert code == 1


def test_graph_commands(capsys, tmp_path):
    dimacs = tmp_path / "g.col"
    code, out, _ = _run(capsys, "graph", "kneser", "--n", "4", "--k", "3", "--s", "2", "--dimacs", str(dimacs))
    assert code == 0
    data = json.loads(out)
    assert data["chromatic_number"] == 4 and data["lower_bound_holds"]
    assert dimacs.read_text().startswith("c kneser(4,3,2)\np edge 4 6")
    assert _run(capsys, "graph", "kneser", "--n", "8", "--k", "4")[0] == 3


def test_gen(capsys):
    code, out, _ = _run(capsys, "gen", "gadget", "--kind", "thm51_partition_ef", "--params", '{"e": ["1/2", "1/2"]}')
    assert code == 0
    inst = parse_instance(out)
    assert inst.n == 2 and inst.m == 4
    code, out, _ = _run(capsys, "gen", "random", "--kind", "bivalued", "--n", "3", "--m", "5", "--seed", "9")
    assert code == 0 and parse_instance(out).m == 5
    assert _run(capsys, "gen", "random", "--kind", "weird")[0] == 2
    assert _run(capsys, "gen", "gadget", "--kind", "thm51_partition_ef", "--params", '{"e": [1, 1]}')[0] == 2


def test_usage_errors(capsys, tmp_path):
    assert _run(capsys, "frobnicate")[0] == 2
    assert _run(capsys, "solve", "--instance", str(tmp_path / "missing.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert _run(capsys, "solve", "--instance", str(bad))[0] == 2


def test_output_is_deterministic(capsys, intro):
    argv = ["solve", "--instance", intro]
    first = _run(capsys, *argv)[1]
    assert first == _run(capsys, *argv)[1]
    argv = ["oracle", "search", "--space", "small-integer", "--n", "2", "3", "--m", "2", "4", "--budget", "50", "--seed", "4"]
    assert _run(capsys, *argv)[1] == _run(capsys, *argv)[1]


def test_empty_bench(capsys):
    code, out, err = _run(capsys, "bench", "--no-timing")
    assert code == 0
    assert json.loads(out) == {"cases": []}
    assert err.strip() == "case,seed,method,objective,oracle,ratio,micros"


def test_bench_suite(capsys, tmp_path):
    suite = {"cases": [
        {"name": "pairing", "method": "two-agent", "n": 2, "m": 5, "seeds": 20},
        {"name": "closure", "method": "prop-log", "n": 5, "m": 12, "seeds": 10},
    ]}
    path = tmp_path / "suite.json"
    path.write_text(json.dumps(suite))
    table = tmp_path / "rows.csv"
    argv = ["bench", "--suite", str(path), "--csv", str(table), "--no-timing"]
    code, out, _ = _run(capsys, *argv)
    assert code == 0
    summary = {c["case"]: c for c in json.loads(out)["cases"]}
    assert summary["closure"]["pass_rate"] == "1"
    assert summary["pairing"]["pass_rate"] == "1"
    assert Fraction(summary["pairing"]["worst_ratio"]) <= 2
    rows = list(csv.DictReader(io.StringIO(table.read_text())))
    assert len(rows) == 30
    first = table.read_text()
    _run(capsys, *argv)
    assert table.read_text() == first
