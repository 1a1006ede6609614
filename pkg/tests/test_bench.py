import json
import math
import random
import subprocess
import sys
from collections import Counter

import pytest

from queryplan.bench import (
    RECORD_COLUMNS,
    SUMMARY_COLUMNS,
    ConfigError,
    PlannerSpec,
    RunRecord,
    SuiteConfig,
    capped_wmq,
    configuration_count,
    enumerate_towers,
    gen_blocksworld,
    gen_blocksworld_text,
    histogram,
    histogram_csv,
    optimal_length_oracle,
    random_towers,
    read_records,
    records_csv,
    run_one,
    run_suite,
    summarize,
    write_blocksworld,
)
from queryplan.bench.cli import main
from queryplan.bench.generator import all_blocksworld_instances
from queryplan.pddl import load_problem

from oracles import bfs_distance


# -- generator ------------------------------------------------------------------

def test_configuration_counts():
    assert [configuration_count(n) for n in range(1, 9)] == [1, 3, 13, 73, 501, 4051, 37633, 394353]
    for n in range(1, 6):
        towers = enumerate_towers(list("abcdefgh"[:n]))
        canon = {tuple(sorted(tuple(t) for t in x)) for x in towers}
        assert len(towers) == len(canon) == configuration_count(n)


def test_random_towers_uniform():
    rng = random.Random(7)
    draws = Counter(tuple(sorted(tuple(t) for t in random_towers(list("abc"), rng))) for _ in range(13_000))
    assert len(draws) == 13
    # chi-square, 12 degrees of freedom; 32.9 is the 0.999 quantile
    chi2 = sum((c - 1000) ** 2 / 1000 for c in draws.values())
    assert chi2 < 32.9


def test_generation_is_deterministic():
    assert gen_blocksworld_text(5, 11) == gen_blocksworld_text(5, 11)
    assert gen_blocksworld_text(5, 11) != gen_blocksworld_text(5, 12)
    name, text = gen_blocksworld_text(4, 2)
    assert name == "bw4-s2" and "(:domain blocksworld-4ops)" in text


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_generated_instances_are_well_formed(n):
    p = gen_blocksworld(n, 0)
    assert sorted(p.objects) == list("abcdefgh"[:n])
    on_table = {a.args[0] for a in p.init.atoms if a.predicate == "ontable"}
    on_other = {a.args[0] for a in p.init.atoms if a.predicate == "on"}
    assert on_table | on_other == set(p.objects) and not on_table & on_other
    assert all(a.predicate == "on" for a in p.goal)


def test_bounds():
    with pytest.raises(ValueError):
        gen_blocksworld(1, 0)
    with pytest.raises(ValueError):
        gen_blocksworld(9, 0)


def test_write_blocksworld(tmp_path):
    paths = write_blocksworld(3, 4, 10, tmp_path)
    assert [p.name for p in paths] == ["bw3-s10.pddl", "bw3-s11.pddl", "bw3-s12.pddl", "bw3-s13.pddl"]
    p = load_problem(tmp_path / "domain.pddl", paths[0])
    assert p.init == gen_blocksworld(3, 10).init


def test_oracle_matches_bfs():
    for seed in range(10):
        p = gen_blocksworld(3, seed)
        assert optimal_length_oracle(p) == bfs_distance(p, p.init, p.goal)


def test_oracle_unknown_past_cap(bw8):
    assert optimal_length_oracle(bw8, state_cap=50) is None


def test_two_block_optimal_lengths():
    assert {optimal_length_oracle(p) for p in all_blocksworld_instances(2)} == {0, 2, 4}


# -- records ------------------------------------------------------------------

def _rec(pid, ok, wmq, budget=20, **kw):
    return RunRecord("p", pid, ok, wmq, budget=budget, plan_length=3 if ok else None, **kw)


def test_record_validation():
    with pytest.raises(ValueError):
        RunRecord("p", "x", True, 3)
    with pytest.raises(ValueError):
        RunRecord("p", "x", False, 3, optimal=False)


def test_records_csv_layout():
    text = records_csv([_rec("a", True, 3), _rec("a", False, 20, failure_reason="BudgetExhausted")])
    lines = text.splitlines()
    assert lines[0] == ",".join(RECORD_COLUMNS)
    assert lines[1] == "p,a,0,20,true,,3,3,,0,0,0,0,"
    assert lines[2].endswith(",BudgetExhausted")


def test_summary_values():
    recs = [_rec("a", True, 4), _rec("a", True, 6), _rec("a", False, 9), _rec("a", False, 20)]
    row = summarize(recs)[0]
    assert row["success_rate"] == 0.5
    assert row["success_se"] == pytest.approx(math.sqrt(0.25 / 4))
    assert row["mean_wmq"] == (4 + 6 + 20 + 20) / 4  # failures at the cap
    assert row["mean_wmq_success"] == 5
    assert list(row) == list(SUMMARY_COLUMNS)


def test_capped_wmq_without_budget():
    assert capped_wmq(_rec("a", False, 37, budget=None)) == 37


def test_histogram_bins():
    recs = [_rec("a", True, 0), _rec("a", True, 4), _rec("a", False, 7), _rec("a", False, 20)]
    h = histogram(recs)["a"]
    assert len(h) == 21 and h[0] == 1 and h[4] == 1 and h[20] == 2 and sum(h) == 4
    assert histogram_csv(recs).splitlines()[0] == "planner_id,wmq,count"


def test_record_json_round_trip(tmp_path):
    r = _rec("a", True, 3, plan=["x", "y", "z"], wall_time=0.25)
    path = tmp_path / "r.jsonl"
    path.write_text(r.to_json() + "\n")
    assert read_records(path) == [r]


# -- suite --------------------------------------------------------------------

def _suite(tmp_path, **extra):
    data = {
        "suite": {"problems": ["builtin:blocksworld-3"], "generate": {"n_blocks": [3, 4], "count": 2, "seed": 5},
                  "budget": 20, "out_dir": "out"},
        "planners": {"boom": {"algorithm": "boomerang", "policy": "oracle"},
                     "astar": {"heuristic": "goal_count"},
                     "gbfs-ff": {"algorithm": "gbfs", "heuristic": "h_ff"},
                     "rand": {"algorithm": "react", "policy": "random"}},
    }
    for k, v in extra.items():
        data[k] = {**data.get(k, {}), **v}
    return SuiteConfig.from_dict(data, base=tmp_path)


def test_oracle_suite(tmp_path):
    res = run_suite(_suite(tmp_path))
    assert len(res.records) == 5 * 4
    boom = [r for r in res.records if r.planner_id == "boom"]
    assert all(r.success and r.optimal and r.wmq_used == r.optimal_length for r in boom)
    for f in ("records.jsonl", "records.csv", "summary.csv", "histogram.csv"):
        assert (tmp_path / "out" / f).exists()
    assert read_records(tmp_path / "out" / "records.jsonl") == res.records


def test_suite_is_deterministic(tmp_path):
    a = run_suite(_suite(tmp_path / "a")).records_csv
    b = run_suite(_suite(tmp_path / "b", suite={"parallelism": 4})).records_csv
    assert a == b


def test_uncapped_judges_against_budget(tmp_path):
    cfg = _suite(tmp_path, suite={"uncapped": True, "budget": 3, "problems": [], "generate": {"n_blocks": 4,
                                                                                               "count": 3, "seed": 0}})
    recs = run_suite(cfg).records
    astar = [r for r in recs if r.planner_id == "astar"]
    assert any(r.wmq_used > 3 for r in astar)
    assert all(not r.success for r in astar if r.wmq_used > 3)


@pytest.mark.parametrize("bad,match", [
    ({"planners": {"x": {"algorithm": "dijkstra"}}}, "unknown algorithm"),
    ({"planners": {"x": {"algorithm": "react", "policy": "psychic"}}}, "unknown policy"),
    ({"suite": {"budget": -1}}, "budget"),
    ({"suite": {"parallelism": 0}}, "parallelism"),
    ({"suite": {"problems": ["builtin:nope-1"]}}, "no bundled problem"),
    ({"llm": {"temperature": 5}}, "temperature"),
])
def test_config_errors(tmp_path, bad, match):
    with pytest.raises(ConfigError, match=match):
        _suite(tmp_path, **bad)


def test_replay_needs_transcript(tmp_path):
    with pytest.raises(ConfigError, match="transcript"):
        _suite(tmp_path, planners={"llm": {"algorithm": "boomerang", "policy": "llm"}}, llm={"mode": "replay"})


def test_run_one_records_crashes_as_failures(bw3):
    spec = PlannerSpec("s", "boomerang", "oracle", {"T": 0})
    rec = run_one(spec, bw3, 0, 20)
    assert not rec.success and rec.failure_reason == "ValueError"


def _mock_cfg(tmp_path, mode):
    return {
        "suite": {"problems": ["builtin:blocksworld-3", "builtin:grippers-1"],
                  "generate": {"n_blocks": 3, "count": 3, "seed": 1}, "out_dir": f"out-{mode}"},
        "llm": {"mode": mode, "backend": "mock", "transcript": "t.jsonl", "mock_error_rate": 0.3},
        "planners": {"boom": {"algorithm": "boomerang", "policy": "llm"},
                     "react": {"algorithm": "react", "policy": "llm"},
                     "toi": {"algorithm": "toi_bfs", "policy": "llm"}},
    }


def test_record_and_replay(tmp_path):
    rec = run_suite(SuiteConfig.from_dict(_mock_cfg(tmp_path, "record"), base=tmp_path))
    assert any(r.llm_calls for r in rec.records)
    rep = run_suite(SuiteConfig.from_dict(_mock_cfg(tmp_path, "replay"), base=tmp_path))
    assert rep.records_csv == rec.records_csv
    with pytest.raises(ConfigError, match="fresh file"):
        run_suite(SuiteConfig.from_dict(_mock_cfg(tmp_path, "record"), base=tmp_path))


# -- command line -----------------------------------------------------------------

def test_cli_gen_and_solve(tmp_path, capsys):
    assert main(["gen", "blocksworld", "--n", "3", "--count", "2", "--seed", "4", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    code = main(["solve", "--domain", str(tmp_path / "domain.pddl"), "--problem", str(tmp_path / "bw3-s4.pddl"),
                 "--planner", "astar", "--budget", "0"])
    rec = json.loads(capsys.readouterr().out)
    assert code == 0 and rec["success"] and rec["budget"] is None
    assert rec["plan_length"] == rec["optimal_length"]


def test_cli_solve_replay(tmp_path, capsys):
    cfg = _mock_cfg(tmp_path, "record")
    cfg["suite"] = {"problems": ["builtin:blocksworld-3"], "out_dir": "o"}
    cfg["planners"] = {"boomerang": {"policy": "llm"}}
    cfg["llm"]["mock_error_rate"] = 0.0
    run_suite(SuiteConfig.from_dict(cfg, base=tmp_path))
    # the solve command uses the same run id scheme, so the suite transcript serves it
    from importlib import resources
    data = resources.files("queryplan.data")
    dom = tmp_path / "d.pddl"
    prob = tmp_path / "p.pddl"
    dom.write_text(data.joinpath("domains/blocksworld.pddl").read_text())
    prob.write_text(data.joinpath("problems/blocksworld-3.pddl").read_text())
    code = main(["solve", "--domain", str(dom), "--problem", str(prob), "--planner", "boomerang",
                 "--replay", str(tmp_path / "t.jsonl")])
    rec = json.loads(capsys.readouterr().out)
    assert code == 0 and rec["success"] and rec["llm_calls"] > 0


def test_cli_run_and_summarize(tmp_path, capsys):
    (tmp_path / "suite.toml").write_text(
        '[suite]\nproblems = ["builtin:blocksworld-3"]\nbudget = 20\nout_dir = "out"\n'
        '[planners.boom]\nalgorithm = "boomerang"\npolicy = "oracle"\n')
    assert main(["run", "--config", str(tmp_path / "suite.toml")]) == 0
    assert capsys.readouterr().out.startswith("planner_id,runs,")
    out = tmp_path / "s.csv"
    assert main(["summarize", "--records", str(tmp_path / "out" / "records.jsonl"), "--out", str(out),
                 "--histogram", str(tmp_path / "h.csv")]) == 0
    assert out.read_text().splitlines()[1].startswith("boom,1,1,1.000000")


@pytest.mark.parametrize("argv", [
    ["run", "--config", "/nonexistent.toml"],
    ["gen", "blocksworld", "--n", "12", "--out", "/tmp/x"],
    ["solve", "--domain", "/nope.pddl", "--problem", "/nope.pddl", "--planner", "react"],
    ["solve", "--problem", "/nope.pddl", "--planner", "react"],
    ["solve", "--problem", "builtin:nope-1", "--planner", "react"],
])
def test_cli_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("queryplan: error:")


def test_cli_solve_builtin(capsys):
    assert main(["solve", "--problem", "builtin:blocksworld-3", "--planner", "boomerang"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["problem_id"] == "blocksworld-3" and rec["success"] and rec["wmq_used"] == 4


def test_console_script_installed():
    out = subprocess.run([sys.executable, "-m", "queryplan.bench.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "summarize" in out.stdout
