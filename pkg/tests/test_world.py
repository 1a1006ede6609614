import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from queryplan.data import builtin_problem
from queryplan.pddl import parse_action_string
from queryplan.world import BudgetExhausted, ErrorKind, QueryLedger, WorldModel

OPTIMAL = ["unstack(a,b)", "put-down(a)", "pick-up(b)", "stack(b,c)"]


def acts(problem, names):
    return [parse_action_string(n, problem.action_index) for n in names]


def test_step_charges_once_per_pair(bw3):
    w = WorldModel.with_budget(bw3, 20)
    a = acts(bw3, ["unstack(a,b)"])[0]
    r1 = w.step(bw3.init, a)
    r2 = w.step(bw3.init, a)
    assert r1.ok and r1.charged and not r2.charged
    assert r1.next_state == r2.next_state
    assert w.ledger.used == 1 and w.ledger.cache_hits == 1


def test_inapplicable_is_charged_and_cached(bw3):
    w = WorldModel.with_budget(bw3, 20)
    a = acts(bw3, ["pick-up(b)"])[0]
    r = w.step(bw3.init, a)
    assert not r.ok and r.charged
    assert r.error.kind == ErrorKind.INVALID_ACTION
    assert r.error.detail == ("invalid action pick-up(b:default): unsatisfied precondition(s): clear(b:default)")
    assert not w.step(bw3.init, a).charged
    assert w.ledger.used == 1


def test_budget_exhaustion(bw3):
    w = WorldModel.with_budget(bw3, 2)
    ground = bw3.ground_actions
    w.step(bw3.init, ground[0])
    w.step(bw3.init, ground[1])
    w.step(bw3.init, ground[0])  # cached, still free
    with pytest.raises(BudgetExhausted):
        w.step(bw3.init, ground[2])
    assert w.ledger.used == 2


def test_unlimited_budget(bw3):
    w = WorldModel.with_budget(bw3, None)
    for a in bw3.ground_actions:
        w.step(bw3.init, a)
    assert w.ledger.used == 24 and w.ledger.remaining is None and not w.ledger.exhausted


def test_ledger_accounting():
    led = QueryLedger(budget=3)
    led.charge()
    assert led.remaining == 2
    led.charge(), led.charge()
    assert led.exhausted
    with pytest.raises(BudgetExhausted):
        led.charge()


def test_verify_success(bw3):
    w = WorldModel.with_budget(bw3, 20)
    res = w.verify_plan(bw3.init, acts(bw3, OPTIMAL), bw3.goal)
    assert res.reached_goal and res.error is None and res.new_queries == 4
    assert len(res.states) == 5 and [a.name for a in res.actions] == ["unstack", "put-down", "pick-up", "stack"]


def test_verify_reports_first_failure_one_based(bw3):
    w = WorldModel.with_budget(bw3, 20)
    res = w.verify_plan(bw3.init, acts(bw3, ["unstack(a,b)", "pick-up(b)", "stack(b,c)"]), bw3.goal)
    assert not res.reached_goal and res.new_queries == 2
    assert res.error.action_index == 1
    assert "at step 2" in res.error.detail and "handempty()" in res.error.detail
    # trajectory stops at the last good state
    assert len(res.trajectory) == 3


def test_verify_goal_not_reached(bw3):
    w = WorldModel.with_budget(bw3, 20)
    res = w.verify_plan(bw3.init, acts(bw3, ["unstack(a,b)", "put-down(a)"]), bw3.goal)
    assert res.error.kind == ErrorKind.GOAL_NOT_REACHED
    assert res.error.detail.endswith("on(b:default,c:default)")


def test_verify_stops_at_goal_prefix(bw3):
    w = WorldModel.with_budget(bw3, 20)
    res = w.verify_plan(bw3.init, acts(bw3, OPTIMAL + ["unstack(b,c)"]), bw3.goal)
    assert res.reached_goal and len(res.actions) == 4 and res.new_queries == 4


def test_verify_budget_mid_plan(bw3):
    w = WorldModel.with_budget(bw3, 2)
    res = w.verify_plan(bw3.init, acts(bw3, OPTIMAL), bw3.goal)
    assert res.budget_exhausted and not res.reached_goal and res.new_queries == 2


def test_goal_at_start_is_free(make_bw):
    p = make_bw("(ontable a) (clear a) (handempty)", "(ontable a)", objects="a")
    w = WorldModel.with_budget(p, 20)
    res = w.verify_plan(p.init, [], p.goal)
    assert res.reached_goal and w.ledger.used == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 23), max_size=30), st.integers(0, 25))
def test_ledger_counts_unique_pairs(indices, budget):
    p = builtin_problem("blocksworld-3")
    w = WorldModel.with_budget(p, budget)
    pairs = set()
    for i in indices:
        a = p.ground_actions[i]
        try:
            w.step(p.init, a)
        except BudgetExhausted:
            assert len(pairs) == budget and a.display_name not in pairs
            continue
        pairs.add(a.display_name)
    assert w.ledger.used == len(pairs) <= budget
