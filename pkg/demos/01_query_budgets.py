"""Where world-model queries go.

Walks through one 3-block task: a plan-level policy (Boomerang) reuses
everything it has already checked, while a step-level policy that loops
burns through the budget and is cut off.
"""

from queryplan import OraclePolicy, ScriptedPolicy, WorldModel, run_boomerang, run_react
from queryplan.data import builtin_problem
from queryplan.pddl import render_atoms


def show(title, outcome, world):
    print(f"{title}: success={outcome.success} wmq_used={outcome.wmq_used} "
          f"cache_hits={world.ledger.cache_hits} reason={outcome.failure_reason}")
    if outcome.plan:
        print("  plan:", ", ".join(a.display_name for a in outcome.plan))


def main():
    p = builtin_problem("blocksworld-3")
    print("start:", render_atoms(p.init.atoms, p.object_types))
    print("goal: ", render_atoms(p.goal, p.object_types))
    print()

    # a first plan that breaks at step 3, then a repaired one sharing its first two steps
    policy = ScriptedPolicy(p, plans=[
        ["unstack(a,b)", "put-down(a)", "stack(b,c)"],
        ["unstack(a,b)", "put-down(a)", "pick-up(b)", "stack(b,c)"],
    ])
    world = WorldModel.with_budget(p, 20)
    show("boomerang, scripted", run_boomerang(p, policy, world), world)
    print("  the shared prefix was paid for once: 3 queries for plan 1, 2 new ones for plan 2")
    print()

    world = WorldModel.with_budget(p, 20)
    show("boomerang, BFS oracle", run_boomerang(p, OraclePolicy(p), world), world)
    print()

    # pick a block up and put it straight back, over and over
    loop = ["unstack(a,b)", "stack(a,b)", "pick-up(c)", "put-down(c)"] * 10
    world = WorldModel.with_budget(p, 3)
    show("react, looping with budget 3", run_react(p, ScriptedPolicy(p, actions=loop), world, T=40), world)
    print("  every new (state, action) pair costs a query; the fourth distinct pair is refused")


if __name__ == "__main__":
    main()
