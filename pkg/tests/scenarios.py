"""Scripted scenarios shared by the planner tests and the acceptance suite."""

import random

from queryplan.data import builtin_problem
from queryplan.planners import run_boomerang, run_react, run_toi_bfs, run_toi_dfs
from queryplan.policy import ScriptedPolicy
from queryplan.world import WorldModel

from conftest import bw_problem

PLAN_FAILS_AT_3 = ["unstack(a,b)", "put-down(a)", "stack(b,c)"]
PLAN_OPTIMAL = ["unstack(a,b)", "put-down(a)", "pick-up(b)", "stack(b,c)"]


def boomerang_reuse():
    """Two Boomerang iterations on the 3-block instance sharing a 2-step prefix."""
    p = builtin_problem("blocksworld-3")
    world = WorldModel.with_budget(p, 20)
    policy = ScriptedPolicy(p, plans=[PLAN_FAILS_AT_3, PLAN_OPTIMAL])
    out = run_boomerang(p, policy, world)
    return out, world, 3 + (len(PLAN_OPTIMAL) - 2)


def cycling_script():
    """Pick a block up, stack it, unstack it, put it down; repeat over every ordered pair."""
    blocks = "abcd"
    script = []
    for x in blocks:
        for y in blocks:
            if x != y:
                script += [f"pick-up({x})", f"stack({x},{y})", f"unstack({x},{y})", f"put-down({x})"]
    return script


def react_cycle(budget=20):
    p = bw_problem("(ontable a) (ontable b) (ontable c) (ontable d) (clear a) (clear b) (clear c) (clear d) (handempty)",
                   "(on a b) (on b c) (on c d)", objects="a b c d")
    world = WorldModel.with_budget(p, budget)
    policy = ScriptedPolicy(p, actions=cycling_script())
    out = run_react(p, policy, world, T=1000)
    return p, out, world


class FuzzPolicy(ScriptedPolicy):
    """Proposes random valid actions and rates states at random."""

    def __init__(self, problem, rng):
        super().__init__(problem, ratings=lambda s: rng.choice(["sure", "maybe", "maybe", "impossible"]))
        self.rng = rng

    def propose_actions(self, req, ctx):
        valid = list(req.valid_actions)
        return self.rng.sample(valid, min(req.k, len(valid)))


def random_beam_run(seed, b):
    """ToI-BFS with random proposals and ratings; returns every beam it kept."""
    rng = random.Random(seed)
    p = builtin_problem("blocksworld-8" if seed % 2 else "blocksworld-3")
    policy = FuzzPolicy(p, rng)
    beams = []
    run_toi_bfs(p, policy, WorldModel.with_budget(p, 40), T=8, k=rng.randint(1, 4), b=b, on_beam=beams.append)
    return beams


def random_dfs_run(seed, v_min):
    """ToI-DFS with random ratings; returns each expanded node (besides the root)."""
    rng = random.Random(seed)
    p = builtin_problem("blocksworld-8" if seed % 2 else "blocksworld-3")
    policy = FuzzPolicy(p, rng)
    expanded = []
    run_toi_dfs(p, policy, WorldModel.with_budget(p, 60), T=15, k=rng.randint(1, 4), v_min=v_min,
                on_expand=expanded.append)
    return expanded[1:]

