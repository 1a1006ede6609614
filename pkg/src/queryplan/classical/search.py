"""Heuristic best-first search that pays one world-model query per generated successor."""

from __future__ import annotations

import heapq
import itertools
import math

from ..pddl import GroundAction, ProblemInstance, applicable_actions, satisfies_goal
from ..planners import FailureReason, PlannerOutcome
from ..world import BudgetExhausted, WorldModel
from .heuristics import INF, HeuristicKind, RelaxedHeuristic

GREEDY = math.inf  # weight sentinel: order the open list by h alone


def run_best_first(problem: ProblemInstance, world: WorldModel, kind: HeuristicKind | str = HeuristicKind.GOAL_COUNT,
                   w: float = 1.0) -> PlannerOutcome:
    """A* (w=1), weighted A* (w>1) or greedy best-first (w=inf).

    Applicability is read off the domain model for free; computing each
    successor is a world-model step. With w=1 closed states are reopened
    when reached with a smaller g.
    """
    kind = HeuristicKind(kind)
    h = RelaxedHeuristic(problem)
    start_used = world.ledger.used
    goal = problem.goal

    def priority(g: int, hv: float) -> float:
        if w == GREEDY:
            return hv
        return g + w * hv

    def done(plan: list[GroundAction] | None, reason: FailureReason | None = None, **info) -> PlannerOutcome:
        return PlannerOutcome(plan is not None, plan, world.ledger.used - start_used,
                              failure_reason=None if plan is not None else reason, info=info)

    s0 = problem.init
    h0 = h(kind, s0)
    if h0 == INF:
        return done(None, FailureReason.UNSOLVABLE)
    tie = itertools.count()
    open_heap = [(priority(0, h0), h0, next(tie), s0)]
    g_best: dict[str, int] = {s0.key: 0}
    parent: dict[str, tuple[str, GroundAction] | None] = {s0.key: None}
    closed: set[str] = set()
    expansions = 0
    try:
        while open_heap:
            _, _, _, s = heapq.heappop(open_heap)
            key = s.key
            if key in closed:
                continue
            if satisfies_goal(s, goal):
                plan = []
                while parent[key] is not None:
                    key, a = parent[key]
                    plan.append(a)
                return done(plan[::-1], expansions=expansions)
            closed.add(key)
            expansions += 1
            g = g_best[key]
            for a in applicable_actions(s, problem.ground_actions):
                nxt = world.step(s, a).next_state
                nk = nxt.key
                ng = g + 1
                if nk in g_best and (ng >= g_best[nk] or w != 1.0):
                    continue
                hv = h(kind, nxt)
                if hv == INF:
                    continue
                g_best[nk] = ng
                parent[nk] = (key, a)
                closed.discard(nk)
                heapq.heappush(open_heap, (priority(ng, hv), hv, next(tie), nxt))
    except BudgetExhausted:
        return done(None, FailureReason.BUDGET_EXHAUSTED, expansions=expansions)
    return done(None, FailureReason.UNSOLVABLE, expansions=expansions)
