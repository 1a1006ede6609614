"""Goal-count and delete-relaxation heuristics (h_add, h_FF)."""

from __future__ import annotations

import enum
import heapq
import math
from collections import defaultdict
from typing import Iterable

from ..pddl import Atom, GroundAction, ProblemInstance, State

INF = math.inf


class HeuristicKind(str, enum.Enum):
    GOAL_COUNT = "goal_count"
    H_ADD = "h_add"
    H_FF = "h_ff"


class RelaxedHeuristic:
    """Precomputes the relaxed action graph once per problem.

    ``h_add`` is computed with a Dijkstra-style fixed point (unit action cost
    plus the summed cost of the preconditions). ``h_ff`` counts the actions of
    the relaxed plan read off the h_add best supporters; supporters are
    chosen by lowest cost, then by display name.
    """

    def __init__(self, problem: ProblemInstance, goal: Iterable[Atom] | None = None):
        self.problem = problem
        self.goal = frozenset(problem.goal if goal is None else goal)
        self.actions: list[GroundAction] = problem.ground_actions
        self._consumers: dict[Atom, list[int]] = defaultdict(list)
        for i, a in enumerate(self.actions):
            for p in a.pre:
                self._consumers[p].append(i)

    def costs(self, s: State) -> tuple[dict[Atom, float], dict[Atom, int]]:
        cost: dict[Atom, float] = {p: 0.0 for p in s.atoms}
        supporter: dict[Atom, int] = {}
        remaining = [len(a.pre) for a in self.actions]
        pre_sum = [0.0] * len(self.actions)
        heap: list[tuple[float, str, int]] = []

        def fire(i: int) -> None:
            heapq.heappush(heap, (1.0 + pre_sum[i], self.actions[i].display_name, i))

        for i, a in enumerate(self.actions):
            if remaining[i] == 0:
                fire(i)
        settled: set[Atom] = set()
        frontier = [(0.0, p) for p in s.atoms]
        # settle initial atoms first
        for _, p in frontier:
            settled.add(p)
            for i in self._consumers.get(p, ()):
                remaining[i] -= 1
                if remaining[i] == 0:
                    fire(i)
        while heap:
            c, _, i = heapq.heappop(heap)
            for q in self.actions[i].add:
                if q in settled:
                    continue
                settled.add(q)
                cost[q] = c
                supporter[q] = i
                for j in self._consumers.get(q, ()):
                    pre_sum[j] += c
                    remaining[j] -= 1
                    if remaining[j] == 0:
                        fire(j)
        return cost, supporter

    def h_add(self, s: State) -> float:
        cost, _ = self.costs(s)
        total = 0.0
        for g in self.goal:
            if g not in cost:
                return INF
            total += cost[g]
        return total

    def relaxed_plan(self, s: State) -> list[GroundAction] | None:
        cost, supporter = self.costs(s)
        if any(g not in cost for g in self.goal):
            return None
        chosen: set[int] = set()
        agenda = [g for g in self.goal if cost[g] > 0]
        done: set[Atom] = set()
        while agenda:
            q = agenda.pop()
            if q in done or cost[q] == 0:
                continue
            done.add(q)
            i = supporter[q]
            if i in chosen:
                continue
            chosen.add(i)
            agenda.extend(p for p in self.actions[i].pre if cost[p] > 0)
        return sorted((self.actions[i] for i in chosen), key=lambda a: a.display_name)

    def h_ff(self, s: State) -> float:
        plan = self.relaxed_plan(s)
        return INF if plan is None else float(len(plan))

    def goal_count(self, s: State) -> float:
        return float(len(self.goal - s.atoms))

    def __call__(self, kind: HeuristicKind | str, s: State) -> float:
        kind = HeuristicKind(kind)
        if kind is HeuristicKind.GOAL_COUNT:
            return self.goal_count(s)
        if kind is HeuristicKind.H_ADD:
            return self.h_add(s)
        return self.h_ff(s)


def heuristic_value(kind: HeuristicKind | str, s: State, goal: Iterable[Atom], problem: ProblemInstance) -> float:
    """One-off evaluation; build a :class:`RelaxedHeuristic` for repeated use."""
    return RelaxedHeuristic(problem, goal)(kind, s)
