"""Unmetered breadth-first exploration of a problem's state space.

These helpers sit outside the world model on purpose: they back the
oracle policy and the optimal-length oracle, neither of which is charged.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable

from .pddl import Atom, GroundAction, ProblemInstance, State


class StateCapExceeded(Exception):
    pass


def successors(s: State, ground: Iterable[GroundAction]) -> list[tuple[GroundAction, State]]:
    atoms = s.atoms
    return [(a, State((atoms - a.delete) | a.add)) for a in ground if a.pre <= atoms]


def shortest_plan(problem: ProblemInstance, start: State, goal: Iterable[Atom],
                  state_cap: int = 200_000) -> list[GroundAction] | None:
    """Breadth-first search; ``None`` when the goal is unreachable."""
    goal = frozenset(goal)
    if goal <= start.atoms:
        return []
    ground = problem.ground_actions
    parent: dict[str, tuple[str, GroundAction] | None] = {start.key: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for a, nxt in successors(s, ground):
            k = nxt.key
            if k in parent:
                continue
            parent[k] = (s.key, a)
            if goal <= nxt.atoms:
                plan = []
                while parent[k] is not None:
                    k, act = parent[k]
                    plan.append(act)
                return plan[::-1]
            if len(parent) > state_cap:
                raise StateCapExceeded(f"more than {state_cap} states explored")
            queue.append(nxt)
    return None


def distances_to_goal(problem: ProblemInstance, root: State, goal: Iterable[Atom],
                      state_cap: int = 200_000) -> dict[str, int | None]:
    """Exact goal distance for every state reachable from ``root``."""
    goal = frozenset(goal)
    ground = problem.ground_actions
    seen = {root.key: root}
    preds: dict[str, list[str]] = {root.key: []}
    queue = deque([root])
    while queue:
        s = queue.popleft()
        for _, nxt in successors(s, ground):
            k = nxt.key
            if k not in seen:
                if len(seen) >= state_cap:
                    raise StateCapExceeded(f"more than {state_cap} states explored")
                seen[k] = nxt
                preds[k] = []
                queue.append(nxt)
            preds[k].append(s.key)
    dist: dict[str, int | None] = {k: None for k in seen}
    frontier = deque(k for k, s in seen.items() if goal <= s.atoms)
    for k in frontier:
        dist[k] = 0
    while frontier:
        k = frontier.popleft()
        for p in preds[k]:
            if dist[p] is None:
                dist[p] = dist[k] + 1
                frontier.append(p)
    return dist
