"""Independent reference implementations used as test oracles."""

from collections import deque


def bw_naive_apply(facts: frozenset, name: str, args: tuple):
    """Blocksworld transition written out by hand on tuples, e.g. ("on", "a", "b").

    Returns the successor fact set, or the set of missing precondition facts.
    """
    if name == "pick-up":
        (x,) = args
        pre = {("clear", x), ("ontable", x), ("handempty",)}
        add = {("holding", x)}
        dele = {("ontable", x), ("clear", x), ("handempty",)}
    elif name == "put-down":
        (x,) = args
        pre = {("holding", x)}
        add = {("clear", x), ("handempty",), ("ontable", x)}
        dele = {("holding", x)}
    elif name == "stack":
        x, y = args
        pre = {("clear", y), ("holding", x)}
        add = {("handempty",), ("clear", x), ("on", x, y)}
        dele = {("clear", y), ("holding", x)}
    elif name == "unstack":
        x, y = args
        pre = {("on", x, y), ("clear", x), ("handempty",)}
        add = {("holding", x), ("clear", y)}
        dele = {("on", x, y), ("clear", x), ("handempty",)}
    else:
        raise ValueError(name)
    missing = pre - facts
    if missing:
        return None, frozenset(missing)
    return frozenset((facts - dele) | add), None


def as_tuples(state) -> frozenset:
    return frozenset((a.predicate, *a.args) for a in state.atoms)


def bfs_distance(problem, start=None, goal=None):
    """Plain BFS over apply semantics reimplemented on tuples (Blocksworld only)."""
    start = as_tuples(start or problem.init)
    goal = frozenset((a.predicate, *a.args) for a in (problem.goal if goal is None else goal))
    objs = list(problem.objects)
    moves = [("pick-up", (x,)) for x in objs] + [("put-down", (x,)) for x in objs]
    moves += [(n, (x, y)) for n in ("stack", "unstack") for x in objs for y in objs]
    seen = {start: 0}
    q = deque([start])
    while q:
        s = q.popleft()
        if goal <= s:
            return seen[s]
        for name, args in moves:
            nxt, _ = bw_naive_apply(s, name, args)
            if nxt is not None and nxt not in seen:
                seen[nxt] = seen[s] + 1
                q.append(nxt)
    return None


def relaxed_optimum(problem, state, max_len=8):
    """Optimal delete-relaxed plan length (h+) by iterative deepening over action sets."""
    goal = problem.goal
    if goal <= state.atoms:
        return 0
    acts = problem.ground_actions
    from itertools import combinations

    for n in range(1, max_len + 1):
        for combo in combinations(acts, n):
            reach = set(state.atoms)
            changed = True
            used = set()
            while changed:
                changed = False
                for a in combo:
                    if a not in used and a.pre <= reach:
                        reach |= a.add
                        used.add(a)
                        changed = True
            if len(used) == n and goal <= reach:
                return n
    return None


def reachable_states(problem, depth):
    """Every state within ``depth`` transitions of the initial state."""
    from queryplan.pddl import Inapplicable, apply_action

    seen = {problem.init.key: problem.init}
    frontier = [problem.init]
    for _ in range(depth):
        nxt = []
        for s in frontier:
            for g in problem.ground_actions:
                out = apply_action(s, g)
                if not isinstance(out, Inapplicable) and out.key not in seen:
                    seen[out.key] = out
                    nxt.append(out)
        frontier = nxt
    return list(seen.values())
