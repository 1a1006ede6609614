"""Query-budgeted planning loops over a policy and a metered world model."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .pddl import GroundAction, ProblemInstance, State, applicable_actions, render_atoms, satisfies_goal
from .policy import (
    MAYBE,
    InteractionHistory,
    PlanAttempt,
    Policy,
    PolicyFailure,
    PolicyStats,
    ProposalRequest,
    QueryExchange,
    Rating,
    RatingValue,
    Reflection,
    WorldContext,
)
from .world import BudgetExhausted, ErrorKind, WorldModel

DEFAULT_STEPS = 20
DEFAULT_K = 2
DEFAULT_BEAM = 2
IO_VARIANTS = ("io", "io_cot", "io_p", "io_cot_p")


class FailureReason(str, enum.Enum):
    BUDGET_EXHAUSTED = "BudgetExhausted"
    STEP_LIMIT = "StepLimit"
    POLICY_FAILURE = "PolicyFailure"
    UNSOLVABLE = "Unsolvable"


@dataclass
class SearchNode:
    state: State
    parent: "SearchNode | None" = None
    incoming_action: GroundAction | None = None
    depth: int = 0
    rating: Rating | None = None
    serial: int = 0

    def path(self) -> list[GroundAction]:
        out = []
        node = self
        while node.parent is not None:
            out.append(node.incoming_action)
            node = node.parent
        return out[::-1]


@dataclass
class PlannerOutcome:
    success: bool
    plan: list[GroundAction] | None
    wmq_used: int
    llm_calls: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    malformed_actions: int = 0
    failure_reason: FailureReason | None = None
    failure_mode: str | None = None  # "Invalid Actions" / "Search Failure" for single-shot runs
    info: dict = field(default_factory=dict)

    @property
    def plan_length(self) -> int | None:
        return None if self.plan is None else len(self.plan)


class _Run:
    """Bookkeeping shared by every planner: stats deltas and outcome assembly."""

    def __init__(self, problem: ProblemInstance, policy: Policy | None, world: WorldModel):
        self.problem = problem
        self.policy = policy
        self.world = world
        self.start_used = world.ledger.used
        self.start_stats = policy.stats.snapshot() if policy is not None else PolicyStats()

    def outcome(self, plan: list[GroundAction] | None, reason: FailureReason | None = None, **info) -> PlannerOutcome:
        stats = self.policy.stats.since(self.start_stats) if self.policy is not None else PolicyStats()
        mode = info.pop("failure_mode", None)
        if plan is None and reason is None:
            reason = FailureReason.STEP_LIMIT
        if reason in (FailureReason.STEP_LIMIT, FailureReason.UNSOLVABLE) and self.world.ledger.exhausted:
            reason = FailureReason.BUDGET_EXHAUSTED
        return PlannerOutcome(
            success=plan is not None,
            plan=plan,
            wmq_used=self.world.ledger.used - self.start_used,
            llm_calls=stats.llm_calls,
            prompt_tokens=stats.prompt_tokens,
            completion_tokens=stats.completion_tokens,
            malformed_actions=stats.malformed_actions,
            failure_reason=None if plan is not None else reason,
            failure_mode=mode,
            info=info,
        )


def _guarded(fn):
    """Turn budget exhaustion and policy failures into failed outcomes."""

    def wrapper(problem, policy, world, *args, **kwargs):
        run = _Run(problem, policy, world)
        try:
            return fn(run, *args, **kwargs)
        except BudgetExhausted:
            return run.outcome(None, FailureReason.BUDGET_EXHAUSTED)
        except PolicyFailure as exc:
            return run.outcome(None, FailureReason.POLICY_FAILURE, error=str(exc))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    wrapper.__wrapped__ = fn
    return wrapper


def _context(problem: ProblemInstance, ctx: WorldContext | None) -> WorldContext:
    return ctx if ctx is not None else WorldContext.for_problem(problem)


# --------------------------------------------------------------------------
# Tree of Interaction: beam (BFS) and depth-first variants
# --------------------------------------------------------------------------


def update_beam(candidates: Sequence[SearchNode], evaluator: Callable[[State], Rating], b: int,
                cache: dict[str, Rating] | None = None) -> list[SearchNode]:
    """Keep the ``b`` best candidates by (rating desc, depth desc, key asc).

    Duplicate states collapse to the earliest-created node and states rated
    Impossible are dropped.
    """
    if b < 1:
        raise ValueError("beam width must be at least 1")
    cache = {} if cache is None else cache
    unique: dict[str, SearchNode] = {}
    for node in sorted(candidates, key=lambda n: n.serial):
        unique.setdefault(node.state.key, node)
    kept = []
    for key, node in unique.items():
        if key not in cache:
            cache[key] = evaluator(node.state)
        node.rating = cache[key]
        if node.rating.value > RatingValue.IMPOSSIBLE:
            kept.append(node)
    kept.sort(key=lambda n: (-n.rating.value, -n.depth, n.state.key))
    return kept[:b]


@_guarded
def run_toi_bfs(run: _Run, T: int = DEFAULT_STEPS, k: int = DEFAULT_K, b: int = DEFAULT_BEAM,
                ctx: WorldContext | None = None, on_beam: Callable[[list[SearchNode]], None] | None = None) -> PlannerOutcome:
    """Beam search where the policy proposes actions and rates states."""
    problem, policy, world = run.problem, run.policy, run.world
    if T < 1 or k < 1 or b < 1:
        raise ValueError("T, k and b must all be at least 1")
    ctx = _context(problem, ctx)
    goal = problem.goal
    serial = itertools.count()
    root = SearchNode(problem.init, serial=next(serial))
    if satisfies_goal(root.state, goal):
        return run.outcome([])
    ratings: dict[str, Rating] = {}
    evaluator = lambda s: policy.evaluate_state(s, goal, ctx)  # noqa: E731
    beam = [root]
    for _ in range(T):
        expansions = []
        for node in beam:
            valid = tuple(applicable_actions(node.state, problem.ground_actions))
            if not valid:
                continue
            for a in policy.propose_actions(ProposalRequest(node.state, k, valid), ctx):
                r = world.step(node.state, a)
                if r.next_state is None:
                    continue
                child = SearchNode(r.next_state, node, a, node.depth + 1, serial=next(serial))
                if satisfies_goal(child.state, goal):
                    return run.outcome(child.path())
                expansions.append(child)
        beam = update_beam(beam + expansions, evaluator, b, ratings)
        if on_beam is not None:
            on_beam(beam)
        if not beam:
            return run.outcome(None, FailureReason.UNSOLVABLE)
    return run.outcome(None, FailureReason.STEP_LIMIT)


@_guarded
def run_toi_dfs(run: _Run, T: int = DEFAULT_STEPS, k: int = DEFAULT_K, v_min: Rating = MAYBE,
                ctx: WorldContext | None = None, on_expand: Callable[[SearchNode], None] | None = None) -> PlannerOutcome:
    """Depth-first search that only keeps children rated at least ``v_min``."""
    problem, policy, world = run.problem, run.policy, run.world
    if T < 1 or k < 1:
        raise ValueError("T and k must be at least 1")
    ctx = _context(problem, ctx)
    goal = problem.goal
    serial = itertools.count()
    root = SearchNode(problem.init, serial=next(serial))
    if satisfies_goal(root.state, goal):
        return run.outcome([])
    stack = [root]
    visited = {root.state.key}
    for _ in range(T):
        if not stack:
            return run.outcome(None, FailureReason.UNSOLVABLE)
        node = stack.pop()
        if on_expand is not None:
            on_expand(node)
        valid = tuple(applicable_actions(node.state, problem.ground_actions))
        if not valid:
            continue
        children = []
        for a in policy.propose_actions(ProposalRequest(node.state, k, valid), ctx):
            r = world.step(node.state, a)
            if r.next_state is None or r.next_state.key in visited:
                continue
            visited.add(r.next_state.key)
            child = SearchNode(r.next_state, node, a, node.depth + 1, serial=next(serial))
            if satisfies_goal(child.state, goal):
                return run.outcome(child.path())
            child.rating = policy.evaluate_state(child.state, goal, ctx)
            if child.rating.value >= v_min.value:
                children.append(child)
        # best child ends on top of the stack; among equals the first proposed does
        children.sort(key=lambda n: (n.rating.value, -n.serial))
        stack.extend(children)
    if not stack:
        return run.outcome(None, FailureReason.UNSOLVABLE)
    return run.outcome(None, FailureReason.STEP_LIMIT)


# --------------------------------------------------------------------------
# Generative planning
# --------------------------------------------------------------------------


@_guarded
def run_boomerang(run: _Run, T: int = DEFAULT_STEPS, ctx: WorldContext | None = None) -> PlannerOutcome:
    """Propose whole plans, verify them lazily, feed the failure back."""
    problem, policy, world = run.problem, run.policy, run.world
    if T < 1:
        raise ValueError("T must be at least 1")
    ctx = _context(problem, ctx)
    s0, goal = problem.init, problem.goal
    if satisfies_goal(s0, goal):
        return run.outcome([], iterations=0)
    history = InteractionHistory(s0)
    valid = tuple(applicable_actions(s0, problem.ground_actions))
    for it in range(1, T + 1):
        plan = policy.generate_plan(s0, ctx, history, valid)
        if not plan:
            raise PolicyFailure("empty plan")
        res = world.verify_plan(s0, plan, goal)
        if res.reached_goal:
            return run.outcome(list(res.actions), iterations=it)
        if res.budget_exhausted:
            return run.outcome(None, FailureReason.BUDGET_EXHAUSTED, iterations=it)
        history.append(PlanAttempt(tuple(plan), tuple(res.trajectory), res.error))
    return run.outcome(None, FailureReason.STEP_LIMIT, iterations=T)


@_guarded
def run_io(run: _Run, variant: str = "io", ctx: WorldContext | None = None) -> PlannerOutcome:
    """One plan, one verification, no feedback."""
    if variant not in IO_VARIANTS:
        raise ValueError(f"unknown IO variant {variant!r}")
    problem, policy, world = run.problem, run.policy, run.world
    ctx = _context(problem, ctx)
    s0, goal = problem.init, problem.goal
    if satisfies_goal(s0, goal):
        return run.outcome([])
    valid = tuple(applicable_actions(s0, problem.ground_actions))
    plan = policy.generate_plan(s0, ctx, InteractionHistory(s0), valid, style=variant)
    if not plan:
        raise PolicyFailure("empty plan")
    res = world.verify_plan(s0, plan, goal)
    if res.reached_goal:
        return run.outcome(list(res.actions))
    if res.budget_exhausted:
        return run.outcome(None, FailureReason.BUDGET_EXHAUSTED)
    mode = "Invalid Actions" if res.error.kind == ErrorKind.INVALID_ACTION else "Search Failure"
    return run.outcome(None, FailureReason.STEP_LIMIT, failure_mode=mode, error=res.error.detail)


# --------------------------------------------------------------------------
# Single-step policies
# --------------------------------------------------------------------------


@_guarded
def run_react(run: _Run, T: int = DEFAULT_STEPS, ctx: WorldContext | None = None) -> PlannerOutcome:
    """Act from the current state only; invalid actions leave the agent in place."""
    problem, policy, world = run.problem, run.policy, run.world
    ctx = _context(problem, ctx)
    s, goal = problem.init, problem.goal
    if satisfies_goal(s, goal):
        return run.outcome([])
    history = InteractionHistory(s)
    plan: list[GroundAction] = []
    for _ in range(T):
        a = policy.next_action(s, ctx, history)
        r = world.step(s, a)
        history.append(QueryExchange(s, a, r, history.ref_of(s)))
        if r.next_state is not None:
            s = r.next_state
            history.visit(s)
            plan.append(a)
            if satisfies_goal(s, goal):
                return run.outcome(plan)
    return run.outcome(None, FailureReason.STEP_LIMIT)


@_guarded
def run_react_select(run: _Run, T: int = DEFAULT_STEPS, ctx: WorldContext | None = None) -> PlannerOutcome:
    """Like ReAct, but each query may start from any previously visited state."""
    problem, policy, world = run.problem, run.policy, run.world
    ctx = _context(problem, ctx)
    s0, goal = problem.init, problem.goal
    if satisfies_goal(s0, goal):
        return run.outcome([], state_refs=[])
    history = InteractionHistory(s0)
    parent: dict[int, tuple[int, GroundAction] | None] = {0: None}
    refs: list[int] = []
    for _ in range(T):
        ref, a = policy.select_query(ctx, history)
        if not 0 <= ref < len(history.visited):
            raise PolicyFailure(f"state index {ref} out of range")
        refs.append(ref)
        s = history.visited[ref]
        r = world.step(s, a)
        history.append(QueryExchange(s, a, r, ref))
        if r.next_state is None:
            continue
        known = history.ref_of(r.next_state)
        j = history.visit(r.next_state)
        if known is None:
            parent[j] = (ref, a)
        if satisfies_goal(r.next_state, goal):
            plan = []
            while parent[j] is not None:
                j, act = parent[j]
                plan.append(act)
            return run.outcome(plan[::-1], state_refs=refs)
    return run.outcome(None, FailureReason.STEP_LIMIT, state_refs=refs)


def _cycle_text(state: State, problem: ProblemInstance) -> str:
    return ("cycling occurred: you returned to a state you had already visited in this attempt ("
            + render_atoms(state.atoms, problem.object_types)
            + "). You have been reset to the starting state; reflect on the mistake before acting.")


@_guarded
def run_reflexion(run: _Run, T: int = DEFAULT_STEPS, ctx: WorldContext | None = None) -> PlannerOutcome:
    """ReAct episodes that restart from the initial state whenever a state repeats."""
    problem, policy, world = run.problem, run.policy, run.world
    ctx = _context(problem, ctx)
    s0, goal = problem.init, problem.goal
    if satisfies_goal(s0, goal):
        return run.outcome([], resets=0)
    history = InteractionHistory(s0)
    s = s0
    plan: list[GroundAction] = []
    seen = {s0.key}
    resets = 0
    for _ in range(T):
        a = policy.next_action(s, ctx, history, style="reflexion")
        r = world.step(s, a)
        history.append(QueryExchange(s, a, r, history.ref_of(s)))
        if r.next_state is None:
            continue
        nxt = r.next_state
        history.visit(nxt)
        plan.append(a)
        if satisfies_goal(nxt, goal):
            return run.outcome(plan, resets=resets)
        if nxt.key in seen:
            history.append(Reflection(_cycle_text(nxt, problem)))
            resets += 1
            s, plan, seen = s0, [], {s0.key}
            history.visit(s0)
            continue
        seen.add(nxt.key)
        s = nxt
    return run.outcome(None, FailureReason.STEP_LIMIT, resets=resets)


PLANNERS = {
    "toi_bfs": run_toi_bfs,
    "toi_dfs": run_toi_dfs,
    "boomerang": run_boomerang,
    "react": run_react,
    "react_select": run_react_select,
    "reflexion": run_reflexion,
    "io": lambda p, pol, w, **kw: run_io(p, pol, w, variant="io", **kw),
    "io_cot": lambda p, pol, w, **kw: run_io(p, pol, w, variant="io_cot", **kw),
    "io_p": lambda p, pol, w, **kw: run_io(p, pol, w, variant="io_p", **kw),
    "io_cot_p": lambda p, pol, w, **kw: run_io(p, pol, w, variant="io_cot_p", **kw),
}


def verify_outcome(problem: ProblemInstance, outcome: PlannerOutcome) -> bool:
    """Re-check a success plan against a fresh, unlimited world model."""
    if not outcome.success:
        return False
    fresh = WorldModel.with_budget(problem, None)
    return fresh.verify_plan(problem.init, outcome.plan, problem.goal).reached_goal
