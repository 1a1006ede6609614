"""Metered world-model oracle with a query cache and lazy plan verification."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .pddl import (
    Atom,
    GroundAction,
    Inapplicable,
    ProblemInstance,
    State,
    apply_action,
    render_atoms,
    satisfies_goal,
)

DEFAULT_BUDGET = 20


class BudgetExhausted(Exception):
    """The run has spent its world-model query budget."""


class ErrorKind(str, enum.Enum):
    INVALID_ACTION = "InvalidAction"
    UNKNOWN_ACTION = "UnknownAction"
    GOAL_NOT_REACHED = "GoalNotReached"


@dataclass(frozen=True)
class ErrorFeedback:
    kind: ErrorKind
    action_index: int | None
    detail: str


def invalid_action_feedback(action_text: str, missing: Iterable[str], index: int | None = None) -> ErrorFeedback:
    atoms = ", ".join(missing)
    if index is None:
        detail = f"invalid action {action_text}: unsatisfied precondition(s): {atoms}"
    else:
        # steps are reported 1-based to the policy
        detail = f"invalid action {action_text} at step {index + 1}: unsatisfied precondition(s): {atoms}"
    return ErrorFeedback(ErrorKind.INVALID_ACTION, index, detail)


def unknown_action_feedback(text: str, index: int | None = None) -> ErrorFeedback:
    return ErrorFeedback(ErrorKind.UNKNOWN_ACTION, index, f"unknown action '{text}'")


def goal_not_reached_feedback(missing: Iterable[str]) -> ErrorFeedback:
    detail = "plan executed fully but goal not reached; unsatisfied goal atom(s): " + ", ".join(missing)
    return ErrorFeedback(ErrorKind.GOAL_NOT_REACHED, None, detail)


@dataclass
class QueryLedger:
    """Counts unique world-model queries; ``budget=None`` means unlimited."""

    budget: int | None = DEFAULT_BUDGET
    used: int = 0
    cache_hits: int = 0

    @property
    def remaining(self) -> int | None:
        return None if self.budget is None else self.budget - self.used

    @property
    def exhausted(self) -> bool:
        return self.budget is not None and self.used >= self.budget

    def charge(self) -> None:
        if self.exhausted:
            raise BudgetExhausted(f"world model query budget of {self.budget} exhausted")
        self.used += 1


@dataclass(frozen=True)
class StepResult:
    next_state: State | None
    error: ErrorFeedback | None
    charged: bool

    @property
    def ok(self) -> bool:
        return self.next_state is not None


@dataclass
class VerificationResult:
    trajectory: list  # s0, a0, s1, a1, ..., sn
    reached_goal: bool
    error: ErrorFeedback | None
    new_queries: int
    budget_exhausted: bool = False

    @property
    def states(self) -> list[State]:
        return self.trajectory[0::2]

    @property
    def actions(self) -> list[GroundAction]:
        return self.trajectory[1::2]


@dataclass
class WorldModel:
    """Deterministic transition oracle for one planning run.

    Every cache miss costs one query, whether or not the action turns out to
    be applicable; repeats of an already evaluated (state, action) pair are free.
    """

    problem: ProblemInstance
    ledger: QueryLedger = field(default_factory=QueryLedger)
    _cache: dict[tuple[str, str], StepResult] = field(default_factory=dict, repr=False)
    _missing: dict[tuple[str, str], tuple[str, ...]] = field(default_factory=dict, repr=False)

    @classmethod
    def with_budget(cls, problem: ProblemInstance, budget: int | None = DEFAULT_BUDGET) -> "WorldModel":
        return cls(problem, QueryLedger(budget=budget))

    def render(self, atoms: Iterable[Atom]) -> str:
        return render_atoms(atoms, self.problem.object_types)

    def is_cached(self, s: State, a: GroundAction) -> bool:
        return (s.key, a.display_name) in self._cache

    def step(self, s: State, a: GroundAction) -> StepResult:
        key = (s.key, a.display_name)
        hit = self._cache.get(key)
        if hit is not None:
            self.ledger.cache_hits += 1
            return StepResult(hit.next_state, hit.error, charged=False)
        self.ledger.charge()
        outcome = apply_action(s, a)
        if isinstance(outcome, Inapplicable):
            missing = tuple(sorted(atom.render(self.problem.object_types) for atom in outcome.missing))
            self._missing[key] = missing
            result = StepResult(None, invalid_action_feedback(a.display_name, missing), charged=True)
        else:
            result = StepResult(outcome, None, charged=True)
        self._cache[key] = result
        return result

    def verify_plan(self, s0: State, plan: Sequence[GroundAction], goal: Iterable[Atom]) -> VerificationResult:
        """Roll a plan out from ``s0``, stopping at the first failure.

        The goal is tested after every transition (free of charge), so a plan
        whose prefix already reaches the goal is accepted at that prefix.
        """
        goal = frozenset(goal)
        before = self.ledger.used
        traj: list = [s0]
        s = s0
        if satisfies_goal(s, goal):
            return VerificationResult(traj, True, None, 0)
        for i, a in enumerate(plan):
            try:
                r = self.step(s, a)
            except BudgetExhausted:
                detail = f"world model query budget exhausted at step {i + 1}"
                err = ErrorFeedback(ErrorKind.INVALID_ACTION, i, detail)
                return VerificationResult(traj, False, err, self.ledger.used - before, budget_exhausted=True)
            if r.next_state is None:
                err = invalid_action_feedback(a.display_name, self._missing[(s.key, a.display_name)], i)
                return VerificationResult(traj, False, err, self.ledger.used - before)
            s = r.next_state
            traj += [a, s]
            if satisfies_goal(s, goal):
                return VerificationResult(traj, True, None, self.ledger.used - before)
        missing = sorted(atom.render(self.problem.object_types) for atom in goal - s.atoms)
        return VerificationResult(traj, False, goal_not_reached_feedback(missing), self.ledger.used - before)

    def fresh_copy(self, budget: int | None = None) -> "WorldModel":
        return WorldModel(self.problem, QueryLedger(budget=budget))
