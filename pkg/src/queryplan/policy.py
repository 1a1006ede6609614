"""Decision-policy contracts consumed by the planners, plus non-LLM policies.

A policy is bound to one problem instance. Planners drive it through five
operations: ``propose_actions`` and ``evaluate_state`` (tree search),
``generate_plan`` (whole-plan generation), ``next_action`` (one step from
the current state) and ``select_query`` (a step from any visited state).
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Callable, Iterable, Mapping, Sequence, Union

from .pddl import (
    Atom,
    GroundAction,
    ProblemInstance,
    State,
    UnknownAction,
    applicable_actions,
    parse_action_string,
    render_atoms,
    satisfies_goal,
)
from .statespace import StateCapExceeded, distances_to_goal
from .world import ErrorFeedback, StepResult

MAX_POLICY_RETRIES = 3


class PolicyFailure(Exception):
    """A policy could not produce a usable decision."""


# --------------------------------------------------------------------------
# Shared value types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WorldContext:
    domain_description: str
    action_format_notes: str

    def __post_init__(self):
        if not self.domain_description.strip():
            raise ValueError("world context needs a domain description")

    @property
    def text(self) -> str:
        if not self.action_format_notes:
            return self.domain_description
        return f"{self.domain_description}\n\n{self.action_format_notes}"

    @classmethod
    def from_text(cls, text: str) -> "WorldContext":
        desc, _, notes = text.strip().partition("\n\n")
        return cls(desc.strip(), notes.strip())

    @classmethod
    def builtin(cls, name: str) -> "WorldContext":
        """One of the packaged contexts: blocksworld, grippers, logistics."""
        text = resources.files("queryplan.data.contexts").joinpath(f"{name}.txt").read_text()
        return cls.from_text(text)

    @classmethod
    def for_problem(cls, problem: ProblemInstance) -> "WorldContext":
        """Packaged context if the domain is known, else one derived from the schemas."""
        name = problem.domain.name
        for known in ("blocksworld", "grippers", "logistics"):
            if name.startswith(known):
                return cls.builtin(known)
        lines = ["The actions are formatted as follows:"]
        for schema in problem.domain.actions.values():
            args = ",".join(f"{v.lstrip('?')}:{t}" for v, t in schema.params)
            lines.append(f"- {schema.name}({args})")
        return cls(f"The {name} planning domain.", "\n".join(lines))


class RatingValue(enum.IntEnum):
    IMPOSSIBLE = 0
    MAYBE = 1
    CERTAIN = 2


_LABELS = {"impossible": RatingValue.IMPOSSIBLE, "maybe": RatingValue.MAYBE, "sure": RatingValue.CERTAIN}
_RAW = {v: k for k, v in _LABELS.items()}


@dataclass(frozen=True, order=True)
class Rating:
    value: RatingValue
    raw_label: str = field(default="", compare=False)

    @classmethod
    def of(cls, value: RatingValue) -> "Rating":
        return cls(value, _RAW[value])

    @classmethod
    def from_label(cls, label: str) -> "Rating":
        value = _LABELS.get(label.strip().lower())
        if value is None:
            raise ValueError(f"unrecognized rating label {label!r}")
        return cls(value, label.strip())

    def __str__(self) -> str:
        return self.value.name.capitalize()


IMPOSSIBLE = Rating.of(RatingValue.IMPOSSIBLE)
MAYBE = Rating.of(RatingValue.MAYBE)
CERTAIN = Rating.of(RatingValue.CERTAIN)


@dataclass(frozen=True)
class QueryExchange:
    state: State
    action: GroundAction
    result: StepResult
    state_ref: int | None = None


@dataclass(frozen=True)
class PlanAttempt:
    plan: tuple[GroundAction, ...]
    trajectory: tuple
    error: ErrorFeedback | None


@dataclass(frozen=True)
class Reflection:
    text: str


Entry = Union[QueryExchange, PlanAttempt, Reflection]


class InteractionHistory:
    """Append-only record of policy/world exchanges plus the visited states."""

    def __init__(self, s0: State | None = None):
        self._entries: list[Entry] = []
        self.visited: list[State] = []
        self._ref: dict[str, int] = {}
        self.last_state_ref = 0
        if s0 is not None:
            self.visit(s0)

    @property
    def entries(self) -> tuple[Entry, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def append(self, entry: Entry) -> None:
        self._entries.append(entry)

    def visit(self, s: State) -> int:
        """Index of ``s`` in visit order, registering it if new."""
        ref = self._ref.get(s.key)
        if ref is None:
            ref = len(self.visited)
            self._ref[s.key] = ref
            self.visited.append(s)
        self.last_state_ref = ref
        return ref

    def ref_of(self, s: State) -> int | None:
        return self._ref.get(s.key)

    def attempts(self) -> list[PlanAttempt]:
        return [e for e in self._entries if isinstance(e, PlanAttempt)]

    # -- prompt renderings -------------------------------------------------

    def render_attempts(self, object_types: Mapping[str, str], char_cap: int | None = None) -> tuple[str, bool]:
        """Previous plan attempts, oldest first; drops the oldest past ``char_cap``."""
        blocks = []
        for att in self.attempts():
            lines = []
            if att.error is not None:
                lines.append(f"Error Feedback: {att.error.detail}")
            lines.append("States Visited:")
            traj = att.trajectory
            for i in range(1, len(traj), 2):
                lines.append(f"{traj[i].display_name}: {render_atoms(traj[i + 1].atoms, object_types)}")
            blocks.append("\n".join(lines))
        truncated = False
        if char_cap is not None:
            while len(blocks) > 1 and sum(len(b) + 2 for b in blocks) > char_cap:
                blocks.pop(0)
                truncated = True
        if not blocks:
            return "States Visited:", truncated
        return "\n\n".join(blocks), truncated

    def render_exchanges(self, object_types: Mapping[str, str], with_refs: bool = False) -> str:
        lines = []
        n = 0
        for e in self._entries:
            if isinstance(e, Reflection):
                lines.append(f"Reflection: {e.text}")
                continue
            if not isinstance(e, QueryExchange):
                continue
            n += 1
            if with_refs:
                lines.append(f"Query {n}: state {e.state_ref}, {e.action.display_name}")
            else:
                lines.append(f"Action {n}: {e.action.display_name}")
            if e.result.next_state is None:
                lines.append(f"Result: error: {e.result.error.detail}")
            elif with_refs:
                lines.append(f"Result: state {self.ref_of(e.result.next_state)}")
            else:
                lines.append(f"Result: {render_atoms(e.result.next_state.atoms, object_types)}")
        return "\n".join(lines)

    def render_visited(self, object_types: Mapping[str, str]) -> str:
        return "\n".join(f"State {i}: {render_atoms(s.atoms, object_types)}" for i, s in enumerate(self.visited))


@dataclass(frozen=True)
class ProposalRequest:
    state: State
    k: int
    valid_actions: tuple[GroundAction, ...]
    feedback: str | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")


@dataclass
class PolicyStats:
    llm_calls: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    malformed_actions: int = 0

    def snapshot(self) -> "PolicyStats":
        return PolicyStats(self.llm_calls, self.prompt_tokens, self.completion_tokens, self.malformed_actions)

    def since(self, earlier: "PolicyStats") -> "PolicyStats":
        return PolicyStats(
            self.llm_calls - earlier.llm_calls,
            self.prompt_tokens - earlier.prompt_tokens,
            self.completion_tokens - earlier.completion_tokens,
            self.malformed_actions - earlier.malformed_actions,
        )


# --------------------------------------------------------------------------
# Policy base and implementations
# --------------------------------------------------------------------------


class Policy:
    """Base class; subclasses implement whichever operations they support."""

    def __init__(self, problem: ProblemInstance):
        self.problem = problem
        self.stats = PolicyStats()

    @property
    def goal(self) -> frozenset[Atom]:
        return self.problem.goal

    def valid_actions(self, s: State) -> tuple[GroundAction, ...]:
        return tuple(applicable_actions(s, self.problem.ground_actions))

    def propose_actions(self, req: ProposalRequest, ctx: WorldContext) -> list[GroundAction]:
        raise NotImplementedError

    def evaluate_state(self, s: State, goal: frozenset[Atom], ctx: WorldContext) -> Rating:
        raise NotImplementedError

    def generate_plan(self, s0: State, ctx: WorldContext, h: InteractionHistory,
                      valid_at_start: Sequence[GroundAction], style: str = "boomerang_plan") -> list[GroundAction]:
        raise NotImplementedError

    def next_action(self, s: State, ctx: WorldContext, h: InteractionHistory,
                    style: str = "react_step") -> GroundAction:
        raise NotImplementedError

    def select_query(self, ctx: WorldContext, h: InteractionHistory) -> tuple[int, GroundAction]:
        raise NotImplementedError


class OraclePolicy(Policy):
    """Breadth-first-search oracle with exact goal distances.

    Ratings: Certain within ``d_sure`` steps of the goal, Impossible when the
    goal is unreachable, Maybe otherwise.
    """

    def __init__(self, problem: ProblemInstance, d_sure: int = 2, state_cap: int = 200_000):
        super().__init__(problem)
        self.d_sure = d_sure
        self.state_cap = state_cap
        self._dist: dict[tuple[frozenset[Atom], str], int | None] = {}

    def distance(self, s: State, goal: Iterable[Atom] | None = None) -> int | None:
        goal = self.goal if goal is None else frozenset(goal)
        key = (goal, s.key)
        if key not in self._dist:
            try:
                table = distances_to_goal(self.problem, s, goal, self.state_cap)
            except StateCapExceeded as exc:
                raise PolicyFailure(str(exc)) from exc
            for k, d in table.items():
                self._dist[(goal, k)] = d
        return self._dist[key]

    def _ranked(self, s: State, actions: Iterable[GroundAction]) -> list[GroundAction]:
        def score(a: GroundAction):
            nxt = State((s.atoms - a.delete) | a.add)
            d = self.distance(nxt)
            return (d is None, d if d is not None else 0, a.display_name)

        return sorted(actions, key=score)

    def optimal_action(self, s: State) -> GroundAction:
        valid = self.valid_actions(s)
        if not valid or self.distance(s) is None:
            raise PolicyFailure("goal unreachable from this state")
        return self._ranked(s, valid)[0]

    def propose_actions(self, req, ctx):
        return self._ranked(req.state, req.valid_actions)[: req.k]

    def evaluate_state(self, s, goal, ctx):
        d = self.distance(s, goal)
        if d is None:
            return IMPOSSIBLE
        return CERTAIN if d <= self.d_sure else MAYBE

    def generate_plan(self, s0, ctx, h, valid_at_start, style="boomerang_plan"):
        plan = []
        s = s0
        while not satisfies_goal(s, self.goal):
            a = self.optimal_action(s)
            plan.append(a)
            s = State((s.atoms - a.delete) | a.add)
        return plan

    def next_action(self, s, ctx, h, style="react_step"):
        return self.optimal_action(s)

    def select_query(self, ctx, h):
        best = None
        for i, s in enumerate(h.visited):
            d = self.distance(s)
            if d is not None and d > 0 and (best is None or d < best[0]):
                best = (d, i)
        if best is None:
            raise PolicyFailure("no visited state can reach the goal")
        i = best[1]
        return i, self.optimal_action(h.visited[i])


Scripted = Union[str, GroundAction]


class ScriptedPolicy(Policy):
    """Replays recorded decisions in order; each operation has its own script.

    ``ratings`` may be a mapping from canonical state key (or atom text) to a
    rating label, a list consumed in order, or a callable ``State -> label``.
    """

    def __init__(
        self,
        problem: ProblemInstance,
        plans: Sequence[Sequence[Scripted]] = (),
        actions: Sequence[Scripted] = (),
        proposals: Sequence[Sequence[Scripted]] = (),
        ratings: Mapping[str, str] | Sequence[str] | Callable[[State], str] | None = None,
        selections: Sequence[tuple[int, Scripted]] | Callable[[InteractionHistory], tuple[int, Scripted]] = (),
        default_rating: str = "maybe",
    ):
        super().__init__(problem)
        self.plans = list(plans)
        self.actions = list(actions)
        self.proposals = list(proposals)
        self.ratings = ratings
        self.selections = selections
        self.default_rating = default_rating
        self.calls = {"plan": 0, "action": 0, "propose": 0, "rate": 0, "select": 0}

    def _resolve(self, item: Scripted) -> GroundAction:
        if isinstance(item, GroundAction):
            return item
        try:
            return parse_action_string(item, self.problem.action_index)
        except UnknownAction as exc:
            raise PolicyFailure(str(exc)) from exc

    def _next(self, script: list, op: str):
        i = self.calls[op]
        if i >= len(script):
            raise PolicyFailure(f"scripted {op} exhausted after {i} call(s)")
        self.calls[op] = i + 1
        return script[i]

    def propose_actions(self, req, ctx):
        chosen = [self._resolve(x) for x in self._next(self.proposals, "propose")]
        valid = set(req.valid_actions)
        out: list[GroundAction] = []
        for a in chosen:
            if a in valid and a not in out:
                out.append(a)
        return out[: req.k]

    def evaluate_state(self, s, goal, ctx):
        r = self.ratings
        if callable(r):
            label = r(s)
        elif isinstance(r, Mapping):
            label = r.get(s.key, self.default_rating)
        elif r is None:
            label = self.default_rating
        else:
            label = self._next(list(r), "rate")
        return Rating.from_label(label)

    def generate_plan(self, s0, ctx, h, valid_at_start, style="boomerang_plan"):
        plan = [self._resolve(x) for x in self._next(self.plans, "plan")]
        if not plan:
            raise PolicyFailure("empty plan")
        return plan

    def next_action(self, s, ctx, h, style="react_step"):
        return self._resolve(self._next(self.actions, "action"))

    def select_query(self, ctx, h):
        if callable(self.selections):
            ref, item = self.selections(h)
        else:
            ref, item = self._next(list(self.selections), "select")
        if not 0 <= ref < len(h.visited):
            raise PolicyFailure(f"state index {ref} out of range")
        return ref, self._resolve(item)


class RandomPolicy(Policy):
    """Seeded uniform choices; a floor for ablations and a fuzzer for planners."""

    def __init__(self, problem: ProblemInstance, seed: int = 0, max_plan_length: int = 8):
        super().__init__(problem)
        self.rng = random.Random(seed)
        self.max_plan_length = max_plan_length

    @cached_property
    def _ground(self) -> list[GroundAction]:
        return self.problem.ground_actions

    def propose_actions(self, req, ctx):
        valid = list(req.valid_actions)
        return self.rng.sample(valid, min(req.k, len(valid)))

    def evaluate_state(self, s, goal, ctx):
        if satisfies_goal(s, goal):
            return CERTAIN
        return Rating.of(self.rng.choice(list(RatingValue)))

    def generate_plan(self, s0, ctx, h, valid_at_start, style="boomerang_plan"):
        n = self.rng.randint(1, self.max_plan_length)
        return [self.rng.choice(self._ground) for _ in range(n)]

    def next_action(self, s, ctx, h, style="react_step"):
        return self.rng.choice(self._ground)

    def select_query(self, ctx, h):
        return self.rng.randrange(len(h.visited)), self.rng.choice(self._ground)
