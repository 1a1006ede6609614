"""Policy backed by a chat model."""

from __future__ import annotations

from typing import Callable, Iterable, TypeVar

from ..pddl import Atom, GroundAction, ProblemInstance, State, UnknownAction, render_atoms
from ..policy import MAX_POLICY_RETRIES, InteractionHistory, Policy, PolicyFailure, ProposalRequest, WorldContext
from .client import ChatClient, ChatExchange
from .parsing import FormatError, parse_action, parse_action_sequence, parse_actions, parse_rating, parse_selection
from .prompts import IO_KINDS, build_prompt, build_translation_prompt

T = TypeVar("T")


def translate_description(client: ChatClient, atoms: Iterable[Atom], ctx: WorldContext,
                          object_types: dict[str, str], goal: bool = False, run_id: str = "") -> ChatExchange:
    """One chat call summarizing a state (or a goal) in natural language."""
    atoms = list(atoms)
    if not atoms:
        raise ValueError("nothing to translate")
    preds = render_atoms(atoms, object_types)
    if goal:
        system, user = build_translation_prompt(ctx.text, goal=preds)
    else:
        objects = ", ".join(f"{o}:{t}" for o, t in object_types.items())
        system, user = build_translation_prompt(ctx.text, predicates=preds, objects=objects)
    return client.complete(system, user, run_id)


class LLMPolicy(Policy):
    """Drives every policy operation through prompts and response parsers.

    Malformed responses (no marker line, unknown actions, wrong counts) are
    retried up to ``max_retries`` times with the parser's message as error
    feedback; each one is counted in ``stats.malformed_actions``. With
    ``translate`` on, the start, goal and current states are summarized by
    the model once per canonical state; visited-state listings in histories
    always use raw predicates.
    """

    def __init__(self, problem: ProblemInstance, client: ChatClient, translate: bool = True,
                 max_retries: int = MAX_POLICY_RETRIES, history_char_cap: int | None = None, run_id: str = ""):
        super().__init__(problem)
        self.client = client
        self.translate = translate
        self.max_retries = max_retries
        self.history_char_cap = history_char_cap
        self.history_truncated = False
        self.run_id = run_id
        self._translations: dict[str, str] = {}
        self.exchanges: list[ChatExchange] = []

    # -- plumbing -----------------------------------------------------------

    def _call(self, system: str, user: str) -> str:
        ex = self.client.complete(system, user, self.run_id)
        self.exchanges.append(ex)
        self.stats.llm_calls += 1
        self.stats.prompt_tokens += ex.prompt_tokens
        self.stats.completion_tokens += ex.completion_tokens
        return ex.response

    def _raw(self, atoms: Iterable[Atom]) -> str:
        return render_atoms(atoms, self.problem.object_types)

    def _describe(self, atoms: frozenset[Atom], goal: bool = False) -> str:
        if not self.translate or not atoms:
            return self._raw(atoms)
        key = ("goal:" if goal else "state:") + State(atoms).key
        if key not in self._translations:
            ex = translate_description(self.client, atoms, self._ctx, self.problem.object_types, goal, self.run_id)
            self.exchanges.append(ex)
            self.stats.llm_calls += 1
            self.stats.prompt_tokens += ex.prompt_tokens
            self.stats.completion_tokens += ex.completion_tokens
            self._translations[key] = ex.response.strip()
        return self._translations[key]

    def _with_retries(self, kind: str, inputs: dict, parse: Callable[[str], T]) -> T:
        feedback = inputs.pop("feedback", None)
        for _ in range(self.max_retries + 1):
            system, user = build_prompt(kind, {**inputs, "feedback": feedback})
            text = self._call(system, user)
            try:
                return parse(text)
            except (FormatError, UnknownAction, ValueError) as exc:
                self.stats.malformed_actions += 1
                feedback = str(exc)
        raise PolicyFailure(f"{kind}: no usable response after {self.max_retries + 1} attempt(s); last error: {feedback}")

    def _base_inputs(self, ctx: WorldContext) -> dict:
        self._ctx = ctx
        inputs = {"context": ctx.text}
        examples = getattr(self.client.config, "examples", None)
        if examples:
            inputs["examples"] = examples
        return inputs

    # -- policy operations ----------------------------------------------------

    def propose_actions(self, req: ProposalRequest, ctx: WorldContext) -> list[GroundAction]:
        inputs = self._base_inputs(ctx)
        want = min(req.k, len(req.valid_actions))
        valid = set(req.valid_actions)

        def parse(text: str) -> list[GroundAction]:
            acts = parse_actions(text, self.problem.action_index)
            out = []
            for a in acts:
                if a not in valid:
                    raise FormatError(f"the action {a.display_name} is not one of the valid actions")
                if a not in out:
                    out.append(a)
            if len(out) < want:
                raise FormatError(f"expected {want} distinct valid action(s), got {len(out)}")
            return out[: req.k]

        inputs.update(k=req.k, state=self._describe(req.state.atoms), goal=self._describe(self.goal, goal=True),
                      valid_actions=[a.display_name for a in req.valid_actions], feedback=req.feedback)
        return self._with_retries("toi_propose", inputs, parse)

    def evaluate_state(self, s, goal, ctx):
        inputs = self._base_inputs(ctx)
        inputs.update(state=self._describe(s.atoms), goal=self._describe(frozenset(goal), goal=True))
        return self._with_retries("toi_evaluate", inputs, parse_rating)

    def generate_plan(self, s0, ctx, h, valid_at_start, style="boomerang_plan"):
        inputs = self._base_inputs(ctx)
        inputs.update(start=self._describe(s0.atoms), goal=self._describe(self.goal, goal=True),
                      valid_actions=[a.display_name for a in valid_at_start])
        if style not in IO_KINDS:
            history, truncated = h.render_attempts(self.problem.object_types, self.history_char_cap)
            self.history_truncated = self.history_truncated or truncated
            inputs["history"] = history
            style = "boomerang_plan"
        return self._with_retries(style, inputs, lambda t: parse_action_sequence(t, self.problem.action_index))

    def next_action(self, s, ctx, h: InteractionHistory, style="react_step"):
        inputs = self._base_inputs(ctx)
        inputs.update(history=h.render_exchanges(self.problem.object_types), state=self._describe(s.atoms),
                      goal=self._describe(self.goal, goal=True),
                      valid_actions=[a.display_name for a in self.valid_actions(s)])
        kind = "reflexion" if style == "reflexion" else "react_step"
        return self._with_retries(kind, inputs, lambda t: parse_action(t, self.problem.action_index))

    def select_query(self, ctx, h):
        inputs = self._base_inputs(ctx)
        inputs.update(history=h.render_exchanges(self.problem.object_types, with_refs=True),
                      visited=h.render_visited(self.problem.object_types), goal=self._describe(self.goal, goal=True))

        def parse(text: str):
            ref, a = parse_selection(text, self.problem.action_index)
            if not 0 <= ref < len(h.visited):
                raise FormatError(f"state {ref} does not exist; choose a number between 0 and {len(h.visited) - 1}")
            return ref, a

        return self._with_retries("react_select", inputs, parse)
