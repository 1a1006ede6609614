"""Prompt assembly.

The system text is a checked-in template with the world context substituted
in. The user text is the "provided instance": states, valid actions, goal,
history and optional error feedback, laid out with fixed labels.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from string import Template
from typing import Any, Mapping, Sequence

PROMPT_KINDS = (
    "boomerang_plan",
    "toi_propose",
    "toi_evaluate",
    "react_step",
    "react_select",
    "io",
    "io_cot",
    "io_p",
    "io_cot_p",
    "reflexion",
)
IO_KINDS = ("io", "io_cot", "io_p", "io_cot_p")

# fields each kind needs beyond "context"; "feedback" is always optional
REQUIRED_FIELDS: dict[str, tuple[str, ...]] = {
    "boomerang_plan": ("history", "start", "valid_actions", "goal"),
    "toi_propose": ("k", "state", "valid_actions", "goal"),
    "toi_evaluate": ("state", "goal"),
    "react_step": ("history", "state", "valid_actions", "goal"),
    "react_select": ("history", "visited", "goal"),
    "io": ("start", "valid_actions", "goal"),
    "io_cot": ("start", "valid_actions", "goal"),
    "io_p": ("start", "valid_actions", "goal"),
    "io_cot_p": ("start", "valid_actions", "goal"),
    "reflexion": ("history", "state", "valid_actions", "goal"),
}


class MissingField(KeyError):
    def __init__(self, kind: str, name: str):
        super().__init__(f"prompt kind {kind!r} needs field {name!r}")
        self.kind = kind
        self.name = name

    def __str__(self) -> str:
        return self.args[0]


@lru_cache(maxsize=None)
def template_text(name: str) -> str:
    return resources.files("queryplan.llm.templates").joinpath(f"{name}.txt").read_text()


def system_text(name: str, context: str, examples: str | None = None) -> str:
    text = Template(template_text(name)).substitute(context=context.strip()).rstrip("\n")
    if examples:
        text += "\n\nBelow are examples of solved instances:\n" + examples.strip()
    return text


def _actions_block(actions: Sequence[str]) -> str:
    return "\n".join(f"- {a}" for a in actions)


def _feedback_line(inputs: Mapping[str, Any]) -> list[str]:
    fb = inputs.get("feedback")
    return [f"Error Feedback: {fb}"] if fb else []


def _require(kind: str, inputs: Mapping[str, Any]) -> None:
    if "context" not in inputs or not str(inputs["context"]).strip():
        raise MissingField(kind, "context")
    for name in REQUIRED_FIELDS[kind]:
        if name not in inputs or inputs[name] is None:
            raise MissingField(kind, name)


def build_prompt(kind: str, inputs: Mapping[str, Any]) -> tuple[str, str]:
    """Return ``(system_text, user_text)`` for one of :data:`PROMPT_KINDS`.

    Text fields: ``context``, ``start``/``state``, ``goal``, ``history``,
    ``visited``, ``feedback``. ``valid_actions`` is a list of display names
    and ``k`` an integer. ``examples`` optionally appends in-context examples.
    """
    if kind not in REQUIRED_FIELDS:
        raise ValueError(f"unknown prompt kind {kind!r}")
    _require(kind, inputs)
    system = system_text(kind, inputs["context"], inputs.get("examples"))
    lines = _feedback_line(inputs)
    if kind == "boomerang_plan":
        lines += [
            inputs["history"],
            "Starting State:",
            inputs["start"],
            "Valid Actions:",
            _actions_block(inputs["valid_actions"]),
            "Goal State:",
            inputs["goal"],
        ]
    elif kind == "toi_propose":
        k = int(inputs["k"])
        if k < 1:
            raise ValueError("k must be at least 1")
        lines += [
            f"Number of Actions: {k}",
            "Current State:",
            inputs["state"],
            "Valid Actions:",
            _actions_block(inputs["valid_actions"]),
            "Goal State:",
            inputs["goal"],
        ]
    elif kind == "toi_evaluate":
        lines += ["Current State:", inputs["state"], "Goal State:", inputs["goal"]]
    elif kind in ("react_step", "reflexion"):
        lines += [
            "History:",
            *([inputs["history"]] if inputs["history"] else []),
            "Current State:",
            inputs["state"],
            "Valid Actions:",
            _actions_block(inputs["valid_actions"]),
            "Goal State:",
            inputs["goal"],
        ]
    elif kind == "react_select":
        lines += [
            "History:",
            *([inputs["history"]] if inputs["history"] else []),
            "States Visited:",
            inputs["visited"],
            "Goal State:",
            inputs["goal"],
        ]
    else:  # IO family: no history, no feedback from the world
        lines = [
            "Starting State:",
            inputs["start"],
            "Valid Actions:",
            _actions_block(inputs["valid_actions"]),
            "Goal State:",
            inputs["goal"],
        ]
    return system, "\n".join(lines)


def build_translation_prompt(context: str, predicates: str | None = None, objects: str | None = None,
                             goal: str | None = None) -> tuple[str, str]:
    """State translation takes predicates and objects; goal translation takes the goal alone."""
    if goal is None and predicates is None:
        raise MissingField("translation", "predicates")
    if not context.strip():
        raise MissingField("translation", "context")
    system = system_text("translation", context)
    if goal is not None:
        return system, f"Goal: {goal}"
    if objects is None:
        raise MissingField("translation", "objects")
    return system, f"Predicates: {predicates}\nObjects: {objects}"
