"""Deterministic stand-in for an OpenAI-compatible endpoint.

The mock reads the prompts it receives, recovers states and goals from any
PDDL-style atoms in them, and answers with breadth-first-search decisions,
optionally corrupted at a seeded rate. Translations echo the predicates, so
translated prompts stay machine-readable. Plug it into
:class:`~queryplan.llm.client.ChatClient` through ``transport=mock.transport()``.
"""

from __future__ import annotations

import hashlib
import json
import re
from typing import Iterable

import httpx

from ..pddl import Atom, ProblemInstance, State, parse_pddl, satisfies_goal
from ..statespace import shortest_plan

_ATOM_RE = re.compile(r"([a-z][\w-]*)\(([^()]*)\)")
_LABELS = ("Error Feedback:", "Number of Actions:", "History:", "States Visited:", "Starting State:",
           "Current State:", "Valid Actions:", "Goal State:")


def _atoms(text: str) -> tuple[frozenset[Atom], dict[str, str]]:
    atoms, types = set(), {}
    for name, inner in _ATOM_RE.findall(text):
        args = []
        for part in filter(None, (p.strip() for p in inner.split(","))):
            obj, _, typ = part.partition(":")
            args.append(obj.strip())
            types[obj.strip()] = typ.strip() or "default"
        atoms.add(Atom(name, tuple(args)))
    return frozenset(atoms), types


def _section(user: str, label: str) -> str | None:
    """Body of the last ``label`` section, up to the next known label."""
    lines = user.splitlines()
    start = None
    for i, line in enumerate(lines):
        if line.startswith(label):
            start = i
    if start is None:
        return None
    body = [lines[start][len(label):]]
    for line in lines[start + 1:]:
        if any(line.startswith(lab) for lab in _LABELS):
            break
        body.append(line)
    return "\n".join(body).strip()


class MockChatModel:
    """Answers chat requests for one PDDL domain.

    ``error_rate`` is the chance (decided by hashing the request with
    ``seed``) that a decision is corrupted; ``fail_statuses`` lists HTTP
    status codes to return, in order, before serving normally.
    """

    def __init__(self, domain_text: str, seed: int = 0, error_rate: float = 0.0,
                 fail_statuses: Iterable[int] = ()):
        self.domain_text = domain_text
        self.seed = seed
        self.error_rate = error_rate
        self.fail_statuses = list(fail_statuses)
        self.requests = 0
        self._problems: dict[tuple, ProblemInstance] = {}
        self._plans: dict[tuple[str, frozenset[Atom]], list | None] = {}

    # -- HTTP surface --------------------------------------------------------

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self.handle)

    def handle(self, request: httpx.Request) -> httpx.Response:
        self.requests += 1
        if self.fail_statuses:
            return httpx.Response(self.fail_statuses.pop(0), json={"error": {"message": "injected failure"}})
        body = json.loads(request.content)
        system = body["messages"][0]["content"]
        user = body["messages"][1]["content"]
        text = self.respond(system, user)
        usage = {"prompt_tokens": max(1, (len(system) + len(user)) // 4), "completion_tokens": max(1, len(text) // 4)}
        return httpx.Response(200, json={
            "id": "mock", "object": "chat.completion", "model": body.get("model", "mock"),
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
            "usage": usage,
        })

    # -- decisions -----------------------------------------------------------

    def _u(self, user: str, salt: str = "") -> float:
        h = hashlib.sha256(f"{self.seed}|{salt}|{user}".encode()).hexdigest()
        return int(h[:12], 16) / 16 ** 12

    def _problem(self, types: dict[str, str]) -> ProblemInstance:
        key = tuple(sorted(types.items()))
        if key not in self._problems:
            typed = any(t != "default" for t in types.values())
            objs = " ".join(f"{o} - {t}" if typed else o for o, t in sorted(types.items()))
            dom = re.search(r"\(domain\s+([^\s)]+)", self.domain_text).group(1)
            text = f"(define (problem mock) (:domain {dom}) (:objects {objs}) (:init) (:goal (and)))"
            self._problems[key] = parse_pddl(self.domain_text, text)
        return self._problems[key]

    def _plan(self, p: ProblemInstance, s: State, goal: frozenset[Atom]):
        key = (s.key, goal)
        if key not in self._plans:
            self._plans[key] = shortest_plan(p, s, goal)
        return self._plans[key]

    def _state_goal(self, user: str, label: str):
        s_atoms, s_types = _atoms(_section(user, label) or "")
        g_atoms, g_types = _atoms(_section(user, "Goal State:") or "")
        p = self._problem({**s_types, **g_types})
        return p, State(s_atoms), g_atoms

    def respond(self, system: str, user: str) -> str:
        head = system.splitlines()[0] if system else ""
        if head.startswith("You are an assistant that summarizes"):
            if user.startswith("Goal:"):
                return "The goal is reached when all of these hold: " + user[len("Goal:"):].strip()
            preds = user.splitlines()[0][len("Predicates:"):].strip()
            return "The environment currently satisfies: " + preds
        if head.startswith("You must propose a sequence"):
            return self._sequence(user, cot="Think:" in system)
        if head.startswith("You will propose various options"):
            return self._propose(user)
        if head.startswith("You will evaluate"):
            return self._rate(user)
        if head.startswith("You will take one action"):
            return self._step(user)
        if head.startswith("You will choose a previously visited state"):
            return self._select(user)
        return "I am not sure what to do."

    def _sequence(self, user: str, cot: bool) -> str:
        p, s, goal = self._state_goal(user, "Starting State:")
        plan = self._plan(p, s, goal) or []
        u = self._u(user)
        if u < self.error_rate / 4:
            return "Think: I need to move some blocks around first."  # no marker line
        if u < self.error_rate and plan:
            if len(plan) > 2 and self._u(user, "kind") < 0.5:
                plan = plan[:1] + plan[2:]  # skipped step, usually invalid
            else:
                plan = plan[:-1]  # stops short of the goal
        names = ", ".join(a.display_name for a in plan) or "none"
        think = "Think: follow the shortest route to the goal.\n" if cot else ""
        return f"Reflect: nothing to add.\n{think}Action Sequence: {names}"

    def _propose(self, user: str) -> str:
        p, s, goal = self._state_goal(user, "Current State:")
        k = int(re.search(r"Number of Actions:\s*(\d+)", user).group(1))
        valid = [line[2:].strip() for line in (_section(user, "Valid Actions:") or "").splitlines() if line.startswith("- ")]
        scored = []
        for name in valid:
            a = p.action_index.get(_key(name))
            if a is None:
                continue
            nxt = State((s.atoms - a.delete) | a.add)
            plan = self._plan(p, nxt, goal)
            scored.append((len(plan) if plan is not None else 10 ** 9, name))
        scored.sort()
        picks = [n for _, n in scored]
        if self._u(user) < self.error_rate:
            picks = picks[::-1]
        return "Think: these actions look most promising.\nActions: " + ", ".join(picks[:k])

    def _rate(self, user: str) -> str:
        p, s, goal = self._state_goal(user, "Current State:")
        plan = self._plan(p, s, goal)
        label = "impossible" if plan is None else ("sure" if len(plan) <= 2 else "maybe")
        if self._u(user) < self.error_rate:
            label = ("sure", "maybe", "impossible")[int(self._u(user, "label") * 3)]
        return f"Think: judging by the remaining distance.\nRating: {label}"

    def _step(self, user: str) -> str:
        p, s, goal = self._state_goal(user, "Current State:")
        plan = self._plan(p, s, goal)
        if not plan:
            return "Think: nothing left to do."
        name = plan[0].display_name
        if self._u(user) < self.error_rate:
            valid = [line[2:].strip() for line in (_section(user, "Valid Actions:") or "").splitlines() if line.startswith("- ")]
            if valid:
                name = valid[int(self._u(user, "pick") * len(valid))]
        return f"Think: the next step of a shortest plan.\nAction: {name}"

    def _select(self, user: str) -> str:
        g_atoms, g_types = _atoms(_section(user, "Goal State:") or "")
        visited = _section(user, "States Visited:") or ""
        best = None
        for line in visited.splitlines():
            m = re.match(r"State (\d+): (.*)", line)
            if not m:
                continue
            atoms, types = _atoms(m.group(2))
            p = self._problem({**types, **g_types})
            s = State(atoms)
            if satisfies_goal(s, g_atoms):
                continue
            plan = self._plan(p, s, g_atoms)
            if plan is not None and (best is None or len(plan) < best[0]):
                best = (len(plan), int(m.group(1)), plan[0].display_name)
        if best is None:
            return "Think: no state looks promising."
        return f"Think: state {best[1]} is closest to the goal.\nQuery: {best[1]}, {best[2]}"


def _key(name: str):
    from ..pddl import normalize_action_text

    return normalize_action_text(name)
