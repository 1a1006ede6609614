"""STRIPS/typing subset of PDDL: parsing, grounding and exact action semantics."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

DEFAULT_TYPE = "default"
ROOT_TYPE = "object"
SUPPORTED_REQUIREMENTS = frozenset({":strips", ":typing"})
DEFAULT_GROUNDING_CAP = 10**6

_UNSUPPORTED_CONNECTIVES = {
    "or": "disjunctive conditions",
    "imply": "implications",
    "exists": "existential quantifiers",
    "forall": "universal quantifiers",
    "when": "conditional effects",
    "=": "equality constraints",
    "increase": "numeric fluents",
    "decrease": "numeric fluents",
    "assign": "numeric fluents",
}


class PDDLError(Exception):
    """Base class for problems with PDDL input."""


class ParseError(PDDLError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None, token: str | None = None):
        self.line = line
        self.col = col
        self.token = token
        where = f" at line {line}, column {col}" if line is not None else ""
        near = f" (near {token!r})" if token is not None else ""
        super().__init__(f"{message}{where}{near}")


class UnsupportedFeature(ParseError):
    """Valid PDDL that falls outside the :strips + :typing subset."""


class GroundingExplosion(PDDLError):
    pass


class UnknownAction(PDDLError):
    """Raised when text does not name any ground action of the problem."""

    def __init__(self, text: str):
        self.text = text
        super().__init__(f"unknown action '{text}'")


# --------------------------------------------------------------------------
# Core value types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PredicateSig:
    name: str
    param_types: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.param_types)


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"

    def render(self, object_types: Mapping[str, str]) -> str:
        """Prompt rendering, e.g. ``on(a:default,b:default)``."""
        args = ",".join(f"{a}:{object_types.get(a, DEFAULT_TYPE)}" for a in self.args)
        return f"{self.predicate}({args})"


def render_atoms(atoms: Iterable[Atom], object_types: Mapping[str, str] | None = None) -> str:
    """Comma separated, canonically ordered atom list."""
    ordered = sorted(atoms, key=str)
    if object_types is None:
        return ", ".join(str(a) for a in ordered)
    return ", ".join(a.render(object_types) for a in ordered)


@dataclass(frozen=True)
class State:
    atoms: frozenset[Atom]

    @classmethod
    def of(cls, atoms: Iterable[Atom]) -> "State":
        return cls(frozenset(atoms))

    @cached_property
    def key(self) -> str:
        return ";".join(sorted(str(a) for a in self.atoms))

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.atoms

    def __len__(self) -> int:
        return len(self.atoms)

    def __repr__(self) -> str:
        return f"State({{{self.key}}})"


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]  # (variable, type)
    preconditions: tuple[Atom, ...]
    add_effects: tuple[Atom, ...]
    delete_effects: tuple[Atom, ...]


@dataclass(frozen=True, eq=False)
class GroundAction:
    schema: ActionSchema
    args: tuple[str, ...]
    pre: frozenset[Atom]
    add: frozenset[Atom]
    delete: frozenset[Atom]
    display_name: str

    @property
    def name(self) -> str:
        return self.schema.name

    @property
    def binding(self) -> dict[str, str]:
        return {var: obj for (var, _), obj in zip(self.schema.params, self.args)}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroundAction):
            return NotImplemented
        return self.display_name == other.display_name

    def __hash__(self) -> int:
        return hash(self.display_name)

    def __repr__(self) -> str:
        return f"GroundAction({self.display_name})"


@dataclass(frozen=True)
class Inapplicable:
    """Outcome of applying an action whose preconditions do not hold."""

    missing: frozenset[Atom]


@dataclass
class Domain:
    name: str
    requirements: frozenset[str]
    types: dict[str, str]  # type -> parent
    constants: dict[str, str]
    predicates: dict[str, PredicateSig]
    actions: dict[str, ActionSchema]

    @property
    def typed(self) -> bool:
        return ":typing" in self.requirements

    def is_subtype(self, t: str, ancestor: str) -> bool:
        seen = set()
        while t not in seen:
            if t == ancestor:
                return True
            seen.add(t)
            if t not in self.types:
                break
            t = self.types[t]
        return ancestor == ROOT_TYPE


@dataclass
class ProblemInstance:
    name: str
    domain: Domain
    objects: dict[str, str]  # object -> type, declaration order
    init: State
    goal: frozenset[Atom]
    domain_text: str = field(default="", repr=False)
    problem_text: str = field(default="", repr=False)

    @cached_property
    def object_types(self) -> dict[str, str]:
        return {**self.domain.constants, **self.objects}

    @cached_property
    def ground_actions(self) -> list[GroundAction]:
        return ground_problem(self)

    @cached_property
    def action_index(self) -> dict[tuple[str, tuple[str, ...]], GroundAction]:
        return {(g.name, g.args): g for g in self.ground_actions}

    def with_task(self, init: State, goal: Iterable[Atom], name: str | None = None) -> "ProblemInstance":
        """Same domain and objects, new initial state and goal; reuses the grounding."""
        p = ProblemInstance(name or self.name, self.domain, self.objects, init, frozenset(goal), self.domain_text, "")
        for attr in ("object_types", "ground_actions", "action_index"):
            if attr in self.__dict__:
                p.__dict__[attr] = self.__dict__[attr]
        return p


# --------------------------------------------------------------------------
# S-expression reader
# --------------------------------------------------------------------------


class _Tok(str):
    line: int
    col: int


class _List(list):
    line: int
    col: int


_TOKEN_RE = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")


def _read_sexpr(text: str) -> _List:
    stack: list[_List] = []
    result: _List | None = None
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(text):
        tok = m.group()
        col = m.start() - line_start + 1
        if tok[0].isspace() or tok[0] == ";":
            nl = tok.count("\n")
            if nl:
                line += nl
                line_start = m.start() + tok.rfind("\n") + 1
            continue
        if result is not None:
            raise ParseError("unexpected content after top-level expression", line, col, tok)
        if tok == "(":
            lst = _List()
            lst.line, lst.col = line, col
            stack.append(lst)
        elif tok == ")":
            if not stack:
                raise ParseError("unbalanced ')'", line, col, tok)
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                result = done
        else:
            t = _Tok(tok.lower())
            t.line, t.col = line, col
            if not stack:
                raise ParseError("expected '('", line, col, tok)
            stack[-1].append(t)
    if stack:
        raise ParseError("unexpected end of input; unclosed '('", stack[-1].line, stack[-1].col)
    if result is None:
        raise ParseError("empty input", 1, 1)
    return result


def _pos(node) -> tuple[int | None, int | None]:
    return getattr(node, "line", None), getattr(node, "col", None)


def _err(message: str, node, cls=ParseError):
    line, col = _pos(node)
    token = node if isinstance(node, str) else (str(node[0]) if isinstance(node, list) and node and isinstance(node[0], str) else None)
    return cls(message, line, col, token)


def _expect_list(node, what: str) -> _List:
    if not isinstance(node, list):
        raise _err(f"expected {what}", node)
    return node


def _expect_name(node, what: str) -> str:
    if not isinstance(node, str):
        raise _err(f"expected {what}", node)
    return str(node)


def _typed_list(items: Sequence, default_type: str, allow_vars: bool) -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        item = items[i]
        name = _expect_name(item, "name in typed list")
        if name == "-":
            if i + 1 >= len(items) or not pending:
                raise _err("dangling '-' in typed list", item)
            type_node = items[i + 1]
            if isinstance(type_node, list):
                raise _err("'either' types are not supported", type_node, UnsupportedFeature)
            out.extend((p, str(type_node)) for p in pending)
            pending = []
            i += 2
            continue
        if allow_vars and not name.startswith("?"):
            raise _err("expected a variable", item)
        pending.append(name)
        i += 1
    out.extend((p, default_type) for p in pending)
    return out


# --------------------------------------------------------------------------
# Domain / problem parsing
# --------------------------------------------------------------------------


def _parse_formula(node, kind: str) -> list[tuple[bool, _List]]:
    """Flatten a conjunction into (positive, atom-node) literals."""
    node = _expect_list(node, f"{kind} formula")
    if not node:
        return []
    head = node[0]
    if isinstance(head, str) and head == "and":
        out = []
        for sub in node[1:]:
            out.extend(_parse_formula(sub, kind))
        return out
    if isinstance(head, str) and head == "not":
        if len(node) != 2:
            raise _err("'not' takes exactly one argument", node)
        inner = _expect_list(node[1], "atom")
        if inner and isinstance(inner[0], str) and inner[0] in _UNSUPPORTED_CONNECTIVES:
            raise _err(f"unsupported feature: {_UNSUPPORTED_CONNECTIVES[inner[0]]}", inner, UnsupportedFeature)
        return [(False, inner)]
    if isinstance(head, str) and head in _UNSUPPORTED_CONNECTIVES:
        raise _err(f"unsupported feature: {_UNSUPPORTED_CONNECTIVES[head]}", node, UnsupportedFeature)
    return [(True, node)]


def _make_atom(node: _List, predicates: Mapping[str, PredicateSig], terms: Mapping[str, str],
               is_subtype, what: str) -> Atom:
    if not node or not isinstance(node[0], str):
        raise _err("expected predicate name", node)
    pred = str(node[0])
    if pred not in predicates:
        raise _err(f"undeclared predicate '{pred}' in {what}", node[0])
    sig = predicates[pred]
    args = []
    for a in node[1:]:
        arg = _expect_name(a, "term")
        if arg not in terms:
            kind = "variable" if arg.startswith("?") else "object"
            raise _err(f"undeclared {kind} '{arg}' in {what}", a)
        args.append(arg)
    if len(args) != sig.arity:
        raise _err(f"predicate '{pred}' expects {sig.arity} argument(s), got {len(args)}", node)
    for a, expected in zip(args, sig.param_types):
        if not is_subtype(terms[a], expected):
            raise _err(f"'{a}' of type {terms[a]} does not conform to {expected} in {pred}", node)
    return Atom(pred, tuple(args))


def parse_domain(text: str) -> Domain:
    root = _read_sexpr(text)
    if len(root) < 2 or root[0] != "define":
        raise _err("expected (define (domain ...))", root)
    header = _expect_list(root[1], "(domain <name>)")
    if len(header) != 2 or header[0] != "domain":
        raise _err("expected (domain <name>)", header)
    name = _expect_name(header[1], "domain name")

    requirements: set[str] = {":strips"}
    types: dict[str, str] = {}
    constants: dict[str, str] = {}
    predicates: dict[str, PredicateSig] = {}
    raw_actions: list[_List] = []
    sections = root[2:]

    for sec in sections:
        sec = _expect_list(sec, "domain section")
        if not sec or not isinstance(sec[0], str):
            raise _err("expected section keyword", sec)
        if sec[0] == ":requirements":
            reqs = {str(_expect_name(r, "requirement")) for r in sec[1:]}
            for r, node in zip(sec[1:], sec[1:]):
                if str(r) not in SUPPORTED_REQUIREMENTS:
                    raise _err(f"unsupported requirement {r}", node, UnsupportedFeature)
            requirements |= reqs
    typed = ":typing" in requirements
    default_type = ROOT_TYPE if typed else DEFAULT_TYPE

    def is_subtype(t: str, ancestor: str) -> bool:
        seen = set()
        while t not in seen:
            if t == ancestor:
                return True
            seen.add(t)
            if t not in types:
                break
            t = types[t]
        return ancestor == ROOT_TYPE

    for sec in sections:
        key = sec[0]
        if key == ":requirements":
            continue
        if key == ":types":
            if not typed:
                raise _err(":types requires :typing", sec)
            for t, parent in _typed_list(sec[1:], ROOT_TYPE, allow_vars=False):
                types[t] = parent
        elif key == ":constants":
            for c, t in _typed_list(sec[1:], default_type, allow_vars=False):
                constants[c] = t
        elif key == ":predicates":
            for p in sec[1:]:
                p = _expect_list(p, "predicate declaration")
                pname = _expect_name(p[0] if p else p, "predicate name")
                if pname in predicates:
                    raise _err(f"duplicate predicate '{pname}'", p[0])
                params = _typed_list(p[1:], default_type, allow_vars=True)
                predicates[pname] = PredicateSig(pname, tuple(t for _, t in params))
        elif key == ":action":
            raw_actions.append(sec)
        elif key in (":functions", ":derived", ":durative-action", ":axiom"):
            raise _err(f"unsupported section {key}", sec[0], UnsupportedFeature)
        else:
            raise _err(f"unknown domain section {key}", sec[0])

    known_types = {ROOT_TYPE, DEFAULT_TYPE, *types, *types.values()}
    for sig in predicates.values():
        for t in sig.param_types:
            if t not in known_types:
                raise ParseError(f"undeclared type '{t}' in predicate '{sig.name}'")

    actions: dict[str, ActionSchema] = {}
    for sec in raw_actions:
        schema = _parse_action(sec, predicates, constants, default_type, known_types, is_subtype)
        if schema.name in actions:
            raise _err(f"duplicate action '{schema.name}'", sec)
        actions[schema.name] = schema
    return Domain(name, frozenset(requirements), types, constants, predicates, actions)


def _parse_action(sec: _List, predicates, constants, default_type, known_types, is_subtype) -> ActionSchema:
    if len(sec) < 2:
        raise _err("action needs a name", sec)
    name = _expect_name(sec[1], "action name")
    fields: dict[str, object] = {}
    i = 2
    while i < len(sec):
        k = _expect_name(sec[i], "action keyword")
        if k not in (":parameters", ":precondition", ":effect"):
            raise _err(f"unknown action keyword {k}", sec[i])
        if i + 1 >= len(sec):
            raise _err(f"missing value for {k}", sec[i])
        fields[k] = sec[i + 1]
        i += 2
    params = _typed_list(_expect_list(fields.get(":parameters", _List()), "parameter list"), default_type, allow_vars=True)
    for _, t in params:
        if t not in known_types:
            raise _err(f"undeclared type '{t}' in action '{name}'", sec[1])
    terms = {**constants, **dict(params)}
    what = f"action '{name}'"
    pre: list[Atom] = []
    if ":precondition" in fields:
        for positive, node in _parse_formula(fields[":precondition"], "precondition"):
            if not positive:
                raise _err("unsupported feature: negative preconditions", node, UnsupportedFeature)
            pre.append(_make_atom(node, predicates, terms, is_subtype, what))
    add: list[Atom] = []
    delete: list[Atom] = []
    if ":effect" in fields:
        for positive, node in _parse_formula(fields[":effect"], "effect"):
            (add if positive else delete).append(_make_atom(node, predicates, terms, is_subtype, what))
    return ActionSchema(name, tuple(params), tuple(pre), tuple(add), tuple(delete))


def parse_problem(text: str, domain: Domain) -> tuple[str, dict[str, str], State, frozenset[Atom]]:
    root = _read_sexpr(text)
    if len(root) < 2 or root[0] != "define":
        raise _err("expected (define (problem ...))", root)
    header = _expect_list(root[1], "(problem <name>)")
    if len(header) != 2 or header[0] != "problem":
        raise _err("expected (problem <name>)", header)
    name = _expect_name(header[1], "problem name")
    default_type = ROOT_TYPE if domain.typed else DEFAULT_TYPE
    objects: dict[str, str] = {}
    init_nodes: list = []
    goal_node = None
    for sec in root[2:]:
        sec = _expect_list(sec, "problem section")
        key = sec[0] if sec else None
        if key == ":domain":
            dname = _expect_name(sec[1], "domain name") if len(sec) > 1 else ""
            if dname != domain.name:
                raise _err(f"problem is for domain '{dname}', not '{domain.name}'", sec[1] if len(sec) > 1 else sec)
        elif key == ":requirements":
            for r in sec[1:]:
                if str(r) not in SUPPORTED_REQUIREMENTS:
                    raise _err(f"unsupported requirement {r}", r, UnsupportedFeature)
        elif key == ":objects":
            for o, t in _typed_list(sec[1:], default_type, allow_vars=False):
                if t not in domain.types and t not in (ROOT_TYPE, DEFAULT_TYPE) and t not in domain.types.values():
                    raise _err(f"undeclared type '{t}' for object '{o}'", sec)
                objects[o] = t
        elif key == ":init":
            init_nodes = list(sec[1:])
        elif key == ":goal":
            if len(sec) != 2:
                raise _err(":goal takes exactly one formula", sec)
            goal_node = sec[1]
        elif key in (":metric", ":constraints"):
            raise _err(f"unsupported section {key}", sec, UnsupportedFeature)
        else:
            raise _err(f"unknown problem section {key}", sec)
    if goal_node is None:
        raise _err("problem has no :goal", root)
    terms = {**domain.constants, **objects}
    init_atoms = []
    for node in init_nodes:
        node = _expect_list(node, "init atom")
        if node and node[0] in ("not", "="):
            raise _err("only positive atoms allowed in :init", node, UnsupportedFeature)
        init_atoms.append(_make_atom(node, domain.predicates, terms, domain.is_subtype, ":init"))
    goal = []
    for positive, node in _parse_formula(goal_node, "goal"):
        if not positive:
            raise _err("unsupported feature: negative goals", node, UnsupportedFeature)
        goal.append(_make_atom(node, domain.predicates, terms, domain.is_subtype, ":goal"))
    return name, objects, State.of(init_atoms), frozenset(goal)


def parse_pddl(domain_text: str, problem_text: str) -> ProblemInstance:
    domain = parse_domain(domain_text)
    name, objects, init, goal = parse_problem(problem_text, domain)
    return ProblemInstance(name, domain, objects, init, goal, domain_text, problem_text)


def load_problem(domain_path: str | Path, problem_path: str | Path) -> ProblemInstance:
    return parse_pddl(Path(domain_path).read_text(), Path(problem_path).read_text())


# --------------------------------------------------------------------------
# Grounding and semantics
# --------------------------------------------------------------------------


def _substitute(templates: Iterable[Atom], binding: Mapping[str, str]) -> frozenset[Atom]:
    return frozenset(Atom(t.predicate, tuple(binding.get(a, a) for a in t.args)) for t in templates)


def ground_problem(p: ProblemInstance, cap: int = DEFAULT_GROUNDING_CAP) -> list[GroundAction]:
    """All type-consistent instantiations, sorted by display name."""
    domain = p.domain
    types = p.object_types
    per_schema = []
    total = 0
    for schema in domain.actions.values():
        choices = [[o for o, t in types.items() if domain.is_subtype(t, ptype)] for _, ptype in schema.params]
        count = 1
        for c in choices:
            count *= len(c)
        total += count
        if total > cap:
            raise GroundingExplosion(f"grounding would produce more than {cap} actions")
        per_schema.append((schema, choices))
    out = []
    for schema, choices in per_schema:
        variables = [v for v, _ in schema.params]
        for combo in itertools.product(*choices):
            binding = dict(zip(variables, combo))
            display = f"{schema.name}({','.join(f'{o}:{types[o]}' for o in combo)})"
            out.append(GroundAction(
                schema, tuple(combo),
                _substitute(schema.preconditions, binding),
                _substitute(schema.add_effects, binding),
                _substitute(schema.delete_effects, binding),
                display,
            ))
    out.sort(key=lambda g: g.display_name)
    return out


def apply_action(s: State, a: GroundAction) -> State | Inapplicable:
    if not a.pre <= s.atoms:
        return Inapplicable(a.pre - s.atoms)
    return State((s.atoms - a.delete) | a.add)


def is_applicable(s: State, a: GroundAction) -> bool:
    return a.pre <= s.atoms


def applicable_actions(s: State, ground: Iterable[GroundAction]) -> list[GroundAction]:
    return [a for a in ground if a.pre <= s.atoms]


def satisfies_goal(s: State, goal: Iterable[Atom]) -> bool:
    return frozenset(goal) <= s.atoms


_ACTION_RE = re.compile(r"^([^\s(),]+)\s*\(([^()]*)\)$")


def _split_typed(text: str) -> tuple[str, tuple[str, ...], tuple[str | None, ...]] | None:
    t = text.strip().strip("`'\"").strip().rstrip(".").strip()
    t = re.sub(r"^[-*\d.\s]+(?=[A-Za-z])", "", t)  # list bullets such as "- " or "3. "
    m = _ACTION_RE.match(t)
    if m:
        name, inner = m.group(1), m.group(2)
        parts = [x.strip() for x in inner.split(",")] if inner.strip() else []
    elif t.startswith("(") and t.endswith(")") and "(" not in t[1:-1] and ")" not in t[1:-1]:
        words = t[1:-1].split()
        if not words:
            return None
        name, parts = words[0], words[1:]
    else:
        return None
    args, types = [], []
    for part in parts:
        obj, sep, typ = (x.strip() for x in part.partition(":"))
        if not obj or any(c.isspace() for c in obj) or (sep and (not typ or any(c.isspace() for c in typ))):
            return None
        args.append(obj.lower())
        types.append(typ.lower() if sep else None)
    return name.strip().lower(), tuple(args), tuple(types)


def normalize_action_text(text: str) -> tuple[str, tuple[str, ...]] | None:
    """``(name, args)`` of an action written in display or PDDL form, ignoring type tags."""
    split = _split_typed(text)
    return None if split is None else split[:2]


def _types_agree(g: GroundAction, types: tuple[str | None, ...]) -> bool:
    shown = g.display_name[g.display_name.index("(") + 1:-1]
    declared = [p.partition(":")[2] for p in shown.split(",")] if shown else []
    return all(t is None or t == d for t, d in zip(types, declared))


def parse_action_string(text: str, ground_set: Sequence[GroundAction] | Mapping) -> GroundAction:
    """Match free text such as ``stack(a:default,b:default)`` or ``pick-up(a)``.

    Type tags are optional, but a tag that disagrees with the object's type is rejected.
    """
    split = _split_typed(text)
    if split is not None:
        name, args, types = split
        hit = None
        if isinstance(ground_set, Mapping):
            hit = ground_set.get((name, args))
        else:
            hit = next((g for g in ground_set if g.name == name and g.args == args), None)
        if hit is not None and _types_agree(hit, types):
            return hit
    raise UnknownAction(text.strip())
