"""Seeded Blocksworld instances and the brute-force optimal-length oracle."""

from __future__ import annotations

import random
import string
from functools import lru_cache
from math import comb, factorial
from pathlib import Path

from ..data import domain_text
from ..pddl import Atom, ProblemInstance, State, parse_pddl
from ..statespace import StateCapExceeded, shortest_plan

MIN_BLOCKS, MAX_BLOCKS = 2, 8
ORACLE_STATE_CAP = 200_000

Towers = list[list[str]]  # each tower listed bottom to top


@lru_cache(maxsize=None)
def configuration_count(n: int) -> int:
    """Number of ways to arrange n labelled blocks into towers on a table."""
    if n < 2:
        return 1
    return (2 * n - 1) * configuration_count(n - 1) - (n - 1) * (n - 2) * configuration_count(n - 2)


def random_towers(blocks: list[str], rng: random.Random) -> Towers:
    """Uniform draw over all tower arrangements of ``blocks``."""
    rest = list(blocks)
    towers: Towers = []
    while rest:
        n = len(rest)
        first, others = rest[0], rest[1:]
        # size k of the tower holding `first`: choose its k-1 companions, order them, arrange the rest
        weights = [comb(n - 1, k - 1) * factorial(k) * configuration_count(n - k) for k in range(1, n + 1)]
        k = rng.choices(range(1, n + 1), weights=weights)[0]
        members = [first] + rng.sample(others, k - 1)
        rng.shuffle(members)
        towers.append(members)
        rest = [b for b in others if b not in members]
    return towers


def towers_init(towers: Towers) -> list[str]:
    facts = ["(handempty)"]
    for t in towers:
        facts.append(f"(ontable {t[0]})")
        facts.extend(f"(on {upper} {lower})" for lower, upper in zip(t, t[1:]))
        facts.append(f"(clear {t[-1]})")
    return facts


def towers_goal(towers: Towers) -> list[str]:
    return [f"(on {upper} {lower})" for t in towers for lower, upper in zip(t, t[1:])]


def blocksworld_problem_text(name: str, blocks: list[str], init: Towers, goal: Towers) -> str:
    return (
        f"(define (problem {name})\n"
        "  (:domain blocksworld-4ops)\n"
        f"  (:objects {' '.join(blocks)})\n"
        f"  (:init {' '.join(sorted(towers_init(init)))})\n"
        f"  (:goal (and {' '.join(sorted(towers_goal(goal)))})))\n"
    )


def gen_blocksworld_text(n_blocks: int, seed: int) -> tuple[str, str]:
    """(problem name, PDDL problem text) for one seeded instance."""
    if not MIN_BLOCKS <= n_blocks <= MAX_BLOCKS:
        raise ValueError(f"n_blocks must lie in [{MIN_BLOCKS}, {MAX_BLOCKS}]")
    rng = random.Random(f"blocksworld:{n_blocks}:{seed}")
    blocks = list(string.ascii_lowercase[:n_blocks])
    init = random_towers(blocks, rng)
    goal = random_towers(blocks, rng)
    name = f"bw{n_blocks}-s{seed}"
    return name, blocksworld_problem_text(name, blocks, init, goal)


def gen_blocksworld(n_blocks: int, seed: int) -> ProblemInstance:
    """Initial and goal arrangements are independent uniform draws; the goal keeps only ``on`` facts."""
    _, text = gen_blocksworld_text(n_blocks, seed)
    return parse_pddl(domain_text("blocksworld"), text)


def write_blocksworld(n_blocks: int, count: int, seed: int, out_dir: str | Path) -> list[Path]:
    """Write ``count`` instances (seeds seed, seed+1, ...) plus the domain file."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "domain.pddl").write_text(domain_text("blocksworld"))
    paths = []
    for i in range(count):
        name, text = gen_blocksworld_text(n_blocks, seed + i)
        path = out / f"{name}.pddl"
        path.write_text(text)
        paths.append(path)
    return paths


def optimal_length_oracle(p: ProblemInstance, state_cap: int = ORACLE_STATE_CAP) -> int | None:
    """Exact optimal plan length by unmetered BFS; ``None`` if unknown (cap hit or unreachable)."""
    try:
        plan = shortest_plan(p, p.init, p.goal, state_cap)
    except StateCapExceeded:
        return None
    return None if plan is None else len(plan)


def _towers_state(towers: Towers) -> State:
    atoms = [Atom("handempty")]
    for t in towers:
        atoms.append(Atom("ontable", (t[0],)))
        atoms.extend(Atom("on", (upper, lower)) for lower, upper in zip(t, t[1:]))
        atoms.append(Atom("clear", (t[-1],)))
    return State.of(atoms)


def all_blocksworld_instances(n_blocks: int) -> list[ProblemInstance]:
    """Every (initial arrangement, goal arrangement) pair for n blocks, sharing one grounding."""
    blocks = list(string.ascii_lowercase[:n_blocks])
    configs = enumerate_towers(blocks)
    base = parse_pddl(domain_text("blocksworld"), blocksworld_problem_text(f"bw{n_blocks}", blocks, [blocks], [blocks]))
    base.ground_actions  # noqa: B018  (materialize once so every task shares it)
    out = []
    for i, init in enumerate(configs):
        for j, goal in enumerate(configs):
            goal_atoms = [Atom("on", (upper, lower)) for t in goal for lower, upper in zip(t, t[1:])]
            out.append(base.with_task(_towers_state(init), goal_atoms, f"bw{n_blocks}-all-{i}-{j}"))
    return out


def enumerate_towers(blocks: list[str]) -> list[Towers]:
    """All tower arrangements, in a deterministic order."""
    if not blocks:
        return [[]]
    first, rest = blocks[0], blocks[1:]
    out = []
    for arrangement in enumerate_towers(rest):
        # `first` starts a new tower or slots into any position of an existing one
        out.append([[first]] + [list(t) for t in arrangement])
        for ti, t in enumerate(arrangement):
            for pos in range(len(t) + 1):
                new = [list(x) for x in arrangement]
                new[ti] = t[:pos] + [first] + t[pos:]
                out.append(new)
    return out
