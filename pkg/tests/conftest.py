import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from queryplan.data import builtin_problem, domain_text  # noqa: E402
from queryplan.pddl import parse_pddl  # noqa: E402


@pytest.fixture
def bw3():
    # a on b, b and c on the table; goal on(b,c)
    return builtin_problem("blocksworld-3")


@pytest.fixture
def bw8():
    return builtin_problem("blocksworld-8")


@pytest.fixture
def grippers():
    return builtin_problem("grippers-1")


@pytest.fixture
def logistics():
    return builtin_problem("logistics-1")


def bw_problem(init: str, goal: str, objects: str = "a b c") -> object:
    text = f"(define (problem t) (:domain blocksworld-4ops) (:objects {objects}) (:init {init}) (:goal (and {goal})))"
    return parse_pddl(domain_text("blocksworld"), text)


@pytest.fixture
def make_bw():
    return bw_problem
