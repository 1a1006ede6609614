"""Bundled domains, problems and context blocks."""

from __future__ import annotations

from importlib import resources

DOMAINS = ("blocksworld", "grippers", "logistics")


def domain_text(name: str) -> str:
    return resources.files("queryplan.data.domains").joinpath(f"{name}.pddl").read_text()


def problem_text(name: str) -> str:
    return resources.files("queryplan.data.problems").joinpath(f"{name}.pddl").read_text()


def context_text(name: str) -> str:
    return resources.files("queryplan.data.contexts").joinpath(f"{name}.txt").read_text()


def builtin_problem(name: str):
    """Parse a bundled problem such as ``"blocksworld-3"``; the domain is the name up to the last dash."""
    from ..pddl import parse_pddl

    return parse_pddl(domain_text(name.rsplit("-", 1)[0]), problem_text(name))
