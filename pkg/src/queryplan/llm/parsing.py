"""Total parsers for model responses.

Every function either returns a value or raises :class:`FormatError` or
:class:`~queryplan.pddl.UnknownAction`; the message is suitable as error
feedback in the next prompt. Markers are matched on the LAST line that
carries them, since reasoning text may mention a marker earlier.
"""

from __future__ import annotations

import re
from typing import Mapping, Sequence

from ..pddl import GroundAction, UnknownAction, normalize_action_text, parse_action_string
from ..policy import Rating


class FormatError(ValueError):
    pass


ParseError = (FormatError, UnknownAction)

_DECOR = "*_#>` \t"


def _marker_re(marker: str) -> re.Pattern:
    return re.compile(r"^[" + re.escape(_DECOR) + r"]*" + re.escape(marker) + r"[*_`]*\s*:[*_`]*\s*(.*)$", re.I)


def _last_marker(response: str, marker: str) -> tuple[str, list[str]] | None:
    """Text after the last ``marker:`` line plus the lines that follow it."""
    if not isinstance(response, str):
        raise FormatError("response is not text")
    pat = _marker_re(marker)
    lines = response.splitlines()
    hit = None
    for i, line in enumerate(lines):
        m = pat.match(line.strip())
        if m:
            hit = (i, m.group(1))
    if hit is None:
        return None
    i, rest = hit
    return rest.strip(), lines[i + 1:]


def _is_label(line: str) -> bool:
    return bool(re.match(r"^\s*[A-Za-z][\w ]{0,30}:\s", line)) and "(" not in line.split(":", 1)[0]


def _looks_like_actions(line: str) -> bool:
    tokens = split_actions(line)
    return bool(tokens) and all(normalize_action_text(t) is not None for t in tokens)


def _continuation(rest: str, following: list[str]) -> str:
    """Marker content, which may start on the marker line or below it and runs to a blank line.

    When the marker line already holds content, later lines are only taken
    while they read as further actions (or the line ends in a comma).
    """
    chunk = [rest] if rest else []
    for line in following:
        if not line.strip():
            if chunk:
                break
            continue
        if _is_label(line):
            break  # the next labelled section
        if chunk and rest and not (chunk[-1].rstrip().endswith(",") or _looks_like_actions(line)):
            break
        chunk.append(line.strip())
    return "\n".join(chunk)


def split_actions(text: str) -> list[str]:
    """Split on commas outside parentheses; also accepts newline/bullet lists."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        if (ch == "," and depth == 0) or ch == "\n":
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [t.strip() for t in out if t.strip().strip(_DECOR + "-.")]


def parse_action_sequence(response: str, ground_set: Sequence[GroundAction] | Mapping) -> list[GroundAction]:
    found = _last_marker(response, "Action Sequence")
    if found is None:
        raise FormatError("response has no 'Action Sequence:' line")
    text = _continuation(*found)
    tokens = split_actions(text)
    if not tokens:
        raise FormatError("the action sequence is empty")
    return [parse_action_string(t, ground_set) for t in tokens]


def parse_actions(response: str, ground_set: Sequence[GroundAction] | Mapping) -> list[GroundAction]:
    """The ``Actions:`` list of an action-proposal response."""
    found = _last_marker(response, "Actions")
    if found is None:
        raise FormatError("response has no 'Actions:' line")
    tokens = split_actions(_continuation(*found))
    if not tokens:
        raise FormatError("the action list is empty")
    return [parse_action_string(t, ground_set) for t in tokens]


def parse_action(response: str, ground_set: Sequence[GroundAction] | Mapping) -> GroundAction:
    """The single ``Action:`` of a one-step response."""
    found = _last_marker(response, "Action")
    if found is None:
        raise FormatError("response has no 'Action:' line")
    tokens = split_actions(_continuation(*found))
    if len(tokens) != 1:
        raise FormatError(f"expected exactly one action, got {len(tokens)}")
    return parse_action_string(tokens[0], ground_set)


def parse_selection(response: str, ground_set: Sequence[GroundAction] | Mapping) -> tuple[int, GroundAction]:
    """``Query: <state number>, <action>``."""
    found = _last_marker(response, "Query")
    if found is None:
        raise FormatError("response has no 'Query:' line")
    text = _continuation(*found)
    m = re.match(r"^(?:state\s*)?(\d+)\s*[,;:]?\s*(.+)$", text.strip(), re.I)
    if not m:
        raise FormatError("expected 'Query: <state number>, <action>'")
    return int(m.group(1)), parse_action_string(m.group(2), ground_set)


def parse_rating(response: str) -> Rating:
    found = _last_marker(response, "Rating")
    if found is None:
        raise FormatError("response has no 'Rating:' line")
    text = _continuation(*found).strip().strip(_DECOR + ".!<>\"'").strip()
    word = text.split()[0] if text.split() else ""
    try:
        return Rating.from_label(word.strip(_DECOR + ".!,<>\"'"))
    except ValueError:
        raise FormatError(f"unrecognized rating {text!r}; use one of sure, maybe, impossible") from None
