"""Tiny event-expression grammar for capacity queries.

Expressions are conjunctions of comparisons on a fixed set of per-trajectory
statistics, e.g. ``|x(T)| > 1 and min|x(t)| <= 0.5``; the literal ``true``
matches everything.  Anything richer belongs in library code, not the CLI.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from .engine import Trajectory
from .errors import ConfigurationError


class EventParseError(ConfigurationError):
    """Malformed event expression; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


_STATS: dict[str, Callable[[Trajectory], float]] = {
    "|x(T)|": lambda tr: tr.terminal_norm,
    "max|x(t)|": lambda tr: tr.max_norm,
    "max_t|x(t)|": lambda tr: tr.max_norm,
    "min|x(t)|": lambda tr: tr.min_norm,
    "min_t|x(t)|": lambda tr: tr.min_norm,
}

_OPS: dict[str, Callable[[float, float], bool]] = {
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
}

_TOKEN = re.compile(
    r"\s*(?:(?P<stat>\|x\(T\)\||max_t\|x\(t\)\||max\|x\(t\)\||min_t\|x\(t\)\||min\|x\(t\)\|)"
    r"|(?P<op><=|>=|<|>)"
    r"|(?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<word>true|and))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise EventParseError(f"unexpected input {stripped[:12]!r}", at)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return tokens


@dataclass
class Event:
    """Parsed predicate over trajectories, with its normalized text."""

    predicate: Callable[[Trajectory], bool]
    description: str

    def __call__(self, tr: Trajectory) -> bool:
        return self.predicate(tr)


def parse_event(text: str) -> Event:
    tokens = _tokenize(text)
    if not tokens:
        raise EventParseError("empty event expression", 0)
    clauses: list[Callable[[Trajectory], bool]] = []
    parts: list[str] = []
    i = 0
    while True:
        kind, value, pos = tokens[i] if i < len(tokens) else (None, None, len(text))
        if kind == "word" and value == "true":
            clauses.append(lambda tr: True)
            parts.append("true")
            i += 1
        elif kind == "stat":
            if i + 2 >= len(tokens):
                raise EventParseError("incomplete comparison", pos)
            _, stat_name, _ = tokens[i]
            op_kind, op, op_pos = tokens[i + 1]
            num_kind, num, num_pos = tokens[i + 2]
            if op_kind != "op":
                raise EventParseError(f"expected comparison operator, got {op!r}", op_pos)
            if num_kind != "number":
                raise EventParseError(f"expected a number, got {num!r}", num_pos)
            stat = _STATS[stat_name]
            cmp = _OPS[op]
            bound = float(num)
            clauses.append(lambda tr, s=stat, c=cmp, b=bound: c(s(tr), b))
            parts.append(f"{stat_name} {op} {num}")
            i += 3
        else:
            raise EventParseError(
                f"expected a statistic or 'true', got {value!r}", pos
            )
        if i == len(tokens):
            break
        kind, value, pos = tokens[i]
        if not (kind == "word" and value == "and"):
            raise EventParseError(f"expected 'and', got {value!r}", pos)
        i += 1
        if i == len(tokens):
            raise EventParseError("dangling 'and'", pos)

    def predicate(tr: Trajectory) -> bool:
        return all(c(tr) for c in clauses)

    return Event(predicate=predicate, description=" and ".join(parts))
