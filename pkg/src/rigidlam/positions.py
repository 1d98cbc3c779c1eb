"""Positions: finite words over the naturals.

A position addresses a node in a (possibly infinite) labelled tree.  Terms use
letters {0, 1, 2} (0 = abstraction body, 1 = application left, 2 = argument);
derivations additionally use argument tracks k >= 2.  Positions are plain
tuples of ints so that prefix tests, concatenation and ordering are the
built-in tuple operations.
"""

from __future__ import annotations

import math

from typing import Iterable

Position = tuple[int, ...]

EPSILON: Position = ()


def pos(*letters: int) -> Position:
    return tuple(letters)


def applicative_depth(p: Iterable[int]) -> int:
    """Number of argument letters (>= 2) in the word."""
    return sum(1 for letter in p if letter >= 2)


def collapse(p: Iterable[int]) -> Position:
    """Letterwise min(k, 2): forgets which argument track was used."""
    return tuple(letter if letter < 2 else 2 for letter in p)


def is_prefix(p: Position, q: Position) -> bool:
    return len(p) <= len(q) and q[: len(p)] == p


def is_strict_prefix(p: Position, q: Position) -> bool:
    return len(p) < len(q) and q[: len(p)] == p


def prefixes(p: Position) -> list[Position]:
    """All prefixes of p, shortest first, including epsilon and p itself."""
    return [p[:i] for i in range(len(p) + 1)]


def length_lex_key(p: Position) -> tuple[int, Position]:
    """Sort key for length-lexicographic enumeration."""
    return (len(p), p)


def format_position(p: Position) -> str:
    if not p:
        return "e"
    return ".".join(str(letter) for letter in p)


def parse_position(text: str) -> Position:
    text = text.strip()
    if text in ("e", "eps", ""):
        return EPSILON
    try:
        letters = tuple(int(part) for part in text.split("."))
    except ValueError as exc:
        raise ValueError(f"bad position {text!r}: expected digits separated by dots") from exc
    if any(letter < 0 for letter in letters):
        raise ValueError(f"bad position {text!r}: negative letter")
    return letters


def _cantor_pair(x: int, y: int) -> int:
    return (x + y) * (x + y + 1) // 2 + y


def _cantor_unpair(z: int) -> tuple[int, int]:
    w = (math.isqrt(8 * z + 1) - 1) // 2
    y = z - w * (w + 1) // 2
    return w - y, y


def position_code(p: Position) -> int:
    """Injective code of an arbitrary position (any letters) into naturals;
    the empty position codes to 0."""
    code = 0
    for letter in p:
        code = _cantor_pair(code, letter) + 1
    return code


def code_position(code: int) -> Position:
    """Inverse of position_code."""
    letters = []
    while code:
        code, letter = _cantor_unpair(code - 1)
        letters.append(letter)
    return tuple(reversed(letters))
