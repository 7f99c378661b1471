"""Sequential binary partitions of factor levels.

A partition is written as nested parenthesised pairs over level names::

    node  := LEVEL | "(" node "," node ")"

``LEVEL`` is any run of characters other than ``(``, ``)`` and ``,``; the
whitespace around it is dropped. The left member of every pair is the
numerator ("+") group, the right member the denominator ("-") group. Steps
are numbered by a pre-order walk of the internal nodes, so step 1 always
splits the full level set.

>>> tree = parse_sbp("(15-24,(25-54,55+))", ["15-24", "25-54", "55+"])
>>> [(sorted(s.plus), sorted(s.minus)) for s in sbp_steps(tree)]
[(['15-24'], ['25-54', '55+']), (['25-54'], ['55+'])]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np


class SbpError(ValueError):
    """Malformed or inconsistent partition text."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


@dataclass(frozen=True)
class Leaf:
    level: str

    def leaves(self) -> Iterator[str]:
        yield self.level


@dataclass(frozen=True)
class Node:
    left: "SbpTree"
    right: "SbpTree"

    def leaves(self) -> Iterator[str]:
        yield from self.left.leaves()
        yield from self.right.leaves()


SbpTree = Union[Leaf, Node]


@dataclass(frozen=True)
class SbpStep:
    plus: frozenset
    minus: frozenset
    index: int

    @property
    def p(self) -> int:
        return len(self.plus)

    @property
    def q(self) -> int:
        return len(self.minus)


_SPECIAL = "(),"


def _tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in _SPECIAL:
            yield c, c, i
            i += 1
        elif c.isspace():
            i += 1
        else:
            start = i
            while i < n and text[i] not in _SPECIAL:
                i += 1
            yield "LEVEL", text[start:i].strip(), start
    yield "END", "", n


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self, kind: str):
        tok = self.peek()
        if tok[0] != kind:
            found = "end of input" if tok[0] == "END" else repr(tok[1])
            raise SbpError(f"expected {kind!r}, found {found}", tok[2])
        self.pos += 1
        return tok

    def node(self) -> SbpTree:
        kind, value, where = self.peek()
        if kind == "LEVEL":
            self.pos += 1
            return Leaf(value)
        if kind == "(":
            self.pos += 1
            left = self.node()
            self.take(",")
            right = self.node()
            self.take(")")
            return Node(left, right)
        found = "end of input" if kind == "END" else repr(value)
        raise SbpError(f"expected a level or '(', found {found}", where)


def parse_sbp(text: str, levels: Sequence[str]) -> SbpTree:
    """Parse partition text and check its leaves are exactly ``levels``."""
    parser = _Parser(text)
    tree = parser.node()
    kind, value, where = parser.peek()
    if kind != "END":
        raise SbpError(f"unexpected {value!r} after complete partition", where)
    _check_leaves(tree, levels)
    return tree


def _check_leaves(tree: SbpTree, levels: Sequence[str]) -> None:
    known = set(levels)
    seen = set()
    for leaf in tree.leaves():
        if leaf not in known:
            raise SbpError(f"unknown level {leaf!r}")
        if leaf in seen:
            raise SbpError(f"duplicated level {leaf!r}")
        seen.add(leaf)
    missing = [lv for lv in levels if lv not in seen]
    if missing:
        raise SbpError(f"level(s) missing from partition: {', '.join(map(repr, missing))}")


def to_text(tree: SbpTree) -> str:
    """Canonical text form; ``parse_sbp(to_text(t), ...) == t``."""
    if isinstance(tree, Leaf):
        return tree.level
    return f"({to_text(tree.left)},{to_text(tree.right)})"


def sbp_steps(tree: SbpTree) -> list[SbpStep]:
    steps: list[SbpStep] = []

    def walk(t):
        if isinstance(t, Leaf):
            return
        steps.append(SbpStep(frozenset(t.left.leaves()), frozenset(t.right.leaves()),
                             len(steps) + 1))
        walk(t.left)
        walk(t.right)

    walk(tree)
    return steps


def _signs(step: SbpStep, levels: Sequence[str]) -> np.ndarray:
    return np.array([1 if lv in step.plus else -1 if lv in step.minus else 0
                     for lv in levels], dtype=int)


def balance_coefficients(step: SbpStep, levels: Sequence[str]) -> np.ndarray:
    """Unit-norm, zero-sum log-contrast coefficients of one partition step."""
    p, q = step.p, step.q
    signs = _signs(step, levels)
    plus = np.sqrt(q / (p * (p + q)))
    minus = -np.sqrt(p / (q * (p + q)))
    return np.where(signs > 0, plus, np.where(signs < 0, minus, 0.0))


def _default_tree(levels: Sequence[str]) -> SbpTree:
    if len(levels) == 1:
        return Leaf(levels[0])
    return Node(Leaf(levels[0]), _default_tree(levels[1:]))


@dataclass(frozen=True)
class FactorSpec:
    """A named factor, its ordered levels and a partition over them.

    ``sbp`` may be given as text or as a tree; when omitted, each step splits
    off the first remaining level. ``symbol`` is the short name used in
    coordinate labels (``r``, ``c``, ``s`` ...); it defaults to ``name``.
    """

    name: str
    levels: tuple[str, ...]
    sbp: SbpTree | str | None = None
    symbol: str | None = None
    steps: tuple[SbpStep, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.name:
            raise ValueError("factor name must be non-empty")
        levels = tuple(str(lv) for lv in self.levels)
        if len(levels) < 2:
            raise ValueError(f"factor {self.name!r} needs at least 2 levels")
        if any(not lv for lv in levels):
            raise ValueError(f"factor {self.name!r} has an empty level name")
        if len(set(levels)) != len(levels):
            raise ValueError(f"factor {self.name!r} has duplicated levels")
        for lv in levels:
            if any(c in _SPECIAL for c in lv) or lv != lv.strip():
                raise ValueError(f"level {lv!r} of {self.name!r} cannot appear in partition text")
        object.__setattr__(self, "levels", levels)
        if self.sbp is None:
            tree = _default_tree(levels)
        elif isinstance(self.sbp, str):
            tree = parse_sbp(self.sbp, levels)
        else:
            tree = self.sbp
            _check_leaves(tree, levels)
        object.__setattr__(self, "sbp", tree)
        if self.symbol is None:
            object.__setattr__(self, "symbol", self.name)
        object.__setattr__(self, "steps", tuple(sbp_steps(tree)))

    @property
    def size(self) -> int:
        return len(self.levels)

    @property
    def sbp_text(self) -> str:
        return to_text(self.sbp)


def vector_contrast_matrix(spec: FactorSpec) -> np.ndarray:
    """``(L-1) x L`` matrix whose rows are the balance coefficients in step order."""
    return np.vstack([balance_coefficients(s, spec.levels) for s in spec.steps])


def sign_matrix(spec: FactorSpec) -> np.ndarray:
    """``+1/-1/0`` per step (rows) and level (columns)."""
    return np.vstack([_signs(s, spec.levels) for s in spec.steps])
