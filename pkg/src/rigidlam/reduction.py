"""Reduction strategies and Boehm-style prefixes for regular 001 terms.

The central strategy contracts, at each multistep, every redex sitting at the
least applicative depth (`adr`).  On 001 terms that depth strictly increases,
so the sequence converges to the term's infinitary normal form when one
exists; finite prefixes of the limit are observable through `bohm_prefix`
and `limit_prefix`.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .positions import Position, applicative_depth
from .terms import (
    ABS,
    APP,
    BVAR,
    FREE,
    Non001Term,
    Term,
    TermError,
    is_001,
    redex_nodes,
    redex_positions_to_depth,
    reduce_at,
    subterm,
    unfold_to_depth,
)


class HeadDivergence(TermError):
    """Head reduction was cut off: 'loop' is a proof, 'fuel' is a budget."""

    def __init__(self, reason: str):
        super().__init__(f"no head normal form reached ({reason})")
        self.reason = reason


class LeftmostUndefined(TermError):
    """The infimum of the redex positions is not itself a redex position."""


class NotStable(TermError):
    """The recorded reduction has not yet frozen the requested prefix."""


# -- head shape --------------------------------------------------------------


@dataclass(frozen=True)
class HeadNormal:
    """t = \\x1...xp. h u1...uq with h a variable."""

    binders: int
    head: tuple  # ('free', name) or ('bvar', j)
    argument_positions: tuple[Position, ...]


@dataclass(frozen=True)
class HeadRedex:
    position: Position


@dataclass(frozen=True)
class Headless:
    """A {0,1}-cycle swallows the head; the term has no head normal form."""


def head_decompose(t: Term) -> HeadNormal | HeadRedex | Headless:
    n = 0
    binders = 0
    seen: set[int] = set()
    while t.nodes[n][0] == ABS:
        if n in seen:
            return Headless()
        seen.add(n)
        n = t.nodes[n][1]
        binders += 1
    prefix: Position = (0,) * binders

    spine: list[int] = []
    seen = set()
    while t.nodes[n][0] == APP:
        if n in seen:
            return Headless()
        seen.add(n)
        spine.append(n)
        n = t.nodes[n][1]

    node = t.nodes[n]
    if node[0] == ABS:
        # the innermost spine application is the head redex; the spine is
        # nonempty because the binder loop above consumed every leading abs
        return HeadRedex(prefix + (1,) * (len(spine) - 1))
    q = len(spine)
    args = tuple(prefix + (1,) * (q - i) + (2,) for i in range(1, q + 1))
    return HeadNormal(binders=binders, head=node, argument_positions=args)


def is_hnf(t: Term) -> bool:
    return isinstance(head_decompose(t), HeadNormal)


def head_step(t: Term) -> Term:
    shape = head_decompose(t)
    if isinstance(shape, Headless):
        raise HeadDivergence("loop")
    if isinstance(shape, HeadNormal):
        raise TermError("term is already in head normal form")
    return reduce_at(t, shape.position)


def head_reduce(t: Term, fuel: int = 1000) -> tuple[Term, int]:
    """Iterate head steps to head normal form.

    Raises HeadDivergence('loop') when a term repeats (a proof of divergence
    for deterministic head reduction) and HeadDivergence('fuel') when the
    budget runs out first.
    """
    seen = {t}
    steps = 0
    while not isinstance(head_decompose(t), HeadNormal):
        if steps >= fuel:
            raise HeadDivergence("fuel")
        t = head_step(t)
        steps += 1
        if t in seen:
            raise HeadDivergence("loop")
        seen.add(t)
    return t, steps


# -- redex depth and the depth-stratified strategy ---------------------------


def is_normal(t: Term) -> bool:
    return not redex_nodes(t)


def adr(t: Term) -> int | None:
    """Least applicative depth of a redex occurrence; None on normal forms."""
    targets = redex_nodes(t)
    if not targets:
        return None
    dist = {0: 0}
    queue: list[tuple[int, int]] = [(0, 0)]
    while queue:
        d, n = heapq.heappop(queue)
        if d > dist.get(n, d):
            continue
        if n in targets:
            return d
        node = t.nodes[n]
        kind = node[0]
        if kind == ABS:
            edges = ((node[1], 0),)
        elif kind == APP:
            edges = ((node[1], 0), (node[2], 1))
        else:
            edges = ()
        for child, w in edges:
            nd = d + w
            if nd < dist.get(child, nd + 1):
                dist[child] = nd
                heapq.heappush(queue, (nd, child))
    raise AssertionError("redex nodes are reachable by construction")


def hh_parallel_step(t: Term) -> tuple[Term, tuple[Position, ...]]:
    """Contract every redex at the least applicative depth, simultaneously.

    Nested redexes at the same depth only nest through abstraction bodies,
    so contracting longer positions first realizes the simultaneous step.
    """
    depth = adr(t)
    if depth is None:
        raise TermError("term is already a normal form")
    positions = tuple(
        p for p in redex_positions_to_depth(t, depth) if applicative_depth(p) == depth
    )
    for p in sorted(positions, key=len, reverse=True):
        t = reduce_at(t, p)
    return t, positions


@dataclass(frozen=True)
class Step:
    positions: tuple[Position, ...]
    result: Term


@dataclass(frozen=True)
class ReductionSequence:
    initial: Term
    steps: tuple[Step, ...] = ()

    @property
    def final(self) -> Term:
        return self.steps[-1].result if self.steps else self.initial

    @property
    def terms(self) -> list[Term]:
        return [self.initial] + [s.result for s in self.steps]


def hh_reduce(t: Term, multisteps: int) -> ReductionSequence:
    """Run the depth-stratified strategy for up to `multisteps` multisteps."""
    if not is_001(t):
        raise Non001Term("the depth-stratified strategy requires 001 terms")
    steps: list[Step] = []
    current = t
    for _ in range(multisteps):
        if is_normal(current):
            break
        current, positions = hh_parallel_step(current)
        steps.append(Step(positions=positions, result=current))
    return ReductionSequence(initial=t, steps=tuple(steps))


# -- leftmost-outermost, where it exists --------------------------------------


def leftmost_redex(t: Term) -> Position | None:
    """Position-lexicographic least redex occurrence.

    On infinite terms the infimum of the redex occurrences may fail to be
    one (an ever-descending chain); that raises LeftmostUndefined.
    """
    redexes = redex_nodes(t)
    if not redexes:
        return None

    reaches = [False] * len(t.nodes)
    for n in redexes:
        reaches[n] = True
    changed = True
    while changed:
        changed = False
        for n, node in enumerate(t.nodes):
            if reaches[n]:
                continue
            kind = node[0]
            if kind == ABS:
                val = reaches[node[1]]
            elif kind == APP:
                val = reaches[node[1]] or reaches[node[2]]
            else:
                val = False
            if val:
                reaches[n] = True
                changed = True

    position: list[int] = []
    n = 0
    visited: set[int] = set()
    while True:
        if n in redexes:
            return tuple(position)
        if n in visited:
            raise LeftmostUndefined(
                "the redex occurrences have an infinite descending chain"
            )
        visited.add(n)
        node = t.nodes[n]
        kind = node[0]
        if kind == ABS:
            children = ((0, node[1]),)
        elif kind == APP:
            children = ((1, node[1]), (2, node[2]))
        else:
            children = ()
        for letter, child in children:
            if reaches[child]:
                position.append(letter)
                n = child
                break
        else:  # pragma: no cover - reaches[root] guaranteed a path
            raise AssertionError("redex reachability lost")


def leftmost_step(t: Term) -> Term:
    position = leftmost_redex(t)
    if position is None:
        raise TermError("term is already a normal form")
    return reduce_at(t, position)


# -- Boehm prefixes -----------------------------------------------------------


@dataclass(frozen=True)
class BohmTree:
    """Finite prefix of an infinitary normal form.

    kind: 'abs' | 'app' | 'var' | 'free' | 'bottom' | 'unexplored'
    payload: bvar index for 'var', name for 'free', reason for 'bottom'
    ('loop' is a proof of divergence, 'fuel' only a budget).
    """

    kind: str
    payload: object = None
    children: tuple["BohmTree", ...] = ()

    def pretty(self, indent: int = 0) -> str:
        pad = "  " * indent
        head = f"{pad}{self.kind}" + (f" {self.payload}" if self.payload is not None else "")
        return "\n".join([head] + [c.pretty(indent + 1) for c in self.children])


BOTTOM_LOOP = BohmTree("bottom", "loop")
BOTTOM_FUEL = BohmTree("bottom", "fuel")
UNEXPLORED = BohmTree("unexplored")


def bohm_prefix(t: Term, depth: int, fuel: int = 1000) -> BohmTree:
    """Evaluate the infinitary normal form at applicative depths < `depth`;
    arguments at depth `depth` are left unexplored.

    Each node gets its own head-reduction budget; meaningless subterms
    come out as 'bottom' (with a loop proof when head reduction cycles).
    """

    def go(u: Term, ad: int) -> BohmTree:
        if ad >= depth:
            return UNEXPLORED
        try:
            u, _ = head_reduce(u, fuel)
        except HeadDivergence as exc:
            return BOTTOM_LOOP if exc.reason == "loop" else BOTTOM_FUEL
        shape = head_decompose(u)
        assert isinstance(shape, HeadNormal)
        tree = BohmTree("free", shape.head[1]) if shape.head[0] == FREE else BohmTree(
            "var", shape.head[1]
        )
        for p in shape.argument_positions:
            tree = BohmTree("app", None, (tree, go(subterm(u, p), ad + 1)))
        for _ in range(shape.binders):
            tree = BohmTree("abs", None, (tree,))
        return tree

    return go(t, 0)


def limit_prefix(sequence: ReductionSequence, depth: int) -> tuple:
    """Truncated unfolding of the limit of a depth-stratified reduction.

    The prefix of the final term is certified frozen when the term is normal
    or every remaining redex sits strictly below the requested depth.
    """
    final = sequence.final
    remaining = adr(final)
    if remaining is not None and remaining <= depth:
        raise NotStable(
            f"a redex at applicative depth {remaining} can still change the prefix"
        )
    return unfold_to_depth(final, depth)
