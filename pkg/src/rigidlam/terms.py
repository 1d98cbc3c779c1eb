"""Terms of the infinitary lambda-calculus, restricted to regular trees.

A term is stored as a finite rooted graph of nameless nodes:

    ('free', name)   named free variable
    ('bvar', j)      de Bruijn index (distance in binders)
    ('abs', body)    abstraction, edge letter 0
    ('app', l, r)    application, edge letters 1 (function) and 2 (argument)

Back-edges encode regular infinite terms; the surface syntax ``fix X. e``
ties the knot on the free name X.  Graphs are canonicalized at construction
(bisimulation quotient + breadth-first renumbering), so ``==`` and ``hash``
decide alpha-equivalence of the infinite unfoldings.

A named regular tree has a finite nameless graph only when no cycle that
crosses a binder also references a binder outside itself.  Constructions that
would violate this raise UnrepresentableTerm; this is the one representational
restriction of the package.
"""

from __future__ import annotations

from typing import Iterator

from .positions import Position, applicative_depth

Node = tuple

FREE = "free"
BVAR = "bvar"
ABS = "abs"
APP = "app"


class TermError(Exception):
    pass


class UnrepresentableTerm(TermError):
    """The named tree is regular but has no finite nameless graph."""


class UnguardedFix(TermError):
    """fix X. X and friends: the recursion variable is not under a constructor."""


class Non001Term(TermError):
    """An operation requiring the 001 property met a {0,1}-only cycle."""


class PositionOutOfSupport(TermError):
    def __init__(self, position: Position):
        super().__init__(f"position {position} is outside the term's support")
        self.position = position


class NotARedex(TermError):
    def __init__(self, position: Position):
        super().__init__(f"no beta-redex at position {position}")
        self.position = position


class Term:
    """Immutable canonical term graph. The root is always node 0."""

    __slots__ = ("nodes", "_esc", "_hash")

    nodes: tuple[Node, ...]

    def __init__(self, nodes: tuple[Node, ...]):
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "_esc", None)
        object.__setattr__(self, "_hash", hash(nodes))

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("Term is immutable")

    def __eq__(self, other):
        return isinstance(other, Term) and self.nodes == other.nodes

    def __hash__(self):
        return self._hash

    def __repr__(self):
        from .syntax import print_term

        return f"Term({print_term(self)!r})"

    # -- navigation ---------------------------------------------------------

    def node_at(self, position: Position) -> int:
        """Graph node id reached by walking the position from the root."""
        n = 0
        for letter in position:
            node = self.nodes[n]
            kind = node[0]
            if kind == ABS and letter == 0:
                n = node[1]
            elif kind == APP and letter == 1:
                n = node[1]
            elif kind == APP and letter >= 2:
                n = node[2]
            else:
                raise PositionOutOfSupport(position)
        return n

    def label_at(self, position: Position) -> Node:
        return self.nodes[self.node_at(position)]

    def in_support(self, position: Position) -> bool:
        try:
            self.node_at(position)
            return True
        except PositionOutOfSupport:
            return False

    def escapes(self) -> tuple[int, ...]:
        """esc[n] = number of binder levels above n that n's subgraph references.

        Least fixpoint; on valid graphs every binder-crossing cycle is
        binder-closed, which the construction API guarantees.
        """
        cached = self._esc
        if cached is not None:
            return cached
        esc = [0] * len(self.nodes)
        changed = True
        while changed:
            changed = False
            for n, node in enumerate(self.nodes):
                kind = node[0]
                if kind == BVAR:
                    val = node[1] + 1
                elif kind == ABS:
                    val = max(esc[node[1]] - 1, 0)
                elif kind == APP:
                    val = max(esc[node[1]], esc[node[2]])
                else:
                    val = 0
                if val > esc[n]:
                    esc[n] = val
                    changed = True
        result = tuple(esc)
        object.__setattr__(self, "_esc", result)
        return result

    def free_names(self) -> frozenset[str]:
        return frozenset(node[1] for node in self.nodes if node[0] == FREE)


# -- canonicalization -------------------------------------------------------


def _canonical(nodes: list[Node], root: int) -> Term:
    """Quotient by bisimulation, renumber breadth-first from the root."""
    # reachable nodes only
    reach: list[int] = [root]
    seen = {root}
    for n in reach:
        node = nodes[n]
        kind = node[0]
        if kind == ABS:
            kids = (node[1],)
        elif kind == APP:
            kids = (node[1], node[2])
        else:
            kids = ()
        for k in kids:
            if k not in seen:
                seen.add(k)
                reach.append(k)

    # partition refinement on (label, child blocks)
    block: dict[int, int] = {}
    labels: dict[Node, int] = {}
    for n in reach:
        node = nodes[n]
        key = node if node[0] in (FREE, BVAR) else (node[0],)
        block[n] = labels.setdefault(key, len(labels))
    while True:
        count = len(set(block[n] for n in reach))
        sigs: dict[tuple, int] = {}
        new_block: dict[int, int] = {}
        for n in reach:
            node = nodes[n]
            kind = node[0]
            if kind == ABS:
                sig = (block[n], block[node[1]])
            elif kind == APP:
                sig = (block[n], block[node[1]], block[node[2]])
            else:
                sig = (block[n],)
            new_block[n] = sigs.setdefault(sig, len(sigs))
        block = new_block
        # signatures include the old block, so passes only ever split;
        # an unchanged block count means the partition is stable
        if len(sigs) == count:
            break

    # one representative per block, BFS order from the root's block
    rep: dict[int, int] = {}
    for n in reach:
        rep.setdefault(block[n], n)
    order: list[int] = [block[root]]
    index = {block[root]: 0}
    for b in order:
        node = nodes[rep[b]]
        kind = node[0]
        if kind == ABS:
            kids = (node[1],)
        elif kind == APP:
            kids = (node[1], node[2])
        else:
            kids = ()
        for k in kids:
            kb = block[k]
            if kb not in index:
                index[kb] = len(order)
                order.append(kb)
    out: list[Node] = []
    for b in order:
        node = nodes[rep[b]]
        kind = node[0]
        if kind == ABS:
            out.append((ABS, index[block[node[1]]]))
        elif kind == APP:
            out.append((APP, index[block[node[1]]], index[block[node[2]]]))
        else:
            out.append(node)
    return Term(tuple(out))


# -- construction -----------------------------------------------------------


def var(name: str) -> Term:
    return Term(((FREE, name),))


def bvar(index: int) -> Term:
    """Dangling de Bruijn variable; used for open subterms."""
    return Term(((BVAR, index),))


def app(fun: Term, arg: Term) -> Term:
    nodes: list[Node] = [(APP, 1, 1 + len(fun.nodes))]
    nodes.extend(_offset(node, 1) for node in fun.nodes)
    nodes.extend(_offset(node, 1 + len(fun.nodes)) for node in arg.nodes)
    return _canonical(nodes, 0)


def app_many(fun: Term, *args: Term) -> Term:
    t = fun
    for a in args:
        t = app(t, a)
    return t


def _offset(node: Node, by: int) -> Node:
    kind = node[0]
    if kind == ABS:
        return (ABS, node[1] + by)
    if kind == APP:
        return (APP, node[1] + by, node[2] + by)
    return node


def lam(name: str, body: Term) -> Term:
    """Bind the free occurrences of `name` in body under a new abstraction.

    Occurrences at several binder depths force per-depth copies (unsharing);
    a binder-crossing cycle reaching `name` has no finite nameless form and
    raises UnrepresentableTerm.
    """
    nodes: list[Node] = list(body.nodes)

    reaches = [False] * len(nodes)
    changed = True
    while changed:
        changed = False
        for n, node in enumerate(nodes):
            if reaches[n]:
                continue
            kind = node[0]
            if kind == FREE and node[1] == name:
                val = True
            elif kind == ABS:
                val = reaches[node[1]]
            elif kind == APP:
                val = reaches[node[1]] or reaches[node[2]]
            else:
                val = False
            if val:
                reaches[n] = True
                changed = True

    memo: dict[tuple[int, int], int] = {}
    open_depth: dict[int, int] = {}

    def rebuild(n: int, depth: int) -> int:
        if not reaches[n]:
            return n
        key = (n, depth)
        if key in memo:
            return memo[key]
        if n in open_depth:
            if open_depth[n] != depth:
                raise UnrepresentableTerm(
                    f"binder-crossing cycle captures {name!r}; "
                    "no finite nameless graph exists"
                )
            return memo[(n, depth)]
        node = nodes[n]
        kind = node[0]
        if kind == FREE:
            nodes.append((BVAR, depth))
            memo[key] = len(nodes) - 1
            return memo[key]
        # pre-allocate so cycles can point at the node being rebuilt
        nodes.append(node)
        new_id = len(nodes) - 1
        memo[key] = new_id
        open_depth[n] = depth
        try:
            if kind == ABS:
                nodes[new_id] = (ABS, rebuild(node[1], depth + 1))
            elif kind == APP:
                nodes[new_id] = (APP, rebuild(node[1], depth), rebuild(node[2], depth))
            else:  # BVAR: closed under existing binders, never reaches the name
                raise AssertionError("bvar cannot reach a free name")
        finally:
            del open_depth[n]
        return new_id

    new_root = rebuild(0, 0)
    nodes.append((ABS, new_root))
    return _canonical(nodes, len(nodes) - 1)


def fix(name: str, body: Term) -> Term:
    """Tie the knot: every free occurrence of `name` becomes the whole term."""
    root_node = body.nodes[0]
    if root_node[0] == FREE and root_node[1] == name:
        raise UnguardedFix(f"fix {name}. {name} has no constructor on its cycle")
    nodes: list[Node] = []
    for node in body.nodes:
        kind = node[0]
        if kind == ABS:
            target = node[1]
            if _is_name(body, target, name):
                target = 0
            nodes.append((ABS, target))
        elif kind == APP:
            left, right = node[1], node[2]
            if _is_name(body, left, name):
                left = 0
            if _is_name(body, right, name):
                right = 0
            nodes.append((APP, left, right))
        else:
            nodes.append(node)
    return _canonical(nodes, 0)


def _is_name(t: Term, n: int, name: str) -> bool:
    node = t.nodes[n]
    return node[0] == FREE and node[1] == name


def substitute(t: Term, name: str, u: Term) -> Term:
    """Capture-free t[u/x]: free names never collide with nameless binders."""
    if (FREE, name) not in t.nodes:
        return t
    offset = len(t.nodes)
    nodes: list[Node] = list(t.nodes)
    nodes.extend(_offset(node, offset) for node in u.nodes)

    def redirect(n: int) -> int:
        node = t.nodes[n]
        if node[0] == FREE and node[1] == name:
            return offset
        return n

    for i, node in enumerate(t.nodes):
        kind = node[0]
        if kind == ABS:
            nodes[i] = (ABS, redirect(node[1]))
        elif kind == APP:
            nodes[i] = (APP, redirect(node[1]), redirect(node[2]))
    root = redirect(0)
    return _canonical(nodes, root)


def term_equal(t1: Term, t2: Term) -> bool:
    return t1 == t2


# -- structural predicates and supports -------------------------------------


def is_001(t: Term) -> bool:
    """True iff every cycle of the graph crosses an argument edge."""
    # Tarjan SCC over the {0,1}-edge subgraph
    nodes = t.nodes
    kids: list[tuple[int, ...]] = []
    for node in nodes:
        kind = node[0]
        if kind == ABS:
            kids.append((node[1],))
        elif kind == APP:
            kids.append((node[1],))  # only the 1-edge; 2-edges are cut
        else:
            kids.append(())
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    onstack: set[int] = set()
    stack: list[int] = []
    counter = 0
    sccs: list[list[int]] = []

    for start in range(len(nodes)):
        if start in index:
            continue
        work: list[tuple[int, int]] = [(start, 0)]
        while work:
            n, ci = work[-1]
            if ci == 0:
                index[n] = low[n] = counter
                counter += 1
                stack.append(n)
                onstack.add(n)
            if ci < len(kids[n]):
                work[-1] = (n, ci + 1)
                k = kids[n][ci]
                if k not in index:
                    work.append((k, 0))
                elif k in onstack:
                    low[n] = min(low[n], index[k])
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[n])
                if low[n] == index[n]:
                    comp = []
                    while True:
                        m = stack.pop()
                        onstack.discard(m)
                        comp.append(m)
                        if m == n:
                            break
                    sccs.append(comp)

    for comp in sccs:
        if len(comp) > 1:
            return False
        (n,) = comp
        if n in kids[n]:
            return False
    return True


def support_to_depth(t: Term, depth: int) -> set[Position]:
    """All tree positions of applicative depth <= depth."""
    if not is_001(t):
        raise Non001Term("support enumeration requires the 001 property")
    out: set[Position] = set()
    work: list[tuple[int, Position, int]] = [(0, (), 0)]
    while work:
        n, position, ad = work.pop()
        out.add(position)
        node = t.nodes[n]
        kind = node[0]
        if kind == ABS:
            work.append((node[1], position + (0,), ad))
        elif kind == APP:
            work.append((node[1], position + (1,), ad))
            if ad + 1 <= depth:
                work.append((node[2], position + (2,), ad + 1))
    return out


def subterm(t: Term, position: Position) -> Term:
    return _canonical(list(t.nodes), t.node_at(position))


def iter_nodes(t: Term) -> Iterator[tuple[int, Node]]:
    return enumerate(t.nodes)


# -- beta-reduction engine ---------------------------------------------------


def reduce_at(t: Term, position: Position) -> Term:
    """Contract the beta-redex at `position`; other positions are untouched.

    Paths into a cycle unroll it once, which leaves the tree unchanged
    everywhere outside the contracted subtree.
    """
    nodes: list[Node] = list(t.nodes)
    esc = t.escapes()

    # walk the path, remembering how to rebuild it
    path: list[tuple[int, int]] = []  # (node id, letter)
    n = 0
    for letter in position:
        node = nodes[n]
        kind = node[0]
        if kind == ABS and letter == 0:
            path.append((n, 0))
            n = node[1]
        elif kind == APP and letter == 1:
            path.append((n, 1))
            n = node[1]
        elif kind == APP and letter >= 2:
            path.append((n, 2))
            n = node[2]
        else:
            raise PositionOutOfSupport(position)

    redex = nodes[n]
    if redex[0] != APP or nodes[redex[1]][0] != ABS:
        raise NotARedex(position)
    body = nodes[redex[1]][1]
    arg = redex[2]

    def shift(m: int, by: int, cutoff: int, memo: dict[tuple[int, int], int]) -> int:
        if by == 0 or esc_of(m) <= cutoff:
            return m
        key = (m, cutoff)
        if key in memo:
            return memo[key]
        node = nodes[m]
        kind = node[0]
        if kind == BVAR:
            nodes.append((BVAR, node[1] + by))
            memo[key] = len(nodes) - 1
            return memo[key]
        nodes.append(node)
        new_id = len(nodes) - 1
        memo[key] = new_id
        if kind == ABS:
            nodes[new_id] = (ABS, shift(node[1], by, cutoff + 1, memo))
        elif kind == APP:
            nodes[new_id] = (
                APP,
                shift(node[1], by, cutoff, memo),
                shift(node[2], by, cutoff, memo),
            )
        return new_id

    def esc_of(m: int) -> int:
        return esc[m] if m < len(esc) else 0

    subst_memo: dict[tuple[int, int], int] = {}
    shift_memos: dict[int, dict[tuple[int, int], int]] = {}

    def subst(m: int, depth: int) -> int:
        # replace bvar(depth) with arg shifted by depth, decrement deeper escapes
        if esc_of(m) <= depth:
            return m
        key = (m, depth)
        if key in subst_memo:
            return subst_memo[key]
        node = nodes[m]
        kind = node[0]
        if kind == BVAR:
            j = node[1]
            if j == depth:
                result = shift(arg, depth, 0, shift_memos.setdefault(depth, {}))
            else:
                nodes.append((BVAR, j - 1))
                result = len(nodes) - 1
            subst_memo[key] = result
            return result
        nodes.append(node)
        new_id = len(nodes) - 1
        subst_memo[key] = new_id
        if kind == ABS:
            nodes[new_id] = (ABS, subst(node[1], depth + 1))
        elif kind == APP:
            nodes[new_id] = (APP, subst(node[1], depth), subst(node[2], depth))
        return new_id

    contracted = subst(body, 0)

    # rebuild the spine from the redex back to the root
    current = contracted
    for m, letter in reversed(path):
        node = nodes[m]
        if letter == 0:
            nodes.append((ABS, current))
        elif letter == 1:
            nodes.append((APP, current, node[2]))
        else:
            nodes.append((APP, node[1], current))
        current = len(nodes) - 1
    return _canonical(nodes, current)


def redex_nodes(t: Term) -> set[int]:
    out = set()
    for n, node in enumerate(t.nodes):
        if node[0] == APP and t.nodes[node[1]][0] == ABS:
            out.add(n)
    return out


def redex_positions_to_depth(t: Term, depth: int) -> list[Position]:
    """All redex positions of applicative depth <= depth (001 terms only)."""
    if not is_001(t):
        raise Non001Term("redex enumeration requires the 001 property")
    redexes = redex_nodes(t)
    out: list[Position] = []
    work: list[tuple[int, Position, int]] = [(0, (), 0)]
    while work:
        n, position, ad = work.pop()
        if n in redexes:
            out.append(position)
        node = t.nodes[n]
        kind = node[0]
        if kind == ABS:
            work.append((node[1], position + (0,), ad))
        elif kind == APP:
            work.append((node[1], position + (1,), ad))
            if ad + 1 <= depth:
                work.append((node[2], position + (2,), ad + 1))
    return sorted(out)


def unfold_to_depth(t: Term, depth: int) -> tuple:
    """Finite nested-tuple unfolding pruned at applicative depth > depth.

    Brute-force oracle for tests; independent of the support machinery.
    """
    def go(n: int, ad: int) -> tuple:
        node = t.nodes[n]
        kind = node[0]
        if kind in (FREE, BVAR):
            return node
        if kind == ABS:
            return (ABS, go(node[1], ad))
        if ad + 1 > depth:
            return (APP, go(node[1], ad), ("...",))
        return (APP, go(node[1], ad), go(node[2], ad + 1))

    if not is_001(t):
        raise Non001Term("unfolding requires the 001 property")
    return go(0, 0)
