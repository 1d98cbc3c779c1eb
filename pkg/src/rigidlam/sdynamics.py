"""Dynamics of rigid derivations: subject reduction and expansion with
exact position bookkeeping.

Contracting the subject redex at position b rewrites, inside the derivation,
every region sitting over b (a region is a derivation position whose collapse
is b).  In a region, the function part is an abstraction whose binder axioms
pair off with the argument premises by track, so the rewrite is deterministic:
each argument subderivation lands at the axiom that carries its track.

`residual_position` relocates the derivation positions that survive the step;
it is injective and hits exactly the reduct's support.  The quasi-residual
maps extend it to the consumed redex positions and to bipositions, leaving
only the abstraction node of each region without an image.

Expansion runs the step backwards.  The track of each created axiom is chosen
by a policy; the default is a fixed injection from subject positions to
tracks, so that expanding comparable derivations gives comparable results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from .positions import Position, collapse, is_prefix, position_code
from .terms import ABS, APP, BVAR, FREE, Term, TermError, reduce_at
from .stypes import (
    InvalidSDerivation,
    SAbs,
    SApp,
    SAx,
    SDerivation,
    SJudgment,
    SNode,
    SType,
    all_judgments,
    check_s,
    is_quantitative,
    judge_s,
    node_at,
    seq_entries,
    seq_tail,
    supp_s,
    type_positions,
)

RightBip = tuple[Position, Position]  # (derivation position, type position)


class NotQuantitative(InvalidSDerivation):
    pass


class SubjectMismatch(TermError):
    pass


class BipositionOutside(InvalidSDerivation):
    pass


# -- regions over a redex ------------------------------------------------------


def regions_over(deriv: SDerivation, b: Position) -> list[Position]:
    """Derivation positions whose collapse is the subject position b."""
    return [a for a in supp_s(deriv) if collapse(a) == b]


def _redex_parts(t: Term, n: int) -> tuple[int, int, int]:
    """(abstraction node, body node, argument node) of the redex at node n."""
    node = t.nodes[n]
    if node[0] != APP or t.nodes[node[1]][0] != ABS:
        raise TermError("subject has no redex at the given position")
    return node[1], t.nodes[node[1]][1], node[2]


def binder_axiom_positions(deriv: SDerivation, a: Position) -> dict[int, Position]:
    """For a region a over a redex: track -> position of the binder's axiom,
    relative to the body root a.1.0."""
    region = node_at(deriv, a)
    if not isinstance(region, SApp) or not isinstance(region.fun, SAbs):
        raise InvalidSDerivation(f"region {a} is not a typed redex")
    t = deriv.subject
    _, body_node, _ = _redex_parts(t, _subject_node(deriv, a))
    out: dict[int, Position] = {}

    def go(nd: SNode, m: int, prefix: Position, depth: int) -> None:
        term_node = t.nodes[m]
        if isinstance(nd, SAx):
            if term_node[0] == BVAR and term_node[1] == depth:
                out[nd.track] = prefix
            return
        if isinstance(nd, SAbs):
            go(nd.child, term_node[1], prefix + (0,), depth + 1)
        elif isinstance(nd, SApp):
            go(nd.fun, term_node[1], prefix + (1,), depth)
            for k, arg in nd.args:
                go(arg, term_node[2], prefix + (k,), depth)

    go(region.fun.child, body_node, (), 0)
    return out


def _subject_node(deriv: SDerivation, a: Position) -> int:
    t = deriv.subject
    n = 0
    for letter in a:
        node = t.nodes[n]
        n = node[2] if letter >= 2 else node[1]
    return n


# -- subject reduction -----------------------------------------------------------


def reduce_s(deriv: SDerivation, b: Position) -> SDerivation:
    """Contract the subject redex at b inside the derivation.

    Requires a quantitative derivation (every argument premise is consumed
    by a matching binder axiom).  Regions the derivation does not reach
    disappear with the subject redex; the conclusion is unchanged.
    """
    if not is_quantitative(deriv):
        raise NotQuantitative("subject reduction requires a quantitative derivation")
    t = deriv.subject
    new_subject = reduce_at(t, b)

    def go(node: SNode, n: int, rest: Position) -> SNode:
        if not rest:
            return contract(node, n)
        letter, rest2 = rest[0], rest[1:]
        term_node = t.nodes[n]
        if letter == 0:
            return SAbs(go(node.child, term_node[1], rest2))
        if letter == 1:
            return SApp(go(node.fun, term_node[1], rest2), node.args)
        return SApp(
            node.fun,
            tuple((k, go(arg, term_node[2], rest2)) for k, arg in node.args),
        )

    def contract(node: SNode, n: int) -> SNode:
        if not isinstance(node, SApp) or not isinstance(node.fun, SAbs):
            raise InvalidSDerivation("derivation does not form a redex over b")
        _, body_node, _ = _redex_parts(t, n)
        args = dict(node.args)

        def subst(nd: SNode, m: int, depth: int) -> SNode:
            term_node = t.nodes[m]
            if isinstance(nd, SAx):
                if term_node[0] == BVAR and term_node[1] == depth:
                    if nd.track not in args:
                        raise InvalidSDerivation(
                            f"no argument premise on track {nd.track}"
                        )
                    return args.pop(nd.track)
                return nd
            if isinstance(nd, SAbs):
                return SAbs(subst(nd.child, term_node[1], depth + 1))
            if isinstance(nd, SApp):
                return SApp(
                    subst(nd.fun, term_node[1], depth),
                    tuple((k, subst(arg, term_node[2], depth)) for k, arg in nd.args),
                )
            return nd

        result = subst(node.fun.child, body_node, 0)
        if args:
            raise InvalidSDerivation(
                f"argument premises on tracks {sorted(args)} were never consumed"
            )
        return result

    out = SDerivation(new_subject, go(deriv.root, 0, b))
    check_s(out)
    return out


# -- residuation ------------------------------------------------------------------


@dataclass(frozen=True)
class UndefinedResidual:
    """Why a derivation position has no residual under the step."""

    case: str  # redex_root | redex_abstraction | redex_variable | phantom_argument

    def __bool__(self) -> bool:
        return False


@dataclass(frozen=True)
class ResidualMaps:
    """Residuation data of one step: where each derivation position goes."""

    defined: dict[Position, Position]
    undefined: dict[Position, UndefinedResidual]
    regions: tuple[Position, ...]
    axiom_spots: dict[Position, dict[int, Position]]  # region -> track -> body spot


def residual_maps(deriv: SDerivation, b: Position) -> ResidualMaps:
    regions = regions_over(deriv, b)
    axmaps = {a: binder_axiom_positions(deriv, a) for a in regions}
    defined: dict[Position, Position] = {}
    undefined: dict[Position, UndefinedResidual] = {}
    for alpha in supp_s(deriv):
        a = _region_of(regions, alpha)
        if a is None:
            defined[alpha] = alpha
            continue
        rest = alpha[len(a):]
        if rest == ():
            undefined[alpha] = UndefinedResidual("redex_root")
        elif rest == (1,):
            undefined[alpha] = UndefinedResidual("redex_abstraction")
        elif rest[0] == 1:  # rest = 1.0.w, inside the body
            w = rest[2:]
            if w in axmaps[a].values():
                undefined[alpha] = UndefinedResidual("redex_variable")
            else:
                defined[alpha] = a + w
        else:  # rest = k.w, inside the argument premise on track k
            k, w = rest[0], rest[1:]
            if k in axmaps[a]:
                defined[alpha] = a + axmaps[a][k] + w
            else:
                undefined[alpha] = UndefinedResidual("phantom_argument")
    return ResidualMaps(
        defined=defined,
        undefined=undefined,
        regions=tuple(regions),
        axiom_spots=axmaps,
    )


def _region_of(regions: list[Position] | tuple[Position, ...],
               alpha: Position) -> Position | None:
    for a in regions:
        if is_prefix(a, alpha):
            return a
    return None


def residual_position(
    deriv: SDerivation, b: Position, alpha: Position
) -> Position | UndefinedResidual:
    maps = residual_maps(deriv, b)
    if alpha in maps.defined:
        return maps.defined[alpha]
    if alpha in maps.undefined:
        return maps.undefined[alpha]
    raise InvalidSDerivation(f"{alpha} is not a position of the derivation")


def residual_biposition(
    deriv: SDerivation, b: Position, bipos: RightBip
) -> RightBip | UndefinedResidual:
    """Residual of a right biposition: the type position rides along."""
    alpha, c = bipos
    moved = residual_position(deriv, b, alpha)
    if isinstance(moved, UndefinedResidual):
        return moved
    return moved, c


def quasi_residual_position(
    deriv: SDerivation, b: Position, alpha: Position
) -> Position | UndefinedResidual:
    """Extends residuation to the redex root (kept in place) and to the
    consumed variable axioms (sent where their argument lands).  Only the
    abstraction node of a region has no image."""
    maps = residual_maps(deriv, b)
    if alpha in maps.defined:
        return maps.defined[alpha]
    miss = maps.undefined.get(alpha)
    if miss is None:
        raise InvalidSDerivation(f"{alpha} is not a position of the derivation")
    if miss.case == "redex_root":
        return alpha
    if miss.case == "redex_variable":
        a = _region_of(maps.regions, alpha)
        return a + alpha[len(a) + 2:]
    return miss


def quasi_residual(
    deriv: SDerivation, b: Position, bipos: RightBip
) -> RightBip | UndefinedResidual:
    """Quasi-residuation on right bipositions; total on the right bisupport.

    At a region's abstraction node the type is split: the target part joins
    the type of the reduct at the region, and the domain entry on track k
    joins the argument relocated at the axiom spot of track k.  The pointed
    symbol is preserved except at the abstraction's type root.
    """
    alpha, c = bipos
    maps = residual_maps(deriv, b)
    miss = maps.undefined.get(alpha)
    if miss is not None and miss.case == "redex_abstraction":
        a = _region_of(maps.regions, alpha)
        if c == ():
            return a, ()
        if c[0] == 1:
            return a, c[1:]
        if c[0] in maps.axiom_spots[a]:
            return a + maps.axiom_spots[a][c[0]], c[1:]
        return UndefinedResidual("phantom_argument")
    moved = quasi_residual_position(deriv, b, alpha)
    if isinstance(moved, UndefinedResidual):
        return moved
    return moved, c


def right_bisupport(deriv: SDerivation) -> set[RightBip]:
    return {
        (a, c)
        for a, j in all_judgments(deriv).items()
        for c in type_positions(j.ty)
    }


# -- subject expansion -------------------------------------------------------------

TrackPolicy = Callable[[Position, Position, SType], int]
"""(region, occurrence inside the body, argument type) -> track of the axiom."""


def lenlex_track(w: Position) -> int:
    """Fixed injection from subject positions (letters 0, 1, 2) to tracks.

    Ranks positions in length-lexicographic order, base 3, starting at
    track 2.  The track of an occurrence never depends on which other
    occurrences are typed, which keeps expansion monotone.
    """
    value = 0
    for letter in w:
        if letter > 2:
            raise ValueError(f"{w} is not a subject position")
        value = value * 3 + letter
    return 2 + (3 ** len(w) - 1) // 2 + value


def uniform_track_policy(a: Position, w: Position, ty: SType) -> int:
    """Default policy: a fixed injection over arbitrary occurrence positions
    (tracks in the occurrence are allowed), independent of the derivation."""
    return 2 + position_code(w)


def reference_track_policy(reference: SDerivation) -> TrackPolicy:
    """Read the created axioms' tracks off a reference derivation of the
    expanded subject; gives exact expand-after-reduce round trips."""

    def policy(a: Position, w: Position, _ty: SType) -> int:
        node = node_at(reference, a + (1, 0) + w)
        if not isinstance(node, SAx):
            raise InvalidSDerivation(
                f"reference derivation has no axiom at {a + (1, 0) + w}"
            )
        return node.track

    return policy


def expand_s(
    deriv: SDerivation,
    b: Position,
    before: Term,
    policy: TrackPolicy | None = None,
) -> SDerivation:
    """Subject expansion: from a derivation of reduce_at(before, b), build a
    derivation of `before` whose contraction at b gives it back.

    In every region over b, the subderivations sitting on the substituted
    argument occurrences are cut out, replaced by fresh axioms for the bound
    variable, and reattached as argument premises on the tracks the policy
    assigns.  The conclusion is unchanged.
    """
    t = before
    reduct = deriv.subject
    if reduce_at(t, b) != reduct:
        raise SubjectMismatch("term does not reduce at b to the derivation's subject")
    if policy is None:
        policy = uniform_track_policy

    def go(node: SNode, nb: int, nr: int, rest: Position, a: Position) -> SNode:
        bnode = t.nodes[nb]
        if not rest:
            return expand_region(node, nb, nr, a)
        letter, rest2 = rest[0], rest[1:]
        rnode = reduct.nodes[nr]
        if letter == 0:
            return SAbs(go(node.child, bnode[1], rnode[1], rest2, a + (0,)))
        if letter == 1:
            return SApp(go(node.fun, bnode[1], rnode[1], rest2, a + (1,)), node.args)
        return SApp(
            node.fun,
            tuple(
                (k, go(arg, bnode[2], rnode[2], rest2, a + (k,)))
                for k, arg in node.args
            ),
        )

    def expand_region(node: SNode, nb: int, nr: int, a: Position) -> SNode:
        _, body_b, _ = _redex_parts(t, nb)
        premises: list[tuple[int, SNode]] = []

        def rebuild(nd: SNode, mb: int, mr: int, depth: int, w: Position) -> SNode:
            bnode = t.nodes[mb]
            if bnode[0] == BVAR and bnode[1] == depth:
                _, ty = judge_s(reduct, nd, mr)
                track = policy(a, w, ty)
                premises.append((track, nd))
                return SAx(track, ty)
            if bnode[0] in (BVAR, FREE):
                return nd
            rnode = reduct.nodes[mr]
            if bnode[0] == ABS:
                return SAbs(rebuild(nd.child, bnode[1], rnode[1], depth + 1, w + (0,)))
            return SApp(
                rebuild(nd.fun, bnode[1], rnode[1], depth, w + (1,)),
                tuple(
                    (k, rebuild(arg, bnode[2], rnode[2], depth, w + (k,)))
                    for k, arg in nd.args
                ),
            )

        body = rebuild(node, body_b, nr, 0, ())
        premises.sort(key=lambda p: p[0])
        tracks = [k for k, _ in premises]
        if len(set(tracks)) != len(tracks):
            raise InvalidSDerivation("expansion policy assigned a track twice")
        return SApp(SAbs(body), tuple(premises))

    out = SDerivation(t, go(deriv.root, 0, 0, b, ()))
    check_s(out)
    return out


# -- equinecessity -----------------------------------------------------------------

# A tagged biposition is ("r", a, c) for the type at a, or ("l", a, key, kc)
# for the context entry of `key` at a, where kc starts with the track.
Bip = tuple


def right_tagged(a: Position, c: Position = ()) -> Bip:
    return ("r", tuple(a), tuple(c))


def left_tagged(a: Position, key, kc: Position) -> Bip:
    return ("l", tuple(a), key, tuple(kc))


def _equi_adjacency(deriv: SDerivation) -> tuple[dict[Bip, set[Bip]], set[Bip]]:
    t = deriv.subject
    judgments = all_judgments(deriv)
    adj: dict[Bip, set[Bip]] = {}
    bisupport: set[Bip] = set()

    def connect(p: Bip, q: Bip) -> None:
        adj.setdefault(p, set()).add(q)
        adj.setdefault(q, set()).add(p)

    nodes: list[tuple[Position, SNode, int]] = []

    def walk(nd: SNode, n: int, a: Position) -> None:
        nodes.append((a, nd, n))
        term_node = t.nodes[n]
        if isinstance(nd, SAbs):
            walk(nd.child, term_node[1], a + (0,))
        elif isinstance(nd, SApp):
            walk(nd.fun, term_node[1], a + (1,))
            for k, arg in nd.args:
                walk(arg, term_node[2], a + (k,))

    walk(deriv.root, 0, ())

    for a, nd, n in nodes:
        j = judgments[a]
        # an arrow position and its target require each other inside one type
        ty_set = set(type_positions(j.ty))
        for c in ty_set:
            bisupport.add(("r", a, c))
            if c + (1,) in ty_set:
                connect(("r", a, c), ("r", a, c + (1,)))
        for key, s in j.context:
            if seq_tail(s) is not None:
                raise InvalidSDerivation(f"cofinite context entry for {key!r} at {a}")
            for k, entry in seq_entries(s):
                entry_set = set(type_positions(entry))
                for c in entry_set:
                    bisupport.add(("l", a, key, (k,) + c))
                    if c + (1,) in entry_set:
                        connect(
                            ("l", a, key, (k,) + c),
                            ("l", a, key, (k,) + c + (1,)),
                        )

        if isinstance(nd, SAx):
            key = t.nodes[n][1]
            for c in type_positions(j.ty):
                connect(("r", a, c), ("l", a, key, (nd.track,) + c))
        elif isinstance(nd, SAbs):
            connect(("r", a, ()), ("r", a + (0,), ()))
            for c in type_positions(judgments[a + (0,)].ty):
                connect(("r", a, (1,) + c), ("r", a + (0,), c))
            for k, entry in seq_entries(j.ty[1]):
                for c in type_positions(entry):
                    connect(("r", a, (k,) + c), ("l", a + (0,), 0, (k,) + c))
            for key, s in j.context:
                child_key = key + 1 if isinstance(key, int) else key
                for k, entry in seq_entries(s):
                    for c in type_positions(entry):
                        connect(
                            ("l", a, key, (k,) + c),
                            ("l", a + (0,), child_key, (k,) + c),
                        )
        elif isinstance(nd, SApp):
            for c in type_positions(j.ty):
                connect(("r", a, c), ("r", a + (1,), (1,) + c))
            for k, _arg in nd.args:
                for c in type_positions(judgments[a + (k,)].ty):
                    connect(("r", a + (1,), (k,) + c), ("r", a + (k,), c))
            child_letters = [1] + [k for k, _ in nd.args]
            child_ctxs = {le: judgments[a + (le,)].ctx() for le in child_letters}
            for key, s in j.context:
                for k, entry in seq_entries(s):
                    homes = [
                        le
                        for le in child_letters
                        if key in child_ctxs[le]
                        and any(k == k2 for k2, _ in seq_entries(child_ctxs[le][key]))
                    ]
                    if len(homes) != 1:
                        raise InvalidSDerivation(
                            f"context entry ({key!r}, {k}) at {a} is anchored "
                            f"in {len(homes)} premises"
                        )
                    for c in type_positions(entry):
                        connect(
                            ("l", a, key, (k,) + c),
                            ("l", a + (homes[0],), key, (k,) + c),
                        )
    return adj, bisupport


def equinecessary_closure(deriv: SDerivation, bips: Iterable[Bip]) -> frozenset:
    """Least superset of `bips` closed under the local flow of type symbols
    between a judgment, its premises, and its anchoring axioms.  A valid
    truncation of the derivation keeps or drops each connected component
    as a whole, so the closure is what any approximant containing `bips`
    must also contain.
    """
    if not is_quantitative(deriv):
        raise NotQuantitative("equinecessity requires a quantitative derivation")
    adj, bisupport = _equi_adjacency(deriv)
    start = [tuple(bp) for bp in bips]
    for bp in start:
        if bp not in bisupport:
            raise BipositionOutside(f"{bp} is outside the bisupport")
    seen: set[Bip] = set(start)
    queue = list(start)
    while queue:
        bp = queue.pop()
        for nb in adj.get(bp, ()):
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return frozenset(seen)


def equinecessary(deriv: SDerivation, p: Bip, q: Bip) -> bool:
    return tuple(q) in equinecessary_closure(deriv, [p])
