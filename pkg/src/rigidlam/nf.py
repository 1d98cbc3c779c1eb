"""Typing of normal forms from position data alone.

A track-indexed derivation typing a normal form is determined by the set of
positions it types (a *support candidate*) together with freely chosen types
at the positions nothing constrains (the tops of head spines).  This module
rebuilds the derivation from that data (*natural extension*), measures how far
the constraints attached to a single type symbol reach (*called rank*), and
produces the finite rank-n truncations of the typing of a regular normal form.

Derivation positions extend term positions: letter 0 enters an abstraction
body, 1 the function side of an application, and any letter >= 2 is an
argument track.  Collapsing tracks to 2 must land inside the support of the
subject term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .positions import Position, applicative_depth, code_position, position_code
from .terms import ABS, APP, BVAR, FREE, Term, TermError, subterm
from .reduction import is_normal
from .stypes import (
    InvalidSDerivation,
    SAbs,
    SApp,
    SAx,
    SDerivation,
    SJudgment,
    SType,
    check_s,
    seq,
    seq_entries,
    seq_get,
    seq_tail,
    stvar,
    type_label,
)
from .sdynamics import BipositionOutside

__all__ = [
    "NotNormalForm",
    "InvalidCandidate",
    "SupportCandidate",
    "UNCONSTRAINED",
    "PARTIAL",
    "NONZERO",
    "clev",
    "rank",
    "position_code",
    "code_position",
    "default_candidate_track",
    "default_track_inverse",
    "natural_extension",
    "NormalFormTypingFamily",
    "finite_extension_family",
    "full_support_family",
    "unforgetful_nf_typing",
    "rank_truncate",
    "called_rank",
    "is_unforgetful_s",
    "forgetful_spots",
    "hereditary_argument_subderivations",
]


class NotNormalForm(TermError):
    pass


class InvalidCandidate(TermError):
    pass


# -- ranks -------------------------------------------------------------------


def rank(a: Position) -> int:
    """max of the applicative depth and the largest letter of the position."""
    return max(applicative_depth(a), max(a, default=0))


# -- support candidates --------------------------------------------------------

UNCONSTRAINED = "unconstrained"
PARTIAL = "partial"
NONZERO = "nonzero"


@dataclass(frozen=True)
class SupportCandidate:
    """A finite set of derivation positions that some derivation of `term`
    could have as its support.

    Required shape: nonempty, closed under prefixes, collapses into the
    support of the term, and every position keeps its mandatory children
    (the body of an abstraction, the function side of an application).
    Argument tracks are optional.
    """

    term: Term
    positions: frozenset

    def __post_init__(self):
        A = self.positions
        if not A:
            raise InvalidCandidate("empty candidate")
        t = self.term
        for a in A:
            if a and a[:-1] not in A:
                raise InvalidCandidate(f"{a} present without its parent")
            try:
                node = t.nodes[t.node_at(a)]
            except TermError:
                raise InvalidCandidate(
                    f"{a} does not collapse into the subject support"
                ) from None
            kind = node[0]
            if kind == ABS and a + (0,) not in A:
                raise InvalidCandidate(f"abstraction at {a} lacks its body")
            if kind == APP and a + (1,) not in A:
                raise InvalidCandidate(f"application at {a} lacks its function side")

    def contains(self, a: Position) -> bool:
        return a in self.positions


def _contains_of(candidate) -> Callable[[Position], bool]:
    return candidate.contains


def clev(candidate, a: Position) -> tuple[str, int, Position]:
    """Kind, constrain level and anchor of a position of the candidate.

    The anchor is the nearest position whose type is a free choice: follow
    abstraction bodies upward (nonzero positions) or strip function-side
    steps downward (partial positions); a position that is neither is its
    own anchor (unconstrained).
    """
    contains = _contains_of(candidate)
    if not contains(a):
        raise InvalidCandidate(f"{a} is not in the candidate")
    if contains(a + (0,)):
        anchor = a + (0,)
        while contains(anchor + (0,)):
            anchor = anchor + (0,)
        return NONZERO, len(anchor) - len(a), anchor
    level = 0
    anchor = a
    while anchor and anchor[-1] == 1:
        anchor = anchor[:-1]
        level += 1
    if level == 0:
        return UNCONSTRAINED, 0, a
    return PARTIAL, level, anchor


# -- track policies -------------------------------------------------------------


def default_candidate_track(a: Position) -> int:
    """Default axiom-track policy: a fixed injection from positions to
    tracks >= 2 that does not depend on which other positions are typed."""
    return position_code(a) + 2


def default_track_inverse(track: int) -> Position | None:
    if track < 2:
        return None
    return code_position(track - 2)


# -- the placeholder type algebra ------------------------------------------------

_PLACEHOLDER = "x"


def _subst_placeholders(ty, solved: dict):
    if ty[0] == "v":
        return ty
    if ty[0] == _PLACEHOLDER:
        try:
            return solved[ty[1]]
        except KeyError:  # pragma: no cover - guarded by the call-order sort
            raise InvalidCandidate(f"cyclic type call at {ty[1]}") from None
    _, sq, target = ty
    entries = tuple(
        (k, _subst_placeholders(ety, solved)) for k, ety in seq_entries(sq)
    )
    return ("ar", ("sq", entries, seq_tail(sq)), _subst_placeholders(target, solved))


def _type_is_finite(ty) -> bool:
    if ty[0] == "v":
        return True
    _, sq, target = ty
    if seq_tail(sq) is not None:
        return False
    return _type_is_finite(target) and all(
        _type_is_finite(ety) for _, ety in seq_entries(sq)
    )


def _truncate_type(ty, n: int, ad: int = 0, mx: int = 0):
    """Drop every sequence entry whose position has rank above n."""
    if ty[0] == "v":
        return ty
    _, sq, target = ty
    kept = []
    for k, ety in seq_entries(sq):
        if max(ad + 1, mx, k) > n:
            continue
        kept.append((k, _truncate_type(ety, n, ad + 1, max(mx, k))))
    return ("ar", seq(kept), _truncate_type(target, n, ad, max(mx, 1)))


# -- occurrence bookkeeping ------------------------------------------------------


def _walk_candidate(t: Term, A: frozenset):
    """One pass over the candidate tree: term node kinds, argument tracks,
    and variable occurrences grouped by their binding abstraction."""
    node_kind: dict[Position, str] = {}
    arg_tracks: dict[Position, list[int]] = {}
    occ_by_binder: dict[Position, list[Position]] = {}
    children: dict[Position, list[Position]] = {}
    for a in A:
        if a:
            children.setdefault(a[:-1], []).append(a)
    stack = [((), 0, ())]  # position, graph node, enclosing abstraction positions
    while stack:
        a, n, env = stack.pop()
        node = t.nodes[n]
        kind = node[0]
        node_kind[a] = kind
        if kind == BVAR:
            j = node[1]
            if j < len(env):
                occ_by_binder.setdefault(env[-1 - j], []).append(a)
        elif kind == ABS:
            stack.append((a + (0,), node[1], env + (a,)))
        elif kind == APP:
            tracks = []
            for child in children.get(a, ()):
                letter = child[-1]
                if letter == 1:
                    stack.append((child, node[1], env))
                elif letter >= 2:
                    tracks.append(letter)
                    stack.append((child, node[2], env))
            arg_tracks[a] = sorted(tracks)
    return node_kind, arg_tracks, occ_by_binder


# -- natural extension -----------------------------------------------------------


def _assignment_function(assignment) -> Callable[[Position], SType]:
    if callable(assignment):
        return assignment
    return lambda a: assignment[a]


def natural_extension(
    candidate: SupportCandidate,
    assignment,
    policy: Callable[[Position], int] | None = None,
) -> SDerivation:
    """Build the unique derivation with the candidate as support whose types
    extend the given choices at unconstrained positions.

    `assignment` maps every unconstrained position (and only those, when
    given as a dict) to a finite type; `policy` injectively assigns a track
    >= 2 to every axiom position.
    """
    t = candidate.term
    if not is_normal(t):
        raise NotNormalForm("natural extensions exist over normal subjects only")
    A = candidate.positions
    if policy is None:
        policy = default_candidate_track

    node_kind, arg_tracks, occ_by_binder = _walk_candidate(t, A)
    kinds = {a: clev(candidate, a) for a in A}
    unconstrained = {a for a, (kind, _, _) in kinds.items() if kind == UNCONSTRAINED}
    if isinstance(assignment, dict):
        if set(assignment) != unconstrained:
            missing = unconstrained - set(assignment)
            extra = set(assignment) - unconstrained
            raise InvalidCandidate(
                f"assignment domain mismatch: missing {sorted(missing)}, "
                f"extra {sorted(extra)}"
            )
    tfun = _assignment_function(assignment)

    axiom_positions = [a for a in A if node_kind[a] in (BVAR, FREE)]
    tracks: dict[Position, int] = {}
    for a in axiom_positions:
        k = policy(a)
        if k < 2:
            raise InvalidCandidate(f"axiom track {k} at {a} is below 2")
        tracks[a] = k
    if len(set(tracks.values())) != len(tracks):
        raise InvalidCandidate("track policy is not injective on axiom positions")

    def call_type(a: Position):
        kind, level, anchor = kinds[a]
        base = tfun(anchor)
        if not _type_is_finite(base):
            raise InvalidCandidate(f"assigned type at {anchor} is not finite")
        if kind == UNCONSTRAINED:
            return base
        ty = base
        if kind == NONZERO:
            for i in range(level, 0, -1):
                binder = a + (0,) * (i - 1)
                entries = [
                    (tracks[a0], (_PLACEHOLDER, a0))
                    for a0 in occ_by_binder.get(binder, ())
                ]
                ty = ("ar", seq(entries), ty)
            return ty
        for i in range(level, 0, -1):
            app_node = anchor + (1,) * (level - i)
            entries = [
                (k, (_PLACEHOLDER, app_node + (k,)))
                for k in arg_tracks.get(app_node, ())
            ]
            ty = ("ar", seq(entries), ty)
        return ty

    # Calls only ever point at strictly larger (depth, length) positions, so
    # solving deepest-first grounds every placeholder in one pass.
    solved: dict[Position, SType] = {}
    for a in sorted(A, key=lambda p: (applicative_depth(p), len(p)), reverse=True):
        solved[a] = _subst_placeholders(call_type(a), solved)

    def build(a: Position):
        kind = node_kind[a]
        if kind in (BVAR, FREE):
            return SAx(tracks[a], solved[a])
        if kind == ABS:
            return SAbs(build(a + (0,)))
        return SApp(
            build(a + (1,)),
            tuple((k, build(a + (k,))) for k in arg_tracks.get(a, ())),
        )

    deriv = SDerivation(t, build(()))
    judgment = check_s(deriv)
    if judgment.ty != solved[()]:
        raise InvalidSDerivation(
            "solved conclusion type disagrees with the checked one"
        )  # pragma: no cover - internal consistency guard
    return deriv


# -- rank-indexed families --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NormalFormTypingFamily:
    """A rank-indexed family of finite derivations typing one normal form.

    `contains` decides membership in the (possibly infinite) position set,
    `positions_upto(n)` enumerates the members of rank <= n, and
    `unconstrained_type` gives the freely chosen type at each anchor.
    Members are pure functions of the rank.
    """

    term: Term
    contains: Callable[[Position], bool]
    positions_upto: Callable[[int], frozenset]
    unconstrained_type: Callable[[Position], SType]
    track_policy: Callable[[Position], int]
    track_inverse: Callable[[int], Position | None]
    min_rank: int = 1
    max_rank: int | None = None

    def member(self, n: int) -> SDerivation:
        return rank_truncate(self, n)

    def clev(self, a: Position) -> tuple[str, int, Position]:
        return clev(self, a)

    def called_rank(self, p) -> int:
        return called_rank(self, p)

    # -- limit-level unforgetfulness ------------------------------------------

    def limit_is_unforgetful(self, upto: int | None = None) -> bool:
        """Unforgetfulness of the limit of the family.

        A bounded family's limit is its top member, checked directly.  For an
        unbounded family, members grow along the rank index, so an empty
        sequence at a bad polarity survives into the limit exactly when some
        member keeps it empty forever; we certify the opposite by checking
        that every forgetful spot of member n is inhabited in member n+1, for
        each n in the window.
        """
        if self.max_rank is not None:
            return is_unforgetful_s(self.member(self.max_rank))
        if upto is None:
            upto = self.min_rank + 5
        for n in range(self.min_rank, upto):
            current = check_s(self.member(n))
            nxt = check_s(self.member(n + 1))
            for side, key, c in forgetful_spots(current):
                if _arrow_domain_is_empty(nxt, side, key, c):
                    return False
        return True


def finite_extension_family(
    candidate: SupportCandidate,
    assignment,
    policy: Callable[[Position], int] | None = None,
) -> NormalFormTypingFamily:
    """Wrap a finite candidate as a (bounded) rank-indexed family."""
    if policy is None:
        policy = default_candidate_track
    A = candidate.positions
    tfun = _assignment_function(assignment)
    inverse = {policy(a): a for a in A}
    top = max(rank(a) for a in A)
    node_kind, _, _ = _walk_candidate(candidate.term, A)
    # Rank 0 keeps only the all-zero positions; it yields a valid candidate
    # exactly when none of them is an application (whose function side would
    # already have rank 1).
    low = 0
    if any(
        node_kind[a] == APP for a in A if all(letter == 0 for letter in a)
    ):
        low = 1
    return NormalFormTypingFamily(
        term=candidate.term,
        contains=candidate.contains,
        positions_upto=lambda n: frozenset(a for a in A if rank(a) <= n),
        unconstrained_type=tfun,
        track_policy=policy,
        track_inverse=inverse.get,
        min_rank=min(low, top),
        max_rank=top,
    )


def full_support_family(
    t: Term,
    assignment: Callable[[Position], SType] | None = None,
    policy: Callable[[Position], int] | None = None,
) -> NormalFormTypingFamily:
    """Family over the whole support of the subject (argument track 2
    everywhere), defaulting to the same atom at every unconstrained anchor."""
    if not is_normal(t):
        raise NotNormalForm("the subject has a redex")
    if assignment is None:
        assignment = lambda a: stvar("o")
    if policy is None:
        policy = default_candidate_track
        inverse = default_track_inverse
    else:
        inverse = lambda k: None

    def contains(a: Position) -> bool:
        return all(letter <= 2 for letter in a) and t.in_support(a)

    def positions_upto(n: int) -> frozenset:
        out = set()
        stack = [((), 0, 0, 0)]  # position, node, applicative depth, max letter
        while stack:
            a, m, ad, mx = stack.pop()
            out.add(a)
            node = t.nodes[m]
            kind = node[0]
            if kind == ABS:
                stack.append((a + (0,), node[1], ad, mx))
            elif kind == APP:
                if max(ad, mx, 1) <= n:
                    stack.append((a + (1,), node[1], ad, max(mx, 1)))
                if max(ad + 1, mx, 2) <= n:
                    stack.append((a + (2,), node[2], ad + 1, max(mx, 2)))
        return frozenset(out)

    # Rank 0 only reaches through abstraction bodies; it is enough exactly
    # when the all-zero zone of the term is redex-free of applications.
    m = 0
    low = 0
    while t.nodes[m][0] == ABS:
        m = t.nodes[m][1]
    if t.nodes[m][0] == APP:
        low = 1
    return NormalFormTypingFamily(
        term=t,
        contains=contains,
        positions_upto=positions_upto,
        unconstrained_type=assignment,
        track_policy=policy,
        track_inverse=inverse,
        min_rank=low,
        max_rank=_finite_max_rank(t),
    )


def _finite_max_rank(t: Term) -> int | None:
    """Largest rank of a support position when the term is finite, else None."""
    # A term graph is finite as a tree iff no cycle is reachable from the root.
    seen: set[int] = set()
    stack = [(0, frozenset())]
    while stack:
        n, on_path = stack.pop()
        if n in on_path:
            return None
        if n in seen:
            continue
        seen.add(n)
        node = t.nodes[n]
        kind = node[0]
        if kind == ABS:
            stack.append((node[1], on_path | {n}))
        elif kind == APP:
            stack.append((node[1], on_path | {n}))
            stack.append((node[2], on_path | {n}))
    depth = {}

    def deepest(n: int) -> int:
        if n in depth:
            return depth[n]
        node = t.nodes[n]
        kind = node[0]
        if kind == ABS:
            d = deepest(node[1])
        elif kind == APP:
            d = max(deepest(node[1]), deepest(node[2]) + 1)
        else:
            d = 0
        depth[n] = d
        return d

    return max(deepest(0), 2 if any(k == APP for k, *_ in t.nodes) else 0)


def unforgetful_nf_typing(t: Term) -> NormalFormTypingFamily:
    """All-atom natural extension over the full support of a normal form."""
    return full_support_family(t)


def rank_truncate(family: NormalFormTypingFamily, n: int) -> SDerivation:
    """The finite member of rank n: keep positions of rank <= n and prune the
    unconstrained types to their rank <= n sequence entries."""
    A_n = family.positions_upto(n)
    candidate = SupportCandidate(family.term, frozenset(A_n))
    assignment = {}
    for a in A_n:
        kind, _, _ = clev(candidate, a)
        if kind == UNCONSTRAINED:
            assignment[a] = _truncate_type(family.unconstrained_type(a), n)
    return natural_extension(candidate, assignment, family.track_policy)


# -- called ranks ------------------------------------------------------------------


def _occurrence_key_at(t: Term, a: Position, a0: Position):
    """Context key under which the variable at a0 is visible at frame a,
    or None when it is bound strictly between the two."""
    node = t.nodes[t.node_at(a0)]
    if node[0] == FREE:
        return node[1]
    if node[0] != BVAR:
        return None
    zeros = sum(1 for letter in a0[len(a):] if letter == 0)
    key = node[1] - zeros
    return key if key >= 0 else None


def called_rank(family: NormalFormTypingFamily, p) -> int:
    """Largest rank a biposition forces into any member containing it.

    Accepts the tagged bipositions ("r", a, c) and ("l", a, key, kc) used by
    the reduction-dynamics module.
    """
    t = family.term
    if p and p[0] == "l":
        _, a, key, kc = p
        if not kc:
            raise BipositionOutside(f"context biposition {p} lacks a track")
        if not family.contains(a):
            raise BipositionOutside(f"{a} is not a typed position")
        track, c = kc[0], tuple(kc[1:])
        a0 = family.track_inverse(track)
        if (
            a0 is None
            or len(a0) < len(a)
            or a0[: len(a)] != a
            or not family.contains(a0)
            or _occurrence_key_at(t, a, a0) != key
        ):
            raise BipositionOutside(f"no axiom feeds track {track} of {key!r} at {a}")
        return _trace_right(family, a0, c)
    if p and p[0] == "r":
        _, a, c = p
        return _trace_right(family, a, tuple(c))
    raise BipositionOutside(f"not a tagged biposition: {p!r}")


def _trace_right(family: NormalFormTypingFamily, a: Position, c: Position) -> int:
    t = family.term
    while True:
        if not family.contains(a):
            raise BipositionOutside(f"{a} is not a typed position")
        kind, level, anchor = clev(family, a)
        if kind == UNCONSTRAINED:
            if type_label(family.unconstrained_type(a), c) is None:
                raise BipositionOutside(f"{c} is outside the type at {a}")
            return max(rank(a), rank(c))
        ones = 0
        while ones < len(c) and ones < level and c[ones] == 1:
            ones += 1
        if ones == level:
            # inside the freely chosen type of the anchor
            if type_label(family.unconstrained_type(anchor), c[level:]) is None:
                raise BipositionOutside(f"{c} is outside the type at {a}")
            return max(rank(a), rank(c))
        if ones == len(c):
            # one of the arrows of the spine itself
            return max(rank(a), rank(c))
        track = c[ones]
        if track < 2:
            raise BipositionOutside(f"{c} is outside the type at {a}")
        rest = c[ones + 1 :]
        if kind == NONZERO:
            binder = a + (0,) * ones  # abstraction introducing this sequence
            a0 = family.track_inverse(track)
            if (
                a0 is None
                or not family.contains(a0)
                or len(a0) <= len(binder)
                or a0[: len(binder) + 1] != binder + (0,)
                or _occurrence_key_at(t, binder + (0,), a0) != 0
            ):
                raise BipositionOutside(
                    f"track {track} names no occurrence of the binder at {binder}"
                )
            a, c = a0, rest
        else:
            callee = anchor + (1,) * (level - 1 - ones) + (track,)
            if not family.contains(callee):
                raise BipositionOutside(
                    f"track {track} names no typed argument under {anchor}"
                )
            a, c = callee, rest


# -- unforgetfulness ---------------------------------------------------------------


def _empty_seq_polarities_ty(ty, pol: int, out: set[int]) -> None:
    if ty[0] == "v":
        return
    _empty_seq_polarities_seq(ty[1], -pol, out)
    _empty_seq_polarities_ty(ty[2], pol, out)


def _empty_seq_polarities_seq(sq, pol: int, out: set[int]) -> None:
    entries = seq_entries(sq)
    if not entries and seq_tail(sq) is None:
        out.add(pol)
        return
    for _, ty in entries:
        _empty_seq_polarities_ty(ty, pol, out)
    if seq_tail(sq) is not None:
        _empty_seq_polarities_ty(seq_tail(sq)[1], pol, out)


def is_unforgetful_s(x) -> bool:
    """No empty sequence negatively in the context nor positively in the type.

    Polarity flips only when entering arrow domains; context entries and the
    concluded type are both walked from positive roots.
    """
    judgment = check_s(x) if isinstance(x, SDerivation) else x
    for _, sq in judgment.context:
        polarities: set[int] = set()
        _empty_seq_polarities_seq(sq, 1, polarities)
        if -1 in polarities:
            return False
    polarities = set()
    _empty_seq_polarities_ty(judgment.ty, 1, polarities)
    return 1 not in polarities


def forgetful_spots(judgment: SJudgment) -> frozenset:
    """Addresses of the empty sequences that make the judgment forgetful.

    Each spot is (side, key, c) where side is "ctx" or "ty", key the context
    key (None on the type side), and c the position of the arrow whose domain
    is the offending empty sequence.
    """
    out: set[tuple] = set()

    def walk_ty(side, key, ty, c, pol):
        if ty[0] == "v":
            return
        walk_seq(side, key, ty[1], c, -pol, c)
        walk_ty(side, key, ty[2], c + (1,), pol)

    def walk_seq(side, key, sq, c, pol, arrow_at):
        entries = seq_entries(sq)
        if not entries and seq_tail(sq) is None:
            bad = -1 if side == "ctx" else 1
            if pol == bad:
                out.add((side, key, arrow_at))
            return
        for k, ty in entries:
            walk_ty(side, key, ty, c + (k,), pol)
        if seq_tail(sq) is not None:
            walk_ty(side, key, seq_tail(sq)[1], c + (seq_tail(sq)[0],), pol)

    for key, sq in judgment.context:
        for k, ty in seq_entries(sq):
            walk_ty("ctx", key, ty, (k,), 1)
    walk_ty("ty", None, judgment.ty, (), 1)
    return frozenset(out)


def _arrow_domain_is_empty(judgment: SJudgment, side, key, c) -> bool:
    """Whether the arrow at the given spot still has an empty domain."""
    if side == "ty":
        ty = judgment.ty
        path = c
    else:
        sq = judgment.ctx().get(key)
        if sq is None:
            return True
        ty = seq_get(sq, c[0])
        if ty is None:
            return True
        path = c[1:]
    for letter in path:
        if ty[0] != "ar":
            return True
        if letter == 1:
            ty = ty[2]
        else:
            nxt = seq_get(ty[1], letter)
            if nxt is None:
                return True
            ty = nxt
    if ty[0] != "ar":
        return True
    return not seq_entries(ty[1]) and seq_tail(ty[1]) is None


# -- hereditary argument extraction --------------------------------------------------


def hereditary_argument_subderivations(
    deriv: SDerivation,
) -> list[tuple[Position, int, SDerivation]]:
    """Subderivations typing the arguments of the head variable.

    The subject must be in head normal form: strip the leading abstractions,
    then collect every argument premise along the function spine.  Each entry
    is (derivation position of the premise, its track, the premise rebased as
    a standalone derivation of the argument subterm).
    """
    t = deriv.subject
    node = deriv.root
    a: Position = ()
    while isinstance(node, SAbs):
        node = node.child
        a = a + (0,)
    out: list[tuple[Position, int, SDerivation]] = []
    while isinstance(node, SApp):
        for k, child in node.args:
            out.append((a + (k,), k, SDerivation(subterm(t, a + (k,)), child)))
        node = node.fun
        a = a + (1,)
    return sorted(out, key=lambda item: item[0])
