"""Rigid non-idempotent intersection types: tracked sequences instead of
multisets.

A sequence type maps finitely or cofinitely many tracks (integers >= 2) to
types:

    ('sq', entries, tail)    entries: sorted tuple of (track, type), distinct
                             tracks; tail: None or (start, type) meaning every
                             track >= start carries that type

Types:

    ('v', name)              base type variable
    ('ar', seq, target)      arrow with a sequence domain

Type positions: 1 is the arrow target, a track k >= 2 is that domain entry.

Derivation nodes over a subject term:

    SAx(track, ty)    variable axiom; `track` is where the axiom's type sits
                      in the context entry of its variable
    SAbs(child)
    SApp(fun, args)   args: tuple of (track, node), distinct tracks >= 2
    SHyp(ty, ctx)     an unproven leaf holding an asserted judgment; useful
                      for finite prefixes of infinite derivations and never
                      accepted by the plain checker

Derivation positions: 0 under SAbs, 1 to the function of SApp, the track k
to the argument on track k.  Erasing tracks to 2 (the collapse of positions)
projects a derivation position onto a subject position.

Contexts map free names or de Bruijn indices to sequence types.  They are
not stored: the checker recomputes them from the axioms, so a derivation
without hypothesis leaves that checks is quantitative by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from .positions import Position
from .terms import ABS, APP, BVAR, FREE, Term, TermError
from . import r0


SType = tuple


def stvar(name: str) -> SType:
    return ("v", name)


SO = ("v", "o")


class InvalidSDerivation(TermError):
    pass


class TrackClash(InvalidSDerivation):
    pass


# -- sequences ----------------------------------------------------------------


def seq(pairs=(), tail: tuple | None = None) -> tuple:
    """Build a canonical sequence type from (track, type) pairs and an
    optional cofinite tail (start, type)."""
    entries = sorted(pairs)
    tracks = [k for k, _ in entries]
    if len(set(tracks)) != len(tracks):
        raise TrackClash(f"duplicate tracks in {tracks}")
    if any(k < 2 for k in tracks):
        raise InvalidSDerivation("tracks start at 2")
    if tail is not None:
        start, ty = tail
        if any(k >= start for k in tracks):
            raise InvalidSDerivation("explicit entries must sit below the tail")
        # absorb entries that touch the tail with the same type
        while entries and entries[-1] == (start - 1, ty):
            entries.pop()
            start -= 1
        tail = (start, ty)
    return ("sq", tuple(entries), tail)


EMPTY_SEQ = seq()


def seq_entries(s: tuple) -> tuple:
    return s[1]


def seq_tail(s: tuple) -> tuple | None:
    return s[2]


def seq_is_finite(s: tuple) -> bool:
    return s[2] is None


def seq_get(s: tuple, track: int):
    for k, ty in s[1]:
        if k == track:
            return ty
    if s[2] is not None and track >= s[2][0]:
        return s[2][1]
    return None


def seq_tracks(s: tuple) -> list[int]:
    """Finite list of explicit tracks; raises on cofinite sequences."""
    if s[2] is not None:
        raise InvalidSDerivation("cofinite sequence has infinitely many tracks")
    return [k for k, _ in s[1]]


def seq_union(a: tuple, b: tuple) -> tuple:
    """Disjoint union; overlapping tracks raise TrackClash."""
    if a[2] is not None and b[2] is not None:
        raise TrackClash("two cofinite tails always overlap")
    tail = a[2] or b[2]
    entries = list(a[1]) + list(b[1])
    if tail is not None:
        start, ty = tail
        for k, _ in entries:
            if k >= start:
                raise TrackClash(f"track {k} overlaps the cofinite tail")
    return seq(entries, tail)


def sarrow(domain: tuple, target: SType) -> SType:
    return ("ar", domain, target)


def is_s_type(ty) -> bool:
    if not isinstance(ty, tuple) or not ty:
        return False
    if ty[0] == "v":
        return len(ty) == 2 and isinstance(ty[1], str)
    if ty[0] == "ar":
        s = ty[1]
        if not (isinstance(s, tuple) and len(s) == 3 and s[0] == "sq"):
            return False
        ok = all(isinstance(k, int) and is_s_type(u) for k, u in s[1])
        if s[2] is not None:
            ok = ok and isinstance(s[2][0], int) and is_s_type(s[2][1])
        return ok and is_s_type(ty[2])
    return False


# -- type positions -------------------------------------------------------------


def type_label(ty: SType, c: Position):
    """Symbol at a type position: '->' for arrows, the name for variables;
    None when the position is outside the type's support."""
    cur = ty
    for letter in c:
        if cur[0] != "ar":
            return None
        if letter == 1:
            cur = cur[2]
        else:
            nxt = seq_get(cur[1], letter)
            if nxt is None:
                return None
            cur = nxt
    return "->" if cur[0] == "ar" else cur


def seq_label(s: tuple, c: Position):
    """Symbol at a position of a sequence: the first letter picks a track."""
    if not c:
        return None
    ty = seq_get(s, c[0])
    return None if ty is None else type_label(ty, c[1:])


def seq_positions(s: tuple) -> list[Position]:
    """Finite support of a sequence; raises on cofinite tails."""
    if not seq_is_finite(s):
        raise InvalidSDerivation("cofinite sequence has infinite support")
    out: list[Position] = []
    for k, ty in seq_entries(s):
        out.extend((k,) + c for c in type_positions(ty))
    return out


def type_positions(ty: SType) -> list[Position]:
    """Finite support of a type; raises on cofinite sequences."""
    out: list[Position] = []

    def go(cur: SType, prefix: Position) -> None:
        out.append(prefix)
        if cur[0] == "ar":
            if not seq_is_finite(cur[1]):
                raise InvalidSDerivation("cofinite sequence has infinite support")
            for k, u in seq_entries(cur[1]):
                go(u, prefix + (k,))
            go(cur[2], prefix + (1,))

    go(ty, ())
    return out


# -- collapse and lift for types -------------------------------------------------


def collapse_sty(ty: SType) -> r0.R0Type:
    if ty[0] == "v":
        return ty
    s = ty[1]
    if not seq_is_finite(s):
        raise InvalidSDerivation("cannot collapse a cofinite sequence to a multiset")
    return ("ar", r0.mset(collapse_sty(u) for _, u in seq_entries(s)), collapse_sty(ty[2]))


def lift_ty(ty: r0.R0Type) -> SType:
    """Canonical rigidification: multiset elements in sorted order receive
    consecutive tracks starting at 2."""
    if ty[0] == "v":
        return ty
    entries = [(2 + i, lift_ty(u)) for i, u in enumerate(ty[1])]
    return ("ar", seq(entries), lift_ty(ty[2]))


# -- derivations -----------------------------------------------------------------


@dataclass(frozen=True)
class SAx:
    track: int
    ty: SType


@dataclass(frozen=True)
class SAbs:
    child: "SNode"


@dataclass(frozen=True)
class SApp:
    fun: "SNode"
    args: tuple[tuple[int, "SNode"], ...]

    def __post_init__(self):
        tracks = [k for k, _ in self.args]
        if tracks != sorted(tracks) or len(set(tracks)) != len(tracks):
            raise InvalidSDerivation("argument tracks must be sorted and distinct")
        if any(k < 2 for k in tracks):
            raise InvalidSDerivation("argument tracks start at 2")


@dataclass(frozen=True)
class SHyp:
    ty: SType
    ctx: tuple  # frozen context, see freeze_sctx


SNode = SAx | SAbs | SApp | SHyp


@dataclass(frozen=True)
class SDerivation:
    subject: Term
    root: SNode


def freeze_sctx(ctx: dict) -> tuple:
    return tuple(sorted(ctx.items(), key=lambda kv: (isinstance(kv[0], str), kv[0])))


@dataclass(frozen=True)
class SJudgment:
    context: tuple
    ty: SType

    def ctx(self) -> dict:
        return dict(self.context)


def sctx_union(a: dict, b: dict, where: Position) -> dict:
    out = dict(a)
    for key, s in b.items():
        if key in out:
            try:
                out[key] = seq_union(out[key], s)
            except TrackClash as exc:
                raise TrackClash(f"context clash on {key!r} at {where}: {exc}") from None
        else:
            out[key] = s
    return out


def sctx_shift(ctx: dict) -> tuple[tuple, dict]:
    binder = ctx.get(0, EMPTY_SEQ)
    out = {}
    for key, s in ctx.items():
        if isinstance(key, int):
            if key == 0:
                continue
            out[key - 1] = s
        else:
            out[key] = s
    return binder, out


def size_s(node_or_deriv) -> int:
    node = node_or_deriv.root if isinstance(node_or_deriv, SDerivation) else node_or_deriv
    if isinstance(node, (SAx, SHyp)):
        return 1
    if isinstance(node, SAbs):
        return 1 + size_s(node.child)
    return 1 + size_s(node.fun) + sum(size_s(a) for _, a in node.args)


def judge_s(
    t: Term, node: SNode, n: int, path: Position = (), allow_hypotheses: bool = False
) -> tuple[dict, SType]:
    term_node = t.nodes[n]
    kind = term_node[0]
    if isinstance(node, SHyp):
        if not allow_hypotheses:
            raise InvalidSDerivation(f"unproven hypothesis leaf at {path}")
        return dict(node.ctx), node.ty
    if isinstance(node, SAx):
        if kind not in (BVAR, FREE):
            raise InvalidSDerivation(f"axiom over a non-variable at {path}")
        return {term_node[1]: seq([(node.track, node.ty)])}, node.ty
    if isinstance(node, SAbs):
        if kind != ABS:
            raise InvalidSDerivation(f"abstraction rule over non-abstraction at {path}")
        cctx, cty = judge_s(t, node.child, term_node[1], path + (0,), allow_hypotheses)
        binder, rest = sctx_shift(cctx)
        return rest, ("ar", binder, cty)
    if kind != APP:
        raise InvalidSDerivation(f"application rule over non-application at {path}")
    fctx, fty = judge_s(t, node.fun, term_node[1], path + (1,), allow_hypotheses)
    if not (isinstance(fty, tuple) and fty[0] == "ar"):
        raise InvalidSDerivation(f"function part has non-arrow type at {path}")
    domain = fty[1]
    if not seq_is_finite(domain):
        raise InvalidSDerivation(
            f"cofinite domain cannot be matched by finitely many arguments at {path}"
        )
    expected = dict(seq_entries(domain))
    given: dict[int, SType] = {}
    ctx = fctx
    for k, arg in node.args:
        actx, aty = judge_s(t, arg, term_node[2], path + (k,), allow_hypotheses)
        given[k] = aty
        ctx = sctx_union(ctx, actx, path)
    if given != expected:
        raise InvalidSDerivation(
            f"arguments {sorted(given)} do not realize the domain "
            f"{sorted(expected)} at {path}"
        )
    return ctx, fty[2]


def check_s(deriv: SDerivation, allow_hypotheses: bool = False) -> SJudgment:
    ctx, ty = judge_s(deriv.subject, deriv.root, 0, (), allow_hypotheses)
    return SJudgment(freeze_sctx(ctx), ty)


def has_hypotheses(node_or_deriv) -> bool:
    node = node_or_deriv.root if isinstance(node_or_deriv, SDerivation) else node_or_deriv
    if isinstance(node, SHyp):
        return True
    if isinstance(node, SAbs):
        return has_hypotheses(node.child)
    if isinstance(node, SApp):
        return has_hypotheses(node.fun) or any(has_hypotheses(a) for _, a in node.args)
    return False


def is_quantitative(deriv: SDerivation) -> bool:
    """Every context entry is anchored at an axiom.  Since the checker
    rebuilds contexts from the axioms, this holds exactly when the
    derivation checks without hypothesis leaves."""
    if has_hypotheses(deriv):
        return False
    try:
        check_s(deriv)
    except InvalidSDerivation:
        return False
    return True


# -- derivation positions --------------------------------------------------------


def node_at(deriv: SDerivation, a: Position) -> SNode:
    node = deriv.root
    for letter in a:
        if isinstance(node, SAbs) and letter == 0:
            node = node.child
        elif isinstance(node, SApp) and letter == 1:
            node = node.fun
        elif isinstance(node, SApp) and letter >= 2:
            for k, arg in node.args:
                if k == letter:
                    node = arg
                    break
            else:
                raise InvalidSDerivation(f"no argument on track {letter} at {a}")
        else:
            raise InvalidSDerivation(f"position {a} leaves the derivation")
    return node


def supp_s(node_or_deriv) -> list[Position]:
    node = node_or_deriv.root if isinstance(node_or_deriv, SDerivation) else node_or_deriv
    out: list[Position] = []

    def go(nd: SNode, prefix: Position) -> None:
        out.append(prefix)
        if isinstance(nd, SAbs):
            go(nd.child, prefix + (0,))
        elif isinstance(nd, SApp):
            go(nd.fun, prefix + (1,))
            for k, arg in nd.args:
                go(arg, prefix + (k,))

    go(node, ())
    return sorted(out, key=lambda p: (len(p), p))


def subject_node_at(deriv: SDerivation, a: Position) -> int:
    """Subject graph node under a derivation position (tracks collapse to 2)."""
    t = deriv.subject
    n = 0
    for letter in a:
        node = t.nodes[n]
        if node[0] == ABS and letter == 0:
            n = node[1]
        elif node[0] == APP and letter == 1:
            n = node[1]
        elif node[0] == APP and letter >= 2:
            n = node[2]
        else:
            raise InvalidSDerivation(f"derivation position {a} leaves the subject")
    return n


def judgment_at(deriv: SDerivation, a: Position, allow_hypotheses: bool = False) -> SJudgment:
    node = node_at(deriv, a)
    n = subject_node_at(deriv, a)
    ctx, ty = judge_s(deriv.subject, node, n, a, allow_hypotheses)
    return SJudgment(freeze_sctx(ctx), ty)


def all_judgments(
    deriv: SDerivation, allow_hypotheses: bool = False
) -> dict[Position, SJudgment]:
    """Judgments of every derivation position, in one bottom-up pass."""
    t = deriv.subject
    out: dict[Position, SJudgment] = {}

    def go(node: SNode, n: int, path: Position) -> tuple[dict, SType]:
        term_node = t.nodes[n]
        if isinstance(node, SHyp):
            if not allow_hypotheses:
                raise InvalidSDerivation(f"unproven hypothesis leaf at {path}")
            result = dict(node.ctx), node.ty
        elif isinstance(node, SAx):
            result = {term_node[1]: seq([(node.track, node.ty)])}, node.ty
        elif isinstance(node, SAbs):
            cctx, cty = go(node.child, term_node[1], path + (0,))
            binder, rest = sctx_shift(cctx)
            result = rest, ("ar", binder, cty)
        else:
            fctx, fty = go(node.fun, term_node[1], path + (1,))
            ctx = fctx
            for k, arg in node.args:
                actx, _ = go(arg, term_node[2], path + (k,))
                ctx = sctx_union(ctx, actx, path)
            result = ctx, fty[2]
        out[path] = SJudgment(freeze_sctx(result[0]), result[1])
        return result

    go(deriv.root, 0, ())
    return out


def axiom_position(deriv: SDerivation, a: Position, key, track: int,
                   allow_hypotheses: bool = False) -> Position:
    """Position of the axiom anchoring context entry (key, track) of the
    judgment at `a`."""
    node = node_at(deriv, a)
    n = subject_node_at(deriv, a)

    def go(nd: SNode, m: int, prefix: Position, depth_key) -> Position | None:
        term_node = deriv.subject.nodes[m]
        if isinstance(nd, SAx):
            if term_node[1] == depth_key and nd.track == track:
                return prefix
            return None
        if isinstance(nd, SAbs):
            inner = depth_key + 1 if isinstance(depth_key, int) else depth_key
            return go(nd.child, term_node[1], prefix + (0,), inner)
        if isinstance(nd, SApp):
            hit = go(nd.fun, term_node[1], prefix + (1,), depth_key)
            if hit is not None:
                return hit
            for k, arg in nd.args:
                hit = go(arg, term_node[2], prefix + (k,), depth_key)
                if hit is not None:
                    return hit
        return None

    hit = go(node, n, a, key)
    if hit is None:
        raise InvalidSDerivation(
            f"no axiom anchors ({key!r}, track {track}) below {a}"
        )
    return hit


# -- collapse and lift for derivations --------------------------------------------


def collapse_deriv(deriv: SDerivation) -> r0.R0Derivation:
    """Forget tracks: sequences become multisets, arguments keep track order."""

    def go(node: SNode) -> r0.RNode:
        if isinstance(node, SHyp):
            raise InvalidSDerivation("cannot collapse a hypothesis leaf")
        if isinstance(node, SAx):
            return r0.RAx(collapse_sty(node.ty))
        if isinstance(node, SAbs):
            return r0.RAbs(go(node.child))
        return r0.RApp(go(node.fun), tuple(go(arg) for _, arg in node.args))

    return r0.R0Derivation(deriv.subject, go(deriv.root))


def lift_r0_to_s(deriv: r0.R0Derivation) -> SDerivation:
    """Canonical rigidification of a derivation.

    Application arguments receive consecutive tracks from 2 in the order of
    their (sorted) types, matching lift_ty on the function's domain.  Axiom
    context tracks are 2 + the rank of the axiom among its variable's
    axioms: for binders the rank follows the domain pairing, for free names
    the rank is position order (shortlex).
    """
    t = deriv.subject

    # mutable shadow tree: ['ax', track, ty] | ['abs', child] | ['app', fun, [(k, child)..]]
    def build(node: r0.RNode, n: int, path: Position):
        term_node = t.nodes[n]
        if isinstance(node, r0.RAx):
            m = ["ax", None, lift_ty(node.ty)]
            return m, node.ty, {term_node[1]: [(path, node.ty, m)]}
        if isinstance(node, r0.RAbs):
            child, cty, anchors = build(node.child, term_node[1], path + (0,))
            mine = anchors.pop(0, [])
            # pair axioms with the sorted multiset: ties resolved shortlex
            mine.sort(key=lambda rec: (rec[1], (len(rec[0]), rec[0])))
            for j, (_, _, ref) in enumerate(mine):
                ref[1] = 2 + j
            out = {}
            for key, recs in anchors.items():
                out[key - 1 if isinstance(key, int) else key] = recs
            return ["abs", child], ("ar", r0.mset(ty for _, ty, _ in mine), cty), out
        fun_m, fun_ty, anchors = build(node.fun, term_node[1], path + (1,))
        order = sorted(
            range(len(node.args)),
            key=lambda i: (_quick_type(t, node.args[i], term_node[2]), i),
        )
        tracks = {idx: 2 + j for j, idx in enumerate(order)}
        arg_pairs = []
        for i, arg in enumerate(node.args):
            k = tracks[i]
            am, aty, aanch = build(arg, term_node[2], path + (k,))
            arg_pairs.append((k, am))
            for key, recs in aanch.items():
                anchors.setdefault(key, []).extend(recs)
        arg_pairs.sort(key=lambda p: p[0])
        return ["app", fun_m, arg_pairs], fun_ty[2], anchors

    def _quick_type(term: Term, node: r0.RNode, n: int) -> r0.R0Type:
        _, ty = r0.judge(term, node, n)
        return ty

    root_m, _, anchors = build(deriv.root, 0, ())
    for key, recs in anchors.items():
        recs.sort(key=lambda rec: (len(rec[0]), rec[0]))
        for j, (_, _, ref) in enumerate(recs):
            ref[1] = 2 + j

    def freeze(m) -> SNode:
        if m[0] == "ax":
            return SAx(m[1], m[2])
        if m[0] == "abs":
            return SAbs(freeze(m[1]))
        return SApp(freeze(m[1]), tuple((k, freeze(c)) for k, c in m[2]))

    out = SDerivation(t, freeze(root_m))
    check_s(out)
    return out
