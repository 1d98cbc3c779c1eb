"""Non-idempotent intersection types with multiset intersections.

Types are nested tuples:

    ('v', name)            base type variable
    ('ar', mset, target)   arrow whose domain is a finite multiset of types

A multiset is a sorted tuple of types (Python's tuple ordering is a total
order on these shapes, so sorting gives a canonical representative).  The
empty multiset () types an argument that is never used.

Derivations are trees over a subject term:

    RAx(ty)          variable axiom        x : [ty] |- x : ty
    RAbs(child)      abstraction           moves the binder's multiset into
                                           the arrow domain
    RApp(fun, args)  application           one argument derivation per
                                           element of the function's domain

Axioms carry only their type; which variable they concern is read off the
subject, so the same derivation tree survives binding and substitution of
the subject unchanged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .reduction import HeadNormal, HeadRedex, head_decompose, head_step
from .terms import ABS, APP, BVAR, FREE, Term, TermError


R0Type = tuple

O = ("v", "o")


def tvar(name: str) -> R0Type:
    return ("v", name)


def mset(types) -> tuple[R0Type, ...]:
    return tuple(sorted(types))


def arrow(domain, target: R0Type) -> R0Type:
    return ("ar", mset(domain), target)


def is_r0_type(ty) -> bool:
    if not isinstance(ty, tuple) or not ty:
        return False
    if ty[0] == "v":
        return len(ty) == 2 and isinstance(ty[1], str)
    if ty[0] == "ar":
        if len(ty) != 3 or not isinstance(ty[1], tuple):
            return False
        return (
            ty[1] == mset(ty[1])
            and all(is_r0_type(s) for s in ty[1])
            and is_r0_type(ty[2])
        )
    return False


# -- contexts -----------------------------------------------------------------

Context = dict  # key: str free name or int de Bruijn index; value: multiset


def ctx_sum(*contexts: Context) -> Context:
    out: Context = {}
    for ctx in contexts:
        for key, m in ctx.items():
            out[key] = mset(out.get(key, ()) + m)
    return out


def ctx_drop_binder(ctx: Context) -> tuple[tuple[R0Type, ...], Context]:
    """Take index 0 out of a context and shift the remaining indices down."""
    binder = ctx.get(0, ())
    out: Context = {}
    for key, m in ctx.items():
        if isinstance(key, int):
            if key == 0:
                continue
            out[key - 1] = m
        else:
            out[key] = m
    return binder, out


def freeze_ctx(ctx: Context) -> tuple:
    return tuple(sorted(ctx.items(), key=lambda kv: (isinstance(kv[0], str), kv[0])))


# -- derivations --------------------------------------------------------------


@dataclass(frozen=True)
class RAx:
    ty: R0Type


@dataclass(frozen=True)
class RAbs:
    child: "RNode"


@dataclass(frozen=True)
class RApp:
    fun: "RNode"
    args: tuple["RNode", ...]


RNode = RAx | RAbs | RApp


@dataclass(frozen=True)
class R0Derivation:
    subject: Term
    root: RNode


@dataclass(frozen=True)
class Judgment:
    context: tuple  # frozen context, see freeze_ctx
    ty: R0Type

    def ctx(self) -> Context:
        return dict(self.context)


class InvalidDerivation(TermError):
    pass


def size(node_or_deriv) -> int:
    node = node_or_deriv.root if isinstance(node_or_deriv, R0Derivation) else node_or_deriv
    if isinstance(node, RAx):
        return 1
    if isinstance(node, RAbs):
        return 1 + size(node.child)
    return 1 + size(node.fun) + sum(size(a) for a in node.args)


def judge(t: Term, node: RNode, n: int, path: tuple = ()) -> tuple[Context, R0Type]:
    """Recompute the judgment of a derivation node over subject node n.

    Context keys are de Bruijn indices relative to n (or free names), so
    judging an open subtree works the same way as judging the root.
    """
    term_node = t.nodes[n]
    kind = term_node[0]
    if isinstance(node, RAx):
        if kind in (BVAR, FREE):
            return {term_node[1]: (node.ty,)}, node.ty
        raise InvalidDerivation(f"axiom over a non-variable at {path}")
    if isinstance(node, RAbs):
        if kind != ABS:
            raise InvalidDerivation(f"abstraction rule over non-abstraction at {path}")
        cctx, cty = judge(t, node.child, term_node[1], path + (0,))
        binder, rest = ctx_drop_binder(cctx)
        return rest, ("ar", binder, cty)
    if kind != APP:
        raise InvalidDerivation(f"application rule over non-application at {path}")
    fctx, fty = judge(t, node.fun, term_node[1], path + (1,))
    if not (isinstance(fty, tuple) and fty[0] == "ar"):
        raise InvalidDerivation(f"function part has non-arrow type at {path}")
    arg_results = [
        judge(t, arg, term_node[2], path + (2, i)) for i, arg in enumerate(node.args)
    ]
    if mset(ty for _, ty in arg_results) != fty[1]:
        raise InvalidDerivation(
            f"argument types {mset(ty for _, ty in arg_results)} do not "
            f"match the domain {fty[1]} at {path}"
        )
    return ctx_sum(fctx, *(ctx for ctx, _ in arg_results)), fty[2]


def check_r0(deriv: R0Derivation) -> Judgment:
    ctx, ty = judge(deriv.subject, deriv.root, 0)
    return Judgment(freeze_ctx(ctx), ty)


# -- substitution and head steps ----------------------------------------------


@dataclass(frozen=True)
class SubstReport:
    """Size bookkeeping: result = body + sum(arguments) - occurrences."""

    body_size: int
    argument_sizes: tuple[int, ...]
    occurrences: int
    result_size: int


def subst_deriv(
    t: Term, body_node: int, body: RNode, args: tuple[tuple[RNode, R0Type], ...]
) -> tuple[RNode, SubstReport]:
    """Replace each axiom of the binder (index 0 at the body root) by an
    argument derivation of the same type."""
    remaining = list(args)

    def go(node: RNode, n: int, depth: int) -> RNode:
        term_node = t.nodes[n]
        if isinstance(node, RAx):
            if term_node[0] == BVAR and term_node[1] == depth:
                for i, (arg, ty) in enumerate(remaining):
                    if ty == node.ty:
                        remaining.pop(i)
                        return arg
                raise InvalidDerivation(
                    f"no argument derivation left with type {node.ty}"
                )
            return node
        if isinstance(node, RAbs):
            return RAbs(go(node.child, term_node[1], depth + 1))
        return RApp(
            go(node.fun, term_node[1], depth),
            tuple(go(a, term_node[2], depth) for a in node.args),
        )

    result = go(body, body_node, 0)
    if remaining:
        raise InvalidDerivation("unused argument derivations after substitution")
    report = SubstReport(
        body_size=size(body),
        argument_sizes=tuple(size(a) for a, _ in args),
        occurrences=len(args),
        result_size=size(result),
    )
    return result, report


def head_step_r0(deriv: R0Derivation) -> tuple[R0Derivation, SubstReport]:
    """Contract the subject's head redex inside the derivation.

    The size strictly decreases, by 2 + (number of typed occurrences of the
    bound variable).
    """
    t = deriv.subject
    shape = head_decompose(t)
    if not isinstance(shape, HeadRedex):
        raise TermError("subject has no head redex")
    reports: list[SubstReport] = []

    def rebuild(node: RNode, n: int, rest: tuple) -> RNode:
        term_node = t.nodes[n]
        if not rest:
            if not isinstance(node, RApp) or not isinstance(node.fun, RAbs):
                raise InvalidDerivation("derivation does not follow the head redex")
            abs_node = t.nodes[term_node[1]]
            args = tuple(
                (a, judge(t, a, term_node[2])[1]) for a in node.args
            )
            body_deriv, report = subst_deriv(t, abs_node[1], node.fun.child, args)
            reports.append(report)
            return body_deriv
        letter, rest = rest[0], rest[1:]
        if letter == 0:
            if not isinstance(node, RAbs):
                raise InvalidDerivation("derivation does not follow the subject")
            return RAbs(rebuild(node.child, term_node[1], rest))
        if not isinstance(node, RApp):
            raise InvalidDerivation("derivation does not follow the subject")
        return RApp(rebuild(node.fun, term_node[1], rest), node.args)

    new_root = rebuild(deriv.root, 0, shape.position)
    return R0Derivation(head_step(t), new_root), reports[0]


def expand_head_r0(deriv: R0Derivation, before: Term) -> R0Derivation:
    """Subject expansion along one head step: from a derivation of the
    reduct, build one of `before`, which must head-step to the subject."""
    if head_step(before) != deriv.subject:
        raise TermError("term does not head-step to the derivation's subject")
    shape = head_decompose(before)
    t = before
    reduct = deriv.subject

    def rebuild(node: RNode, nb: int, nr: int, rest: tuple) -> RNode:
        # nb walks `before`, nr walks the reduct, in lockstep above the redex
        bnode = t.nodes[nb]
        if not rest:
            abs_node = t.nodes[bnode[1]]
            body, cut = split(node, abs_node[1], nr, 0)
            return RApp(RAbs(body), tuple(cut))
        letter, rest2 = rest[0], rest[1:]
        rnode = reduct.nodes[nr]
        if letter == 0:
            return RAbs(rebuild(node.child, bnode[1], rnode[1], rest2))
        return RApp(rebuild(node.fun, bnode[1], rnode[1], rest2), node.args)

    def split(node: RNode, nb: int, nr: int, depth: int):
        """Walk the redex body in `before` against the reduct derivation,
        cutting out the subderivations where the body has the bound variable."""
        bnode = t.nodes[nb]
        if bnode[0] == BVAR and bnode[1] == depth:
            _, ty = judge(reduct, node, nr)
            return RAx(ty), [node]
        if bnode[0] in (BVAR, FREE):
            return node, []
        rnode = reduct.nodes[nr]
        if bnode[0] == ABS:
            child, cut = split(node.child, bnode[1], rnode[1], depth + 1)
            return RAbs(child), cut
        fun, cut = split(node.fun, bnode[1], rnode[1], depth)
        new_args = []
        for arg in node.args:
            a, c = split(arg, bnode[2], rnode[2], depth)
            new_args.append(a)
            cut = cut + c
        return RApp(fun, tuple(new_args)), cut

    new_root = rebuild(deriv.root, 0, 0, shape.position)
    out = R0Derivation(before, new_root)
    check_r0(out)
    return out


# -- typing head normal forms and normal forms ---------------------------------


def type_hnf(t: Term) -> R0Derivation:
    """Type a head normal form \\x1...xp. h u1...uq, leaving every argument
    untyped: the head variable gets the type []->...->[]->o (q arrows)."""
    shape = head_decompose(t)
    if not isinstance(shape, HeadNormal):
        raise TermError("subject is not in head normal form")
    ty: R0Type = O
    for _ in range(len(shape.argument_positions)):
        ty = ("ar", (), ty)
    node: RNode = RAx(ty)
    for _ in shape.argument_positions:
        node = RApp(node, ())
    for _ in range(shape.binders):
        node = RAbs(node)
    deriv = R0Derivation(t, node)
    check_r0(deriv)
    return deriv


def type_normal_form(t: Term) -> R0Derivation:
    """Type a finite normal form, typing every argument once (hereditarily).

    The resulting judgment never mentions the empty multiset when the term
    has no vacuous binder, which makes it unforgetful.
    """
    root = _type_nf_node(t, 0, ())
    deriv = R0Derivation(t, root)
    check_r0(deriv)
    return deriv


def _type_nf_node(t: Term, n: int, path: tuple) -> RNode:
    node = t.nodes[n]
    if node[0] == ABS:
        return RAbs(_type_nf_node(t, node[1], path + (0,)))
    # spine of a head normal form: collect applications down the 1-edges
    spine: list[int] = []
    m = n
    seen: set[int] = set()
    while t.nodes[m][0] == APP:
        if m in seen:
            raise TermError("normal-form typing requires a finite term")
        seen.add(m)
        spine.append(m)
        m = t.nodes[m][1]
    head = t.nodes[m]
    if head[0] == ABS:
        raise TermError(f"term is not a normal form at {path}")
    arg_derivs = [
        _type_nf_node(t, t.nodes[app_id][2], path + (1,) * i + (2,))
        for i, app_id in enumerate(spine)
    ]
    arg_types = [judge(t, d, t.nodes[app_id][2])[1] for d, app_id in zip(arg_derivs, spine)]
    ty: R0Type = O
    for arg_ty in arg_types:  # innermost spine app consumes the last element
        ty = ("ar", (arg_ty,), ty)
    out: RNode = RAx(ty)
    for d in reversed(arg_derivs):
        out = RApp(out, (d,))
    return out


# -- unforgetfulness ------------------------------------------------------------


def _empty_mset_polarities_ty(ty: R0Type, pol: int, out: set[int]) -> None:
    if ty[0] == "v":
        return
    _empty_mset_polarities_mset(ty[1], -pol, out)
    _empty_mset_polarities_ty(ty[2], pol, out)


def _empty_mset_polarities_mset(m: tuple, pol: int, out: set[int]) -> None:
    if m == ():
        out.add(pol)
        return
    for ty in m:
        _empty_mset_polarities_ty(ty, pol, out)


def is_unforgetful_r0(judgment: Judgment) -> bool:
    """No empty multiset occurs negatively in the context or positively in
    the concluded type.  Polarity flips only when entering arrow domains."""
    for _, m in judgment.context:
        polarities: set[int] = set()
        _empty_mset_polarities_mset(m, 1, polarities)
        if -1 in polarities:
            return False
    polarities = set()
    _empty_mset_polarities_ty(judgment.ty, 1, polarities)
    return 1 not in polarities


def is_empty_free(judgment: Judgment) -> bool:
    """No empty multiset anywhere; a stronger property than unforgetfulness."""
    found: set[int] = set()
    for _, m in judgment.context:
        _empty_mset_polarities_mset(m, 1, found)
    _empty_mset_polarities_ty(judgment.ty, 1, found)
    return not found


# -- bounded exhaustive search ---------------------------------------------------


def bounded_search_r0(t: Term, max_judgments: int) -> R0Derivation | None:
    """Exhaustively search for a derivation of the subject with at most the
    given number of judgments; None when no such derivation exists.

    Derivation shapes fix all multiset sizes, so the search enumerates
    shapes and solves the type constraints by unification, branching over
    the ways of matching arrow domains up to permutation.
    """
    counter = itertools.count()

    def fresh() -> tuple:
        return ("m", next(counter))

    def resolve(ty, subst):
        while ty[0] == "m" and ty in subst:
            ty = subst[ty]
        return ty

    def occurs(m, ty, subst) -> bool:
        ty = resolve(ty, subst)
        if ty[0] == "m":
            return ty == m
        if ty[0] == "ar":
            return any(occurs(m, s, subst) for s in ty[1]) or occurs(m, ty[2], subst)
        return False

    def unify(a, b, subst):
        a, b = resolve(a, subst), resolve(b, subst)
        if a == b:
            yield subst
            return
        if a[0] == "m" or b[0] == "m":
            m, other = (a, b) if a[0] == "m" else (b, a)
            if occurs(m, other, subst):
                return
            yield {**subst, m: other}
            return
        if a[0] == "v" or b[0] == "v":
            return
        if len(a[1]) != len(b[1]):
            return
        yield from unify_domains(list(a[1]), list(b[1]), a[2], b[2], subst)

    def unify_domains(xs, ys, ta, tb, subst):
        if not xs:
            yield from unify(ta, tb, subst)
            return
        x, rest = xs[0], xs[1:]
        for j in range(len(ys)):
            for s in unify(x, ys[j], subst):
                yield from unify_domains(rest, ys[:j] + ys[j + 1 :], ta, tb, s)

    def shapes(n: int, budget: int, subst):
        """Yield (derivation node, context expr, type expr, size, subst)."""
        node = t.nodes[n]
        kind = node[0]
        if budget < 1:
            return
        if kind in (BVAR, FREE):
            a = fresh()
            yield RAx(a), {node[1]: [a]}, a, 1, subst
            return
        if kind == ABS:
            for child, cctx, cty, s, sub in shapes(node[1], budget - 1, subst):
                binder = tuple(cctx.get(0, []))
                rest = {}
                for key, m in cctx.items():
                    if isinstance(key, int):
                        if key:
                            rest[key - 1] = m
                    else:
                        rest[key] = m
                yield RAbs(child), rest, ("ar", binder, cty), s + 1, sub
            return
        for fun, fctx, fty, fs, sub in shapes(node[1], budget - 1, subst):
            for args, actx, atys, as_, sub2 in arg_lists(node[2], budget - 1 - fs, sub):
                target = fresh()
                for sub3 in unify(fty, ("ar", tuple(atys), target), sub2):
                    ctx = _merge_expr_ctx(fctx, actx)
                    yield RApp(fun, tuple(args)), ctx, target, fs + as_ + 1, sub3

    def arg_lists(n: int, budget: int, subst):
        yield [], {}, [], 0, subst
        if budget < 1:
            return
        for first, fctx, fty, fs, sub in shapes(n, budget, subst):
            for rest, rctx, rtys, rs, sub2 in arg_lists(n, budget - fs, sub):
                yield [first] + rest, _merge_expr_ctx(fctx, rctx), [fty] + rtys, fs + rs, sub2

    def _merge_expr_ctx(a: dict, b: dict) -> dict:
        out = {k: list(v) for k, v in a.items()}
        for k, v in b.items():
            out.setdefault(k, []).extend(v)
        return out

    def ground(node: RNode, subst) -> RNode:
        if isinstance(node, RAx):
            return RAx(ground_ty(node.ty, subst))
        if isinstance(node, RAbs):
            return RAbs(ground(node.child, subst))
        return RApp(ground(node.fun, subst), tuple(ground(a, subst) for a in node.args))

    def ground_ty(ty, subst):
        ty = resolve(ty, subst)
        if ty[0] == "m":
            return O
        if ty[0] == "v":
            return ty
        return ("ar", mset(ground_ty(s, subst) for s in ty[1]), ground_ty(ty[2], subst))

    for root, _, _, s, subst in shapes(0, max_judgments, {}):
        deriv = R0Derivation(t, ground(root, subst))
        try:
            check_r0(deriv)
        except InvalidDerivation:  # pragma: no cover - grounding is faithful
            continue
        return deriv
    return None
