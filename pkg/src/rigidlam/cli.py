"""Command-line interface.

Exit codes: 0 on success, 1 on a domain error (ill-typed derivation,
unparsable input, divergence proof requested past its budget, …), 2 on a
usage error.  Every subcommand accepts --json for machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import sys

from .positions import format_position, parse_position
from .terms import TermError, term_equal
from .syntax import parse_term, print_term
from . import reduction
from .reduction import BohmTree, bohm_prefix, hh_reduce
from . import r0 as r0mod
from .stypes import (
    check_s,
    collapse_deriv,
    has_hypotheses,
    is_quantitative,
    lift_r0_to_s,
    seq_entries,
    seq_tail,
)
from .sdynamics import (
    expand_s,
    lenlex_track,
    reduce_s,
    residual_position,
    uniform_track_policy,
)
from . import approx as approxmod
from . import nf as nfmod
from . import fixtures as fixmod
from . import serialize as ser


# -- human-readable type and judgment formatting --------------------------------


def fmt_r0_type(ty) -> str:
    if ty[0] == "v":
        return ty[1]
    dom = ",".join(fmt_r0_type(t) for t in ty[1])
    return f"[{dom}]->{fmt_r0_type(ty[2])}"


def fmt_seq(s) -> str:
    parts = [f"{k}.{fmt_s_type(t)}" for k, t in seq_entries(s)]
    tail = seq_tail(s)
    if tail is not None:
        parts.append(f">={tail[0]}.{fmt_s_type(tail[1])}")
    return "(" + ",".join(parts) + ")"


def fmt_s_type(ty) -> str:
    if ty[0] == "v":
        return ty[1]
    return f"{fmt_seq(ty[1])}->{fmt_s_type(ty[2])}"


def fmt_r0_judgment(j) -> str:
    ctx = ", ".join(
        f"{name}:[{','.join(fmt_r0_type(t) for t in m)}]" for name, m in j.context
    )
    return f"{ctx} |- {fmt_r0_type(j.ty)}" if ctx else f"|- {fmt_r0_type(j.ty)}"


def fmt_s_judgment(j) -> str:
    ctx = ", ".join(f"{key}:{fmt_seq(s)}" for key, s in j.context)
    return f"{ctx} |- {fmt_s_type(j.ty)}" if ctx else f"|- {fmt_s_type(j.ty)}"


def bohm_to_json(tree: BohmTree):
    return {
        "kind": tree.kind,
        "payload": tree.payload,
        "children": [bohm_to_json(c) for c in tree.children],
    }


# -- output helpers --------------------------------------------------------------


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps({"ok": True, **payload}, sort_keys=True))
    else:
        print(human)


def _emit_derivation(args, deriv, note: str) -> None:
    text = ser.dumps_derivation(deriv)
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.json:
        print(json.dumps({"ok": True, "note": note, "derivation": json.loads(text)},
                         sort_keys=True))
    else:
        print(note)
        if not getattr(args, "out", None):
            print(text, end="")


# -- subcommand implementations ----------------------------------------------------


def _cmd_reduce(args) -> int:
    t = parse_term(args.term)
    if args.strategy == "head":
        trace = [t]
        current = t
        steps = 0
        while not reduction.is_hnf(current) and steps < args.fuel:
            current = reduction.head_step(current)
            trace.append(current)
            steps += 1
        payload = {
            "strategy": "head",
            "steps": steps,
            "result": print_term(current),
            "head_normal": reduction.is_hnf(current),
        }
        lines = [f"{print_term(current)}  (head, {steps} steps"
                 f"{'' if reduction.is_hnf(current) else ', fuel exhausted'})"]
    elif args.strategy == "lo":
        trace = [t]
        current = t
        steps = 0
        while not reduction.is_normal(current) and steps < args.fuel:
            current = reduction.leftmost_step(current)
            trace.append(current)
            steps += 1
        payload = {
            "strategy": "lo",
            "steps": steps,
            "result": print_term(current),
            "normal": reduction.is_normal(current),
        }
        lines = [f"{print_term(current)}  (leftmost, {steps} steps"
                 f"{'' if reduction.is_normal(current) else ', fuel exhausted'})"]
    else:
        sequence = hh_reduce(t, args.fuel)
        trace = sequence.terms
        payload = {
            "strategy": "hh",
            "multisteps": len(sequence.steps),
            "result": print_term(sequence.final),
            "positions": [
                [format_position(p) for p in s.positions] for s in sequence.steps
            ],
        }
        lines = [f"{print_term(sequence.final)}  (depth-stratified, "
                 f"{len(sequence.steps)} multisteps)"]
    if args.trace:
        payload["trace"] = [print_term(u) for u in trace]
        lines += [f"  {i}: {print_term(u)}" for i, u in enumerate(trace)]
    _emit(args, payload, "\n".join(lines))
    return 0


def _cmd_bohm(args) -> int:
    t = parse_term(args.term)
    tree = bohm_prefix(t, args.depth, args.fuel)
    _emit(args, {"tree": bohm_to_json(tree)}, tree.pretty())
    return 0


def _cmd_r0_check(args) -> int:
    deriv = ser.parse_derivation(args.deriv)
    if not isinstance(deriv, r0mod.R0Derivation):
        raise ser.SchemaError("expected a multiset-system derivation")
    t = ser.read_term(args.term)
    if not term_equal(deriv.subject, t):
        raise TermError("the derivation does not type the given term")
    j = r0mod.check_r0(deriv)
    _emit(
        args,
        {"judgment": fmt_r0_judgment(j), "size": r0mod.size(deriv)},
        f"{fmt_r0_judgment(j)}  (size {r0mod.size(deriv)})",
    )
    return 0


def _cmd_r0_hnf_type(args) -> int:
    t = parse_term(args.term)
    deriv = r0mod.type_hnf(t)
    j = r0mod.check_r0(deriv)
    _emit_derivation(args, deriv, fmt_r0_judgment(j))
    return 0


def _cmd_r0_reduce(args) -> int:
    deriv = ser.parse_derivation(args.deriv)
    if not isinstance(deriv, r0mod.R0Derivation):
        raise ser.SchemaError("expected a multiset-system derivation")
    before_size = r0mod.size(deriv)
    after, _report = r0mod.head_step_r0(deriv)
    note = (
        f"sizes {before_size} -> {r0mod.size(after)}; "
        f"subject {print_term(after.subject)}"
    )
    _emit_derivation(args, after, note)
    return 0


def _cmd_r0_expand(args) -> int:
    deriv = ser.parse_derivation(args.deriv)
    if not isinstance(deriv, r0mod.R0Derivation):
        raise ser.SchemaError("expected a multiset-system derivation")
    before = ser.read_term(args.term)
    expanded = r0mod.expand_head_r0(deriv, before)
    j = r0mod.check_r0(expanded)
    _emit_derivation(args, expanded, fmt_r0_judgment(j))
    return 0


def _cmd_r0_expand_infty(args) -> int:
    t = parse_term(args.term)
    trace = [t]
    current = t
    while not reduction.is_hnf(current):
        if len(trace) > args.fuel:
            raise reduction.HeadDivergence("fuel")
        current = reduction.head_step(current)
        trace.append(current)
    deriv = r0mod.type_hnf(current)
    for before in reversed(trace[:-1]):
        deriv = r0mod.expand_head_r0(deriv, before)
    j = r0mod.check_r0(deriv)
    note = f"{fmt_r0_judgment(j)}  (expanded back over {len(trace) - 1} head steps)"
    _emit_derivation(args, deriv, note)
    return 0


def _require_s(deriv):
    from .stypes import SDerivation

    if not isinstance(deriv, SDerivation):
        raise ser.SchemaError("expected a rigid-system derivation")
    return deriv


def _cmd_s_check(args) -> int:
    deriv = _require_s(ser.parse_derivation(args.deriv))
    j = check_s(deriv, allow_hypotheses=args.allow_hypotheses)
    _emit(
        args,
        {
            "judgment": fmt_s_judgment(j),
            "quantitative": is_quantitative(deriv),
            "hypotheses": has_hypotheses(deriv),
        },
        fmt_s_judgment(j),
    )
    return 0


def _cmd_s_reduce(args) -> int:
    deriv = _require_s(ser.parse_derivation(args.deriv))
    after = reduce_s(deriv, parse_position(args.at))
    j = check_s(after)
    _emit_derivation(args, after, fmt_s_judgment(j))
    return 0


def _cmd_s_expand(args) -> int:
    deriv = _require_s(ser.parse_derivation(args.deriv))
    before = ser.read_term(args.target_term)
    policy = lambda a, w, ty: lenlex_track(w)
    if args.policy == "uniform":
        policy = uniform_track_policy
    expanded = expand_s(deriv, parse_position(args.at), before, policy=policy)
    j = check_s(expanded)
    _emit_derivation(args, expanded, fmt_s_judgment(j))
    return 0


def _cmd_s_residual(args) -> int:
    deriv = _require_s(ser.parse_derivation(args.deriv))
    b = parse_position(args.at)
    alpha = parse_position(args.pos)
    res = residual_position(deriv, b, alpha)
    if isinstance(res, tuple):
        payload = {"defined": True, "residual": format_position(res)}
        human = (
            f"{format_position(alpha)} -> {format_position(res)} "
            f"(through the step at {format_position(b)})"
        )
    else:
        payload = {"defined": False, "case": res.case}
        human = (
            f"{format_position(alpha)} has no residual through the step at "
            f"{format_position(b)}: {res.case}"
        )
    _emit(args, payload, human)
    return 0


def _load_s_derivs(paths):
    return [_require_s(ser.parse_derivation(p)) for p in paths]


def _cmd_approx_leq(args) -> int:
    lower, upper = _load_s_derivs([args.lower, args.upper])
    result = approxmod.leq_approx(lower, upper)
    _emit(args, {"leq": result}, "true" if result else "false")
    return 0


def _cmd_approx_join(args) -> int:
    derivs = _load_s_derivs(args.derivs)
    joined = approxmod.join(derivs)
    j = check_s(joined)
    _emit_derivation(args, joined, fmt_s_judgment(j))
    return 0


def _cmd_approx_meet(args) -> int:
    derivs = _load_s_derivs(args.derivs)
    met = approxmod.meet(derivs)
    j = check_s(met)
    _emit_derivation(args, met, fmt_s_judgment(j))
    return 0


def _cmd_approx_find(args) -> int:
    family = fixmod.family_by_name(args.family)
    bips = ser.read_bipositions(args.bipositions)
    deriv = approxmod.find_finite_approximant(family, bips)
    j = check_s(deriv)
    _emit_derivation(args, deriv, fmt_s_judgment(j))
    return 0


def _cmd_approx_expand_infty(args) -> int:
    family = fixmod.family_by_name(args.family)
    path = ser.read_path(args.path)
    expanded = approxmod.expand_infinitary(family, path)
    member = expanded.member(args.member)
    j = check_s(member)
    note = f"member {args.member} typing {print_term(member.subject)}: {fmt_s_judgment(j)}"
    _emit_derivation(args, member, note)
    return 0


def _cmd_nf_type(args) -> int:
    t = ser.read_term(args.term)
    assignment = None
    if args.assign:
        table = ser.read_assignment(args.assign)
        from .stypes import stvar

        assignment = lambda a: table.get(a, stvar("o"))
    family = nfmod.full_support_family(t, assignment)
    member = family.member(args.rank)
    j = check_s(member)
    note = f"rank {args.rank}: {fmt_s_judgment(j)}"
    _emit_derivation(args, member, note)
    return 0


def _cmd_fixtures(args) -> int:
    if args.regen:
        names = fixmod.write_fixtures(args.dir)
        _emit(
            args,
            {"written": names, "dir": args.dir},
            f"wrote {len(names)} fixtures to {args.dir}",
        )
        return 0
    bad = fixmod.verify_fixtures(args.dir)
    if bad:
        if args.json:
            print(json.dumps({"ok": False, "stale": bad}, sort_keys=True))
        else:
            print("stale fixtures: " + ", ".join(bad), file=sys.stderr)
        return 1
    _emit(
        args,
        {"verified": list(fixmod.FIXTURE_NAMES)},
        f"all {len(fixmod.FIXTURE_NAMES)} fixtures are up to date",
    )
    return 0


# -- argument parsing ---------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")

    parser = argparse.ArgumentParser(
        prog="rigidlam",
        description="Infinitary lambda-terms with multiset and rigid "
        "non-idempotent intersection types.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", parents=[common], help="run a reduction strategy")
    p.add_argument("term", help="term text, e.g. '(\\x. x x) y'")
    p.add_argument("--strategy", choices=["head", "lo", "hh"], default="head")
    p.add_argument("--fuel", type=int, default=1000)
    p.add_argument("--trace", action="store_true")
    p.set_defaults(run=_cmd_reduce)

    p = sub.add_parser("bohm", parents=[common], help="finite prefix of the limit tree")
    p.add_argument("term")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--fuel", type=int, default=1000)
    p.set_defaults(run=_cmd_bohm)

    r0p = sub.add_parser("r0", help="multiset (non-rigid) type system")
    r0sub = r0p.add_subparsers(dest="subcommand", required=True)

    p = r0sub.add_parser("check", parents=[common])
    p.add_argument("--deriv", required=True, help="derivation file")
    p.add_argument("--term", required=True, help="term file the derivation must type")
    p.set_defaults(run=_cmd_r0_check)

    p = r0sub.add_parser("hnf-type", parents=[common])
    p.add_argument("term", help="head-normal term text")
    p.add_argument("--out")
    p.set_defaults(run=_cmd_r0_hnf_type)

    p = r0sub.add_parser("reduce", parents=[common], help="typed head step")
    p.add_argument("--deriv", required=True)
    p.add_argument("--out")
    p.set_defaults(run=_cmd_r0_reduce)

    p = r0sub.add_parser("expand", parents=[common], help="typed head expansion")
    p.add_argument("--deriv", required=True)
    p.add_argument("--term", required=True, help="term file that head-reduces to the subject")
    p.add_argument("--out")
    p.set_defaults(run=_cmd_r0_expand)

    p = r0sub.add_parser(
        "expand-infty", parents=[common],
        help="type the head normal form, then expand back to the given term",
    )
    p.add_argument("term", help="term text")
    p.add_argument("--fuel", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(run=_cmd_r0_expand_infty)

    sp = sub.add_parser("s", help="rigid (track-based) type system")
    ssub = sp.add_subparsers(dest="subcommand", required=True)

    p = ssub.add_parser("check", parents=[common])
    p.add_argument("--deriv", required=True)
    p.add_argument("--allow-hypotheses", action="store_true")
    p.set_defaults(run=_cmd_s_check)

    p = ssub.add_parser("reduce", parents=[common], help="reduce the subject at a position")
    p.add_argument("--deriv", required=True)
    p.add_argument("--at", required=True, help="redex position, e.g. '0.1' or 'e'")
    p.add_argument("--out")
    p.set_defaults(run=_cmd_s_reduce)

    p = ssub.add_parser("expand", parents=[common], help="expand the subject at a position")
    p.add_argument("--deriv", required=True)
    p.add_argument("--at", required=True)
    p.add_argument("--target-term", required=True, help="term file reducing to the subject")
    p.add_argument("--policy", choices=["lenlex", "uniform"], default="lenlex")
    p.add_argument("--out")
    p.set_defaults(run=_cmd_s_expand)

    p = ssub.add_parser("residual", parents=[common], help="trace a derivation position")
    p.add_argument("--deriv", required=True)
    p.add_argument("--at", required=True, help="redex position of the step")
    p.add_argument("--pos", required=True, help="derivation position to trace")
    p.set_defaults(run=_cmd_s_residual)

    ap = sub.add_parser("approx", help="approximation order on rigid derivations")
    asub = ap.add_subparsers(dest="subcommand", required=True)

    p = asub.add_parser("leq", parents=[common])
    p.add_argument("lower")
    p.add_argument("upper")
    p.set_defaults(run=_cmd_approx_leq)

    p = asub.add_parser("join", parents=[common])
    p.add_argument("derivs", nargs="+")
    p.add_argument("--out")
    p.set_defaults(run=_cmd_approx_join)

    p = asub.add_parser("meet", parents=[common])
    p.add_argument("derivs", nargs="+")
    p.add_argument("--out")
    p.set_defaults(run=_cmd_approx_meet)

    p = asub.add_parser("find", parents=[common],
                        help="smallest family member containing given bipositions")
    p.add_argument("--bipositions", required=True)
    p.add_argument("--family", required=True,
                   help="'tower', 'pi-lift', or 'full:TERMFILE'")
    p.add_argument("--out")
    p.set_defaults(run=_cmd_approx_find)

    p = asub.add_parser("expand-infty", parents=[common],
                        help="pull a family back along a recorded reduction")
    p.add_argument("--family", required=True)
    p.add_argument("--path", required=True, help="recorded reduction file")
    p.add_argument("--member", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(run=_cmd_approx_expand_infty)

    np_ = sub.add_parser("nf", help="typing normal forms along their support")
    nsub = np_.add_subparsers(dest="subcommand", required=True)

    p = nsub.add_parser("type", parents=[common])
    p.add_argument("--term", required=True, help="normal-form term file")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--assign", help="assignment file for unconstrained positions")
    p.add_argument("--out")
    p.set_defaults(run=_cmd_nf_type)

    p = sub.add_parser("fixtures", parents=[common], help="verify or regenerate golden files")
    p.add_argument("--regen", action="store_true")
    p.add_argument("--dir", default="fixtures")
    p.set_defaults(run=_cmd_fixtures)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except (TermError, ValueError, OSError) as exc:
        if getattr(args, "json", False):
            print(
                json.dumps(
                    {"ok": False, "error": type(exc).__name__, "message": str(exc)},
                    sort_keys=True,
                )
            )
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
