"""Reference terms, derivations, and families used by the test suite, the
CLI, and the golden files under fixtures/.

Everything here is deterministic: building the same fixture twice yields
equal objects, and the serialized golden files are byte-identical across
regenerations.
"""

from __future__ import annotations

from .terms import Term, app, fix, lam, var
from .reduction import ReductionSequence, hh_reduce
from .r0 import O, R0Derivation, RApp, RAx, arrow, mset
from .stypes import (
    SAbs,
    SApp,
    SAx,
    SDerivation,
    SHyp,
    freeze_sctx,
    lift_r0_to_s,
    sarrow,
    seq,
    stvar,
)
from .approx import ApproximantFamily, expand_infinitary
from .nf import NormalFormTypingFamily, rank, unforgetful_nf_typing
from .syntax import parse_term, print_term
from . import serialize as _ser

OP = stvar("o'")


# -- terms ---------------------------------------------------------------------


def identity() -> Term:
    return lam("x", var("x"))


def self_app_abs() -> Term:
    """λx. x x"""
    return lam("x", app(var("x"), var("x")))


def omega() -> Term:
    """Ω = (λx. x x)(λx. x x), the hereditarily head-divergent term."""
    d = self_app_abs()
    return app(d, d)


def f_tower() -> Term:
    """f^∞ = f (f (f ...)), as the regular term fix X. f X."""
    return fix("r", app(var("f"), var("r")))


def w_self() -> Term:
    """λw. f (w w)"""
    return lam("w", app(var("f"), app(var("w"), var("w"))))


def cu_f() -> Term:
    """The Curry fixed-point body (λw. f (w w)) (λw. f (w w)); its
    depth-stratified limit is f^∞."""
    w = w_self()
    return app(w, w)


def x_omega() -> Term:
    """x Ω — head normal, with a head-divergent argument."""
    return app(var("x"), omega())


def discard_omega() -> Term:
    """(λx. y) Ω — the argument is erased by the head step."""
    return app(lam("x", var("y")), omega())


def hnf_corpus() -> tuple[Term, ...]:
    """Ten head-normal forms used as typing targets."""
    return (
        lam("x", app(var("x"), var("y"))),
        lam("x", lam("y", app(var("x"), app(var("y"), var("z"))))),
        app(var("x"), var("y")),
        app(app(var("x"), var("y")), var("z")),
        app(var("f"), app(var("g"), var("h"))),
        lam("x", app(var("f"), app(var("x"), var("y")))),
        lam("x", lam("y", app(var("y"), var("x")))),
        lam("h", app(var("h"), lam("z", var("z")))),
        app(app(var("f"), var("y")), lam("z", var("w"))),
        self_app_abs(),
    )


# -- multiset (R0) derivations of f^∞ --------------------------------------------


def pi_prime(n: int) -> R0Derivation:
    """The n-th finite approximant typing f^∞ with o in the multiset system:
    n axioms for f, the deepest one of type []→o, the others [o]→o."""
    if n < 1:
        raise ValueError("n must be >= 1")
    node = RApp(RAx(arrow(mset([]), O)), ())
    for _ in range(n - 1):
        node = RApp(RAx(arrow(mset([O]), O)), (node,))
    return R0Derivation(f_tower(), node)


def gamma_n(n: int):
    """The context of pi_prime(n): f carries one []→o and n-1 copies of [o]→o."""
    types = [arrow(mset([]), O)] + [arrow(mset([O]), O)] * (n - 1)
    return (("f", mset(types)),)


def rho(k: int):
    """ρ_1 = []→o and ρ_{k+1} = [ρ_1, …, ρ_k] → o: the multiset types taken
    by the self-application copies when typing the Curry fixed point."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return arrow(mset([]), O)
    return arrow(mset([rho(i) for i in range(1, k)]), O)


def pi_prime_lift(n: int) -> SDerivation:
    return lift_r0_to_s(pi_prime(n))


def lift_family() -> ApproximantFamily:
    """The lifts of pi_prime(n) as a rank-indexed family of rigid derivations
    of f^∞ (directed under the flattened inclusion order)."""
    return ApproximantFamily(term=f_tower(), member_fn=pi_prime_lift, min_rank=1)


# -- the rigid example derivation of λx.xx ---------------------------------------


def s_ex():
    """(8·o, 3·o', 2·o) → o'"""
    return sarrow(seq([(8, O), (3, OP), (2, O)]), OP)


def sigma_ex():
    """[o, o', o] → o', the collapse of s_ex()."""
    return arrow(mset([O, OP, O]), OP)


def p_ex() -> SDerivation:
    """A rigid derivation of λx.xx whose head axiom carries s_ex() on
    context track 4 and whose arguments sit on tracks 2, 3 and 8."""
    body = SApp(
        SAx(4, s_ex()),
        ((2, SAx(9, O)), (3, SAx(2, OP)), (8, SAx(5, O))),
    )
    return SDerivation(self_app_abs(), SAbs(body))


# -- the escalating-track family typing f^∞ --------------------------------------


def _tower_spine(j: int):
    """The j-th application position of the escalating-track support:
    (2, 3, …, j+1), with () for j = 0."""
    return tuple(range(2, j + 2))


def _tower_contains(a) -> bool:
    body = a[:-1] if a and a[-1] == 1 else a
    return body == _tower_spine(len(body))


def _tower_positions_upto(n):
    out = set()
    i = 0
    while True:
        ai = _tower_spine(i)
        if rank(ai) > n:
            break
        out.add(ai)
        side = ai + (1,)
        if rank(side) <= n:
            out.add(side)
        i += 1
    return frozenset(out)


def _tower_policy(a) -> int:
    return len(a) + 1


def _tower_inverse(k: int):
    if k < 2:
        return None
    return _tower_spine(k - 2) + (1,)


def tower_family() -> NormalFormTypingFamily:
    """Types f^∞ : o along the support whose n-th member keeps the first n
    applications, the argument of level j entering on track j+2."""
    return NormalFormTypingFamily(
        term=f_tower(),
        contains=_tower_contains,
        positions_upto=_tower_positions_upto,
        unconstrained_type=lambda a: O,
        track_policy=_tower_policy,
        track_inverse=_tower_inverse,
        min_rank=1,
        max_rank=None,
    )


def tower_member(n: int) -> SDerivation:
    return tower_family().member(n)


# -- recorded reduction of the Curry fixed point ----------------------------------


def cu_f_path(multisteps: int = 8) -> ReductionSequence:
    return hh_reduce(cu_f(), multisteps)


def expanded_lift_family(path: ReductionSequence | None = None) -> ApproximantFamily:
    """The lifts of pi_prime pulled back along the recorded reduction of the
    Curry fixed point: a directed family of rigid derivations of cu_f()."""
    if path is None:
        path = cu_f_path()
    return expand_infinitary(lift_family(), path)


def pi_n(n: int, path: ReductionSequence | None = None) -> SDerivation:
    """The n-th expanded member typing cu_f()."""
    return expanded_lift_family(path).member(n)


# -- hypothesis prefix (not quantitative) -----------------------------------------


def ptilde_prefix(cut: int = 6) -> SDerivation:
    """A finite prefix of an infinite rigid derivation of f^∞.

    The single argument judgment is an unproven hypothesis whose context
    already carries a cofinite tail of arrows for f starting at `cut`; the
    tail tracks are anchored by no axiom, so the prefix checks only with
    hypotheses allowed and is not quantitative.
    """
    if cut < 4:
        raise ValueError("cut must be >= 4 so the tail avoids tracks 2 and 3")
    s = sarrow(seq([(2, O)]), O)
    hyp = SHyp(O, freeze_sctx({"f": seq([], (cut, s))}))
    root = SApp(SAx(3, s), ((2, hyp),))
    return SDerivation(f_tower(), root)


# -- the erased-argument pitfall ---------------------------------------------------


def pitfall_discard() -> SDerivation:
    """A rigid derivation of (λx. y) Ω : o with an empty domain: the head
    abstraction never uses its binder, so Ω contributes no subderivation and
    the judgment y:(2·o) ⊢ (λx.y) Ω : o is forgetful at the erased argument."""
    fun = SAbs(SAx(2, O))
    return SDerivation(discard_omega(), SApp(fun, ()))


# -- family registry for the CLI ---------------------------------------------------


def family_by_name(spec: str):
    """Resolve a family specifier: 'tower', 'pi-lift', or 'full:<term file>'."""
    if spec == "tower":
        return tower_family()
    if spec == "pi-lift":
        return lift_family()
    if spec.startswith("full:"):
        return unforgetful_nf_typing(_ser.read_term(spec[len("full:"):]))
    raise ValueError(
        f"unknown family {spec!r}: expected 'tower', 'pi-lift', or 'full:FILE'"
    )


# -- golden files -------------------------------------------------------------------


def _term_text(t: Term) -> str:
    return print_term(t) + "\n"


def _corpus_text() -> str:
    return "".join(print_term(t) + "\n" for t in hnf_corpus())


def _fixture_builders():
    builders = {
        "f_tower.lam": lambda: _term_text(f_tower()),
        "cu_f.lam": lambda: _term_text(cu_f()),
        "omega.lam": lambda: _term_text(omega()),
        "hnf_corpus.txt": _corpus_text,
        "p_ex.json": lambda: _ser.dumps_derivation(p_ex()),
        "ptilde_prefix.json": lambda: _ser.dumps_derivation(ptilde_prefix()),
        "pitfall_discard.json": lambda: _ser.dumps_derivation(pitfall_discard()),
        "cu_f_path.json": lambda: _ser.dumps_path(cu_f_path()),
    }
    for n in range(1, 6):
        builders[f"pi_prime_{n}.json"] = (
            lambda n=n: _ser.dumps_derivation(pi_prime(n))
        )
    for n in range(1, 4):
        builders[f"pi_{n}.json"] = lambda n=n: _ser.dumps_derivation(pi_n(n))
    for n in range(1, 5):
        builders[f"p_n_{n}.json"] = lambda n=n: _ser.dumps_derivation(tower_member(n))
    return builders


FIXTURE_NAMES = tuple(sorted(_fixture_builders()))


def build_fixture(name: str) -> str:
    builders = _fixture_builders()
    if name not in builders:
        raise ValueError(f"unknown fixture {name!r}")
    return builders[name]()


def write_fixtures(directory) -> list[str]:
    """Write every golden file into `directory`; returns the names written."""
    import os

    os.makedirs(directory, exist_ok=True)
    for name in FIXTURE_NAMES:
        with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
            fh.write(build_fixture(name))
    return list(FIXTURE_NAMES)


def verify_fixtures(directory) -> list[str]:
    """Compare `directory` against freshly built fixtures; returns the names
    that are missing or differ byte-for-byte."""
    import os

    bad = []
    for name in FIXTURE_NAMES:
        path = os.path.join(directory, name)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                on_disk = fh.read()
        except OSError:
            bad.append(name)
            continue
        if on_disk != build_fixture(name):
            bad.append(name)
    return bad
