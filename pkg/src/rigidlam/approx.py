"""The approximation order on track-indexed derivations.

A quantitative derivation is determined by its *flattening*: the map sending
every biposition (a derivation position paired with a position inside the
type or inside a context entry of the judgment there) to the symbol it reads.
Flattenings are plain dicts, so the approximation order is dict inclusion,
joins are unions, and meets are intersections — each followed by rebuilding
an actual derivation and re-checking it.

Infinite derivations are handled through rank-indexed *families* of finite
members; the operations that would not terminate on an infinite object
(finding an approximant containing given bipositions, pulling a family back
through a recorded reduction prefix, pushing a derivation forward through
one) work member-by-member.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .positions import Position, applicative_depth
from .terms import ABS, BVAR, FREE, Term, TermError, reduce_at, term_equal
from .reduction import NotStable, ReductionSequence
from .stypes import (
    InvalidSDerivation,
    SAbs,
    SApp,
    SAx,
    SDerivation,
    SJudgment,
    all_judgments,
    check_s,
    is_quantitative,
    seq,
    seq_is_finite,
    seq_positions,
    seq_label,
    type_label,
    type_positions,
)
from .sdynamics import (
    BipositionOutside,
    NotQuantitative,
    SubjectMismatch,
    expand_s,
    reduce_s,
    uniform_track_policy,
)
from .r0 import bounded_search_r0

__all__ = [
    "NotDirected",
    "NotContained",
    "PathTooShort",
    "SubjectMismatch",
    "flatten",
    "leq_approx",
    "join",
    "meet",
    "ApproximantFamily",
    "find_finite_approximant",
    "expand_infinitary",
    "StabilizedPrefix",
    "infinitary_reduce_family",
    "refutes_s_typability",
]


class NotDirected(InvalidSDerivation):
    """The derivations do not sit below a common one; `witness` points at an
    irreconcilable pair of bipositions or labels."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class NotContained(InvalidSDerivation):
    """No member of the family supports all the requested bipositions."""


class PathTooShort(TermError):
    """The recorded reduction prefix does not reach deep enough to carry the
    requested member back to the initial term."""


# -- flattening --------------------------------------------------------------------


def flatten(deriv: SDerivation) -> dict:
    """Every biposition of the derivation with the symbol it carries.

    Keys are ("r", a, c) for position c of the type concluded at a, and
    ("l", a, key, kc) for position kc of the context entry of `key` at a
    (the first letter of kc is a track).  Only quantitative derivations
    flatten; hypothesis leaves would need cofinite entries.
    """
    if not is_quantitative(deriv):
        raise NotQuantitative("only quantitative derivations flatten")
    out: dict = {}
    for a, judgment in all_judgments(deriv).items():
        ty = judgment.ty
        for c in type_positions(ty):
            out[("r", a, c)] = type_label(ty, c)
        for key, sq in judgment.context:
            if not seq_is_finite(sq):  # pragma: no cover - excluded above
                raise NotQuantitative(f"cofinite context entry at {a}")
            for kc in seq_positions(sq):
                out[("l", a, key, kc)] = seq_label(sq, kc)
    return out


def leq_approx(lower: SDerivation, upper: SDerivation) -> bool:
    """Whether `lower` approximates `upper`: same subject, and every labelled
    biposition of `lower` appears with the same label in `upper`."""
    if not term_equal(lower.subject, upper.subject):
        raise SubjectMismatch("approximation compares derivations of one term")
    small, big = flatten(lower), flatten(upper)
    return all(big.get(bip, _MISSING) == lbl for bip, lbl in small.items())


_MISSING = object()


# -- rebuilding a derivation from a flattening ----------------------------------------


def _rebuild(subject: Term, flat: dict) -> SDerivation:
    rights: dict[Position, dict] = {}
    lefts: dict[Position, list] = {}
    for bip, lbl in flat.items():
        if bip[0] == "r":
            rights.setdefault(bip[1], {})[bip[2]] = lbl
        else:
            lefts.setdefault(bip[1], []).append((bip[2], bip[3]))
    if () not in rights or () not in rights[()]:
        raise NotDirected("nothing to rebuild at the root", witness=())

    def build_type(a: Position, c: Position):
        lbl = rights[a].get(c)
        if lbl is None:
            raise NotDirected(f"missing type position {c} at {a}", witness=("r", a, c))
        if lbl != "->":
            return lbl
        tracks = sorted(
            cc[-1]
            for cc in rights[a]
            if len(cc) == len(c) + 1 and cc[: len(c)] == c and cc[-1] >= 2
        )
        return (
            "ar",
            seq([(k, build_type(a, c + (k,))) for k in tracks]),
            build_type(a, c + (1,)),
        )

    def build(a: Position, n: int):
        node = subject.nodes[n]
        kind = node[0]
        if kind in (BVAR, FREE):
            key = node[1]
            tracks = sorted(
                kc[0]
                for entry_key, kc in lefts.get(a, ())
                if entry_key == key and len(kc) == 1
            )
            if len(tracks) != 1:
                raise NotDirected(
                    f"axiom at {a} needs exactly one track, found {tracks}",
                    witness=("l", a, key, tuple(tracks)),
                )
            return SAx(tracks[0], build_type(a, ()))
        if kind == ABS:
            if a + (0,) not in rights:
                raise NotDirected(
                    f"abstraction at {a} lost its body", witness=("r", a + (0,), ())
                )
            return SAbs(build(a + (0,), node[1]))
        if a + (1,) not in rights:
            raise NotDirected(
                f"application at {a} lost its function side",
                witness=("r", a + (1,), ()),
            )
        args = []
        for b in rights:
            if len(b) == len(a) + 1 and b[: len(a)] == a and b[-1] >= 2:
                args.append((b[-1], build(b, node[2])))
        return SApp(build(a + (1,), node[1]), tuple(sorted(args)))

    deriv = SDerivation(subject, build((), 0))
    try:
        check_s(deriv)
    except InvalidSDerivation as exc:
        raise NotDirected(f"rebuilt derivation is incoherent: {exc}") from None
    rebuilt = flatten(deriv)
    if rebuilt != flat:
        extra = sorted(set(flat) - set(rebuilt), key=repr)[:1]
        changed = sorted(
            (b for b in rebuilt if flat.get(b, _MISSING) != rebuilt[b]), key=repr
        )[:1]
        raise NotDirected(
            "the bipositions do not assemble into one derivation",
            witness=tuple(extra + changed),
        )
    return deriv


def _common_subject(derivs: list[SDerivation]) -> Term:
    subject = derivs[0].subject
    for d in derivs[1:]:
        if not term_equal(d.subject, subject):
            raise SubjectMismatch("all derivations must type the same term")
    return subject


def join(derivs) -> SDerivation:
    """Least derivation above all of the given ones (their union), when they
    are directed; NotDirected otherwise."""
    ds = list(derivs)
    if not ds:
        raise NotDirected("join of nothing", witness=())
    subject = _common_subject(ds)
    union: dict = {}
    for d in ds:
        for bip, lbl in flatten(d).items():
            seen = union.get(bip, _MISSING)
            if seen is not _MISSING and seen != lbl:
                raise NotDirected(
                    f"conflicting labels {seen!r} / {lbl!r} at {bip}",
                    witness=(bip, seen, lbl),
                )
            union[bip] = lbl
    return _rebuild(subject, union)


def meet(derivs) -> SDerivation:
    """Greatest derivation below all of the given ones (their intersection);
    NotDirected when nothing coherent is left at the root."""
    ds = list(derivs)
    if not ds:
        raise NotDirected("meet of nothing", witness=())
    subject = _common_subject(ds)
    common = set(flatten(ds[0]).items())
    for d in ds[1:]:
        common &= set(flatten(d).items())
    return _rebuild(subject, dict(common))


# -- rank-indexed families ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ApproximantFamily:
    """A family of finite derivations indexed by rank, given by a pure
    member function; the generic carrier for infinite derivations."""

    term: Term
    member_fn: Callable[[int], SDerivation]
    min_rank: int = 1
    max_rank: int | None = None
    called_rank_fn: Callable | None = None
    _cache: dict = field(default_factory=dict)

    def member(self, n: int) -> SDerivation:
        if n not in self._cache:
            self._cache[n] = self.member_fn(n)
        return self._cache[n]

    def called_rank(self, p) -> int:
        if self.called_rank_fn is None:
            raise BipositionOutside("this family has no called-rank oracle")
        return self.called_rank_fn(p)


def _family_called_rank(family):
    fn = getattr(family, "called_rank_fn", True)
    if fn is None:
        return None
    return getattr(family, "called_rank", None)


def find_finite_approximant(family, bips, scan_limit: int = 32) -> SDerivation:
    """Smallest-rank member of the family whose bisupport contains all the
    given tagged bipositions; NotContained when none does.

    With a called-rank oracle the right rank is computed directly; otherwise
    members are scanned up to the family bound (or `scan_limit` ranks).
    """
    wanted = list(bips)
    lo = family.min_rank
    if not wanted:
        return family.member(lo)
    oracle = _family_called_rank(family)
    if oracle is not None:
        try:
            n = max(oracle(p) for p in wanted)
        except BipositionOutside as exc:
            raise NotContained(f"biposition outside the family: {exc}") from None
        n = max(n, lo)
        d = family.member(n)
        flat = flatten(d)
        missing = [p for p in wanted if p not in flat]
        if missing:
            raise NotContained(f"member {n} misses {missing[:3]}")
        return d
    hi = family.max_rank if family.max_rank is not None else lo + scan_limit
    previous = None
    for n in range(lo, hi + 1):
        d = family.member(n)
        flat = flatten(d)
        if all(p in flat for p in wanted):
            return d
        if flat == previous and family.max_rank is None:
            break  # stabilized without containing them
        previous = flat
    raise NotContained(f"no member up to rank {hi} contains all bipositions")


# -- carrying families through reductions ---------------------------------------------


def _step_depth(step) -> int:
    return min(applicative_depth(b) for b in step.positions)


def _expand_member(d: SDerivation, path: ReductionSequence, attach: int) -> SDerivation:
    """Reattach a derivation of path.terms[attach] and expand it backwards
    through the recorded steps to the initial term."""
    current = SDerivation(path.terms[attach], d.root)
    check_s(current)
    for m in range(attach - 1, -1, -1):
        step = path.steps[m]
        stages = [path.terms[m]]
        for b in step.positions:
            stages.append(reduce_at(stages[-1], b))
        if not term_equal(stages[-1], path.terms[m + 1]):  # pragma: no cover
            raise SubjectMismatch(f"recorded step {m} does not replay")
        for i in range(len(step.positions) - 1, -1, -1):
            current = expand_s(
                current, step.positions[i], stages[i], uniform_track_policy
            )
    return current


def expand_infinitary(family, path: ReductionSequence) -> ApproximantFamily:
    """Pull a family of derivations of the final/limit term of a recorded
    reduction back to its initial term, member by member.

    Each member only inspects the limit term up to some applicative depth; the
    member is attached at the first recorded stage all of whose later steps
    are strictly deeper, then subject-expanded through the earlier steps.
    PathTooShort when the recorded prefix never gets deep enough.
    """
    steps = path.steps
    depths = [_step_depth(s) for s in steps]

    def pull_back(n: int) -> SDerivation:
        d = family.member(n)
        maxad = max(
            (applicative_depth(a) for a in _support_of(d)), default=0
        )
        first = 0
        for m, depth in enumerate(depths):
            if depth <= maxad:
                first = m + 1
        for attach in range(first, len(steps) + 1):
            try:
                result = _expand_member(d, path, attach)
            except (TermError, InvalidSDerivation):
                continue
            before = check_s(d)
            after = check_s(result)
            if before != after:  # pragma: no cover - expansion preserves them
                raise InvalidSDerivation("expansion changed the conclusion")
            return result
        raise PathTooShort(
            f"member {n} sees depth {maxad}, deeper than the recorded prefix"
        )

    return ApproximantFamily(
        term=path.initial,
        member_fn=pull_back,
        min_rank=family.min_rank,
        max_rank=family.max_rank,
    )


def _support_of(d: SDerivation):
    return all_judgments(d).keys()


@dataclass(frozen=True, eq=False)
class StabilizedPrefix:
    """The states of a derivation pushed forward through a recorded
    reduction, with access to the judgments that have stopped changing."""

    path: ReductionSequence
    states: tuple[SDerivation, ...]
    depths: tuple[int, ...]

    @property
    def final(self) -> SDerivation:
        return self.states[-1]

    def judgments(self, level: int) -> dict[Position, SJudgment]:
        """Judgments at applicative depth <= level, taken at the first state
        all of whose later recorded steps are strictly deeper.

        NotStable when the recorded prefix ends with a step at depth <=
        level, i.e. it never witnesses the front moving past that level.
        """
        first = len(self.depths)
        for m in range(len(self.depths) - 1, -1, -1):
            if self.depths[m] > level:
                first = m
            else:
                break
        if self.depths and first == len(self.depths):
            raise NotStable(f"steps at depth <= {level} may still occur")
        settled = {
            a: j
            for a, j in all_judgments(self.states[first]).items()
            if applicative_depth(a) <= level
        }
        last = {
            a: j
            for a, j in all_judgments(self.states[-1]).items()
            if applicative_depth(a) <= level
        }
        if settled != last:  # pragma: no cover - locality of deep steps
            raise InvalidSDerivation("a deep step moved a shallow judgment")
        return settled


def infinitary_reduce_family(deriv: SDerivation, path: ReductionSequence) -> StabilizedPrefix:
    """Push a derivation of the initial term forward through every recorded
    step, keeping each intermediate state."""
    if not term_equal(deriv.subject, path.initial):
        raise SubjectMismatch("the derivation must type the start of the path")
    states = [deriv]
    current = deriv
    for m, step in enumerate(path.steps):
        for b in step.positions:
            current = reduce_s(current, b)
        if not term_equal(current.subject, path.terms[m + 1]):  # pragma: no cover
            raise SubjectMismatch(f"recorded step {m} does not replay")
        states.append(current)
    return StabilizedPrefix(
        path=path,
        states=tuple(states),
        depths=tuple(_step_depth(s) for s in path.steps),
    )


# -- typability bounds ----------------------------------------------------------------


def refutes_s_typability(t: Term, max_judgments: int) -> bool:
    """True when the subject provably has no derivation with at most the
    given number of judgments.

    Collapsing tracks to multisets turns any derivation into a multiset one
    of the same size, so an exhaustive multiset search bounds both systems.
    """
    return bounded_search_r0(t, max_judgments) is None
