import pytest

from rigidlam import (
    SDerivation,
    SAx,
    SApp,
    app,
    check_r0,
    check_s,
    collapse_deriv,
    fix,
    is_quantitative,
    is_unforgetful_r0,
    is_unforgetful_s,
    lam,
    sarrow,
    seq,
    stvar,
    subterm,
    supp_s,
    term_equal,
    var,
)
from rigidlam.r0 import O as RO, arrow as r0_arrow, mset
from rigidlam.nf import (
    InvalidCandidate,
    NotNormalForm,
    SupportCandidate,
    called_rank,
    clev,
    default_candidate_track,
    default_track_inverse,
    finite_extension_family,
    forgetful_spots,
    full_support_family,
    hereditary_argument_subderivations,
    natural_extension,
    rank,
    unforgetful_nf_typing,
)
from rigidlam.sdynamics import BipositionOutside
from rigidlam.fixtures import f_tower, hnf_corpus, omega, tower_family, x_omega

from conftest import O, OP, unconstrained_assignment


def test_rank_oracle_values():
    assert rank(()) == 0
    assert rank((0,) * 6 + (2,) * 5) == 5
    assert rank((2, 8, 3)) == 8
    assert rank((1, 1)) == 1


def test_default_track_bijection():
    assert default_track_inverse(default_candidate_track((2, 3))) == (2, 3)
    assert default_candidate_track(()) == 2
    assert default_track_inverse(1) is None


def test_single_variable():
    t = var("x")
    cand = SupportCandidate(t, frozenset({()}))
    assert clev(cand, ()) == ("unconstrained", 0, ())
    d = natural_extension(cand, {(): O})
    j = check_s(d)
    assert j.ty == O
    assert dict(j.context) == {"x": seq([(default_candidate_track(()), O)])}


def test_identity_nonzero_level():
    t = lam("x", var("x"))
    cand = SupportCandidate(t, frozenset({(), (0,)}))
    assert clev(cand, ()) == ("nonzero", 1, (0,))
    assert clev(cand, (0,)) == ("unconstrained", 0, (0,))
    d = natural_extension(cand, {(0,): O})
    j = check_s(d)
    k = default_candidate_track((0,))
    assert j.context == ()
    assert j.ty == sarrow(seq([(k, O)]), O)


def test_unused_binder_stays_unforgetful():
    t = lam("x", var("y"))
    fam = unforgetful_nf_typing(t)
    assert fam.min_rank == 0 and fam.max_rank == 0
    j0 = check_s(fam.member(0))
    assert j0.ty == sarrow(seq([]), O)
    assert is_unforgetful_s(j0)
    assert fam.limit_is_unforgetful()


def spine_fixture():
    t = app(app(var("x"), var("y")), var("z"))
    A = frozenset({(), (1,), (1, 1), (1, 2), (2,)})
    cand = SupportCandidate(t, A)
    assign = {(): O, (1, 2): OP, (2,): stvar("q")}
    return t, cand, assign


def test_partial_levels_and_types():
    _, cand, assign = spine_fixture()
    assert clev(cand, (1, 1)) == ("partial", 2, ())
    assert clev(cand, (1,)) == ("partial", 1, ())
    assert clev(cand, (2,)) == ("unconstrained", 0, (2,))
    d = natural_extension(cand, assign)
    j = check_s(d)
    kx = default_candidate_track((1, 1))
    ky = default_candidate_track((1, 2))
    kz = default_candidate_track((2,))
    assert j.ty == O
    expect_x = sarrow(seq([(2, OP)]), sarrow(seq([(2, stvar("q"))]), O))
    assert dict(j.context)["x"] == seq([(kx, expect_x)])
    assert dict(j.context)["y"] == seq([(ky, OP)])
    assert dict(j.context)["z"] == seq([(kz, stvar("q"))])


def test_called_ranks_finite_family():
    _, cand, assign = spine_fixture()
    fam = finite_extension_family(cand, assign)
    assert fam.min_rank == 1 and fam.max_rank == 2
    assert called_rank(fam, ("r", (1, 1), ())) == 1
    assert called_rank(fam, ("r", (1, 1), (1,))) == 1
    assert called_rank(fam, ("r", (1, 1), (2,))) == 2
    assert called_rank(fam, ("r", (), ())) == 0
    kz = default_candidate_track((2,))
    assert called_rank(fam, ("l", (), "z", (kz,))) == 2
    for bad in (("r", (), (2,)), ("r", (1, 1), (3,))):
        with pytest.raises(BipositionOutside):
            called_rank(fam, bad)


def test_member_one_keeps_the_spine():
    _, cand, assign = spine_fixture()
    fam = finite_extension_family(cand, assign)
    d1 = fam.member(1)
    j1 = check_s(d1)
    assert supp_s(d1) == [(), (1,), (1, 1)]
    assert j1.ty == O
    kx = default_candidate_track((1, 1))
    assert dict(j1.context)["x"] == seq([(kx, sarrow(seq([]), sarrow(seq([]), O)))])


def test_candidate_validation():
    t, _, _ = spine_fixture()
    with pytest.raises(InvalidCandidate):
        SupportCandidate(t, frozenset({(), (1,)}))  # app at (1,) lacks (1,1)
    with pytest.raises(InvalidCandidate):
        SupportCandidate(t, frozenset({(1,)}))  # no root
    with pytest.raises(NotNormalForm):
        natural_extension(
            SupportCandidate(
                app(lam("w", var("w")), var("y")), frozenset({(), (1,), (1, 0)})
            ),
            {(1, 0): O},
        )


def test_full_support_family_monotone():
    t = lam("x", app(app(var("x"), var("y")), app(var("x"), var("z"))))
    fam = full_support_family(t)
    assert fam.min_rank == 1
    top = fam.max_rank
    d_full = fam.member(top)
    check_s(d_full)
    assert is_quantitative(d_full)
    prev = set()
    for n in range(fam.min_rank, top + 1):
        cur = set(supp_s(fam.member(n)))
        assert prev <= cur
        prev = cur


def test_tower_members_and_collapse_contexts():
    fam = tower_family()
    for n in range(1, 5):
        d_n = fam.member(n)
        j_n = check_s(d_n)
        assert is_quantitative(d_n)
        assert j_n.ty == O
        axioms = [a for a in supp_s(d_n) if a[-1:] == (1,)]
        assert len(axioms) == n
        c = check_r0(collapse_deriv(d_n))
        expected = mset([r0_arrow(mset([RO]), RO)] * (n - 1) + [r0_arrow(mset([]), RO)])
        assert dict(c.context) == {"f": expected}
        assert c.ty == RO
        assert not is_unforgetful_s(j_n)
        assert not is_unforgetful_r0(c)


def test_tower_limit_is_unforgetful():
    assert tower_family().limit_is_unforgetful(upto=6)


def test_tower_member_shapes_hand_computed():
    fam = tower_family()
    ctx2 = dict(check_s(fam.member(2)).context)
    assert ctx2["f"] == seq([(2, sarrow(seq([(2, O)]), O)), (3, sarrow(seq([]), O))])
    ctx3 = dict(check_s(fam.member(3)).context)
    assert ctx3["f"] == seq(
        [
            (2, sarrow(seq([(2, O)]), O)),
            (3, sarrow(seq([(3, O)]), O)),
            (4, sarrow(seq([]), O)),
        ]
    )


def test_tower_called_ranks():
    fam = tower_family()
    assert fam.called_rank(("r", (1,), ())) == 1
    assert fam.called_rank(("r", (1,), (1,))) == 1
    assert fam.called_rank(("r", (1,), (2,))) == 2
    spine = lambda j: tuple(range(2, j + 2))
    bips = [("r", spine(j) + (1,), ()) for j in range(4)]
    ranks = [fam.called_rank(p) for p in bips]
    assert ranks == [1, 2, 3, 4]
    sup = set(supp_s(fam.member(max(ranks))))
    assert all(a in sup for _, a, _c in bips)


def test_tower_left_bips_and_partial_traces():
    fam = tower_family()
    assert fam.called_rank(("l", (), "f", (2,))) == 1
    assert fam.called_rank(("l", (), "f", (3,))) == 2
    with pytest.raises(BipositionOutside):
        fam.called_rank(("l", (), "g", (2,)))
    assert fam.clev((2, 1)) == ("partial", 1, (2,))
    assert fam.called_rank(("r", (2, 1), ())) == 2
    assert fam.called_rank(("r", (2, 1), (3,))) == 3


def test_x_omega_judgment_is_forgetful():
    dx = SDerivation(x_omega(), SApp(SAx(2, sarrow(seq([]), O)), ()))
    jx = check_s(dx)
    assert not is_unforgetful_s(jx)
    assert forgetful_spots(jx) == frozenset({("ctx", "x", (2,))})


def test_hereditary_argument_extraction():
    t = lam("x", app(app(var("x"), var("y")), var("z")))
    fam = full_support_family(t)
    d = fam.member(fam.max_rank)
    subs = hereditary_argument_subderivations(d)
    assert [(a, k) for a, k, _ in subs] == [((0, 1, 2), 2), ((0, 2), 2)]
    for a, _k, sd in subs:
        assert term_equal(sd.subject, subterm(t, a))
        assert is_unforgetful_s(check_s(sd))


def test_f_tower_subterm_is_itself():
    assert term_equal(subterm(f_tower(), (2,)), f_tower())
