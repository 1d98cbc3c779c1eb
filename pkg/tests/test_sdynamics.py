import pytest

from rigidlam import (
    O,
    SAbs,
    SApp,
    SAx,
    SDerivation,
    all_judgments,
    app,
    check_s,
    equinecessary,
    equinecessary_closure,
    expand_s,
    is_quantitative,
    lam,
    lenlex_track,
    position_code,
    reduce_s,
    residual_biposition,
    residual_maps,
    residual_position,
    sarrow,
    seq,
    size_s,
    supp_s,
    term_equal,
    uniform_track_policy,
    var,
)
from rigidlam.sdynamics import (
    UndefinedResidual,
    binder_axiom_positions,
    quasi_residual,
    quasi_residual_position,
    reference_track_policy,
    regions_over,
    right_bisupport,
)
from rigidlam.fixtures import OP, p_ex, s_ex


def identity_redex():
    t1 = app(lam("x", var("x")), var("y"))
    return t1, SDerivation(t1, SApp(SAbs(SAx(2, O)), ((2, SAx(3, O)),)))


def test_reduce_s_identity_redex():
    t1, P1 = identity_redex()
    j1 = check_s(P1)
    assert j1.ty == O and dict(j1.context) == {"y": seq([(3, O)])}
    P1r = reduce_s(P1, ())
    assert term_equal(P1r.subject, var("y"))
    assert P1r.root == SAx(3, O)
    assert size_s(P1) - size_s(P1r) == 3
    assert check_s(P1r) == j1
    assert is_quantitative(P1r)


def test_residual_maps_identity_redex():
    _, P1 = identity_redex()
    maps = residual_maps(P1, ())
    assert maps.defined == {(2,): ()}
    assert {a: u.case for a, u in maps.undefined.items()} == {
        (): "redex_root",
        (1,): "redex_abstraction",
        (1, 0): "redex_variable",
    }
    assert regions_over(P1, ()) == [()]
    assert binder_axiom_positions(P1, ()) == {2: ()}
    P1r = reduce_s(P1, ())
    assert set(maps.defined.values()) == set(supp_s(P1r))


def test_quasi_residuals_six_antecedents():
    _, P1 = identity_redex()
    bis = right_bisupport(P1)
    assert bis == {
        ((), ()),
        ((1,), ()),
        ((1,), (1,)),
        ((1,), (2,)),
        ((1, 0), ()),
        ((2,), ()),
    }
    images = {bp: quasi_residual(P1, (), bp) for bp in bis}
    assert all(img == ((), ()) for img in images.values())
    assert len(images) == 6
    assert quasi_residual_position(P1, (), (1, 0)) == ()
    assert isinstance(quasi_residual_position(P1, (), (1,)), UndefinedResidual)
    assert isinstance(residual_position(P1, (), ()), UndefinedResidual)
    assert residual_biposition(P1, (), ((2,), ())) == ((), ())


def test_equinecessary_closure_of_root():
    _, P1 = identity_redex()
    cl = equinecessary_closure(P1, [("r", (), ())])
    rights = {(a, c) for kind, a, c in (b for b in cl if b[0] == "r")}
    lefts = {bp for bp in cl if bp[0] == "l"}
    assert rights == right_bisupport(P1)
    assert lefts == {
        ("l", (1, 0), 0, (2,)),
        ("l", (2,), "y", (3,)),
        ("l", (), "y", (3,)),
    }


def test_expansion_round_trip_identity_redex():
    t1, P1 = identity_redex()
    P1r = reduce_s(P1, ())
    back = expand_s(P1r, (), t1)
    assert back == P1
    back_ref = expand_s(P1r, (), t1, reference_track_policy(P1))
    assert back_ref == P1
    assert reduce_s(back, ()) == P1r


def test_track_policies():
    assert lenlex_track(()) == 2
    assert lenlex_track((1,)) == 4
    assert lenlex_track((2,)) == 5
    with pytest.raises(ValueError):
        lenlex_track((3,))
    # the uniform policy is a fixed injection over arbitrary letters
    assert uniform_track_policy((), (), O) == 2
    assert uniform_track_policy((), (3, 1), O) == 2 + position_code((3, 1))
    samples = [(), (1,), (2,), (1, 0), (5, 2)]
    tracks = {uniform_track_policy((), w, O) for w in samples}
    assert len(tracks) == len(samples)
    assert all(k >= 2 for k in tracks)


def test_reduce_below_untyped_argument_keeps_tree():
    I = lam("z", var("z"))
    t2 = app(lam("x", var("y")), app(I, var("w")))
    P2 = SDerivation(t2, SApp(SAbs(SAx(5, O)), ()))
    P2r = reduce_s(P2, (2,))
    assert P2r.root == P2.root
    assert term_equal(P2r.subject, app(lam("x", var("y")), var("w")))
    assert check_s(P2r) == check_s(P2)
    m2 = residual_maps(P2, (2,))
    assert m2.defined == {a: a for a in supp_s(P2)} and not m2.undefined


def test_expand_types_vanished_argument_with_nothing():
    I = lam("z", var("z"))
    P2e = expand_s(SDerivation(var("y"), SAx(5, O)), (), app(lam("x", var("y")), I))
    assert P2e.root == SApp(SAbs(SAx(5, O)), ())
    assert check_s(P2e).ty == O


def substituted_occurrence_fixture():
    I = lam("z", var("z"))
    S = sarrow(seq([(2, O)]), O)
    t3 = app(lam("x", app(var("x"), var("y"))), I)
    P3 = SDerivation(
        t3,
        SApp(
            SAbs(SApp(SAx(3, S), ((2, SAx(6, O)),))),
            ((3, SAbs(SAx(2, O))),),
        ),
    )
    return t3, P3


def test_substituted_occurrence_step_and_residuals():
    t3, P3 = substituted_occurrence_fixture()
    P3r = reduce_s(P3, ())
    assert term_equal(P3r.subject, app(lam("z", var("z")), var("y")))
    assert P3r.root == SApp(SAbs(SAx(2, O)), ((2, SAx(6, O)),))
    assert check_s(P3r) == check_s(P3)

    m3 = residual_maps(P3, ())
    assert binder_axiom_positions(P3, ()) == {3: (1,)}
    assert m3.defined == {(1, 0): (), (1, 0, 2): (2,), (3,): (1,), (3, 0): (1, 0)}
    assert len(set(m3.defined.values())) == len(m3.defined)
    assert set(m3.defined.values()) == set(supp_s(P3r))
    assert {a: u.case for a, u in m3.undefined.items()} == {
        (): "redex_root",
        (1,): "redex_abstraction",
        (1, 0, 1): "redex_variable",
    }
    jP, jR = all_judgments(P3), all_judgments(P3r)
    assert all(jR[m3.defined[a]].ty == jP[a].ty for a in m3.defined)

    # a second step finishes the normalization
    P3rr = reduce_s(P3r, ())
    assert term_equal(P3rr.subject, var("y")) and P3rr.root == SAx(6, O)


def test_substituted_occurrence_expansions():
    t3, P3 = substituted_occurrence_fixture()
    P3r = reduce_s(P3, ())
    assert expand_s(P3r, (), t3, reference_track_policy(P3)) == P3
    P3e = expand_s(P3r, (), t3)  # default: occurrence at w=(1,) gets track 5
    assert P3e.root.args[0][0] == 5
    assert reduce_s(P3e, ()) == P3r
    assert check_s(P3e) == check_s(P3)


def test_reduce_s_is_stable_across_runs():
    _, P3 = substituted_occurrence_fixture()
    results = {reduce_s(P3, ()) for _ in range(10)}
    assert len(results) == 1


def test_equinecessity_on_shared_variable():
    d = p_ex()
    r = lambda a, c=(): ("r", tuple(a), tuple(c))
    assert equinecessary(d, r((0, 2)), r((), (9,)))
    assert equinecessary(d, r((0, 2)), r((), (4, 2)))
    assert not equinecessary(d, r((0, 2)), r((0, 3)))
    assert equinecessary(d, r((0, 1)), r((0, 1), (1,)))
    assert equinecessary(d, r((0, 1)), r((), ()))
    assert equinecessary(d, r((), (4,)), r((), (4, 1)))
    assert not equinecessary(d, r((), (4,)), r((), (4, 2)))
    assert equinecessary(d, ("l", (0,), 0, (9,)), r((0, 2)))
    cl = equinecessary_closure(d, [r((), ())])
    assert equinecessary_closure(d, cl) == cl
