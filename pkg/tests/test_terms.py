import pytest

from rigidlam import (
    TermError,
    UnguardedFix,
    app,
    app_many,
    bvar,
    fix,
    lam,
    reduce_at,
    substitute,
    subterm,
    term_equal,
    var,
)
from rigidlam.terms import ABS, APP, BVAR, FREE


def test_lam_binds_free_occurrences():
    t = lam("x", app(var("x"), var("y")))
    assert t.nodes[0][0] == ABS
    body = t.nodes[t.nodes[0][1]]
    assert body[0] == APP
    assert t.nodes[body[1]] == (BVAR, 0)
    assert t.nodes[body[2]] == (FREE, "y")


def test_nested_binders_use_de_bruijn_indices():
    t = lam("x", lam("y", app(var("x"), var("y"))))
    assert t.label_at((0, 0, 1)) == (BVAR, 1)
    assert t.label_at((0, 0, 2)) == (BVAR, 0)


def test_fix_ties_the_knot():
    t = fix("r", app(var("f"), var("r")))
    assert term_equal(subterm(t, (2,)), t)
    assert term_equal(t, app(var("f"), t))


def test_unguarded_fix_rejected():
    with pytest.raises(UnguardedFix):
        fix("r", var("r"))


def test_substitute():
    t = app(var("x"), lam("y", var("x")))
    s = substitute(t, "x", var("z"))
    assert term_equal(s, app(var("z"), lam("y", var("z"))))
    unchanged = substitute(t, "w", var("z"))
    assert term_equal(unchanged, t)


def test_subterm_navigation():
    t = app(app(var("x"), var("y")), var("z"))
    assert term_equal(subterm(t, (1, 1)), var("x"))
    assert term_equal(subterm(t, (1, 2)), var("y"))
    assert term_equal(subterm(t, (2,)), var("z"))
    with pytest.raises(TermError):
        subterm(t, (0,))


def test_reduce_at():
    redex = app(lam("x", app(var("x"), var("x"))), var("y"))
    assert term_equal(reduce_at(redex, ()), app(var("y"), var("y")))
    t = app(var("z"), redex)
    assert term_equal(reduce_at(t, (2,)), app(var("z"), app(var("y"), var("y"))))
    with pytest.raises(TermError):
        reduce_at(var("x"), ())


def test_term_equal_is_alpha_insensitive_bisimulation():
    a = lam("x", var("x"))
    b = lam("y", var("y"))
    assert term_equal(a, b)
    assert not term_equal(a, lam("x", var("z")))


def test_app_many():
    t = app_many(var("f"), var("x"), var("y"))
    assert term_equal(t, app(app(var("f"), var("x")), var("y")))


def test_in_support():
    t = app(var("x"), lam("y", var("y")))
    assert t.in_support(())
    assert t.in_support((2, 0))
    assert not t.in_support((2, 1))
    assert not t.in_support((0,))
