import pytest

from rigidlam import (
    BohmTree,
    HeadDivergence,
    adr,
    app,
    bohm_prefix,
    fix,
    head_reduce,
    head_step,
    hh_reduce,
    is_hnf,
    is_normal,
    lam,
    leftmost_step,
    limit_prefix,
    term_equal,
    var,
)
from rigidlam.reduction import BOTTOM_FUEL, BOTTOM_LOOP, UNEXPLORED, NotStable
from rigidlam.fixtures import cu_f, f_tower, omega


def test_head_reduce_simple():
    t = app(lam("x", app(var("x"), var("x"))), var("y"))
    result, steps = head_reduce(t)
    assert term_equal(result, app(var("y"), var("y")))
    assert steps == 1


def test_head_divergence_loop_proof():
    with pytest.raises(HeadDivergence) as exc:
        head_reduce(omega())
    assert exc.value.reason == "loop"


def test_head_divergence_fuel():
    grower = lam("x", app(app(var("x"), var("x")), var("x")))
    with pytest.raises(HeadDivergence) as exc:
        head_reduce(app(grower, grower), fuel=20)
    assert exc.value.reason == "fuel"


def test_is_hnf_and_is_normal():
    assert is_hnf(var("x"))
    assert is_hnf(app(var("x"), omega()))
    assert not is_hnf(omega())
    assert is_normal(lam("x", app(var("x"), var("y"))))
    assert not is_normal(app(var("x"), app(lam("y", var("y")), var("z"))))


def test_adr_is_depth_of_shallowest_redex():
    assert adr(var("x")) is None
    assert adr(omega()) == 0
    assert adr(app(var("f"), omega())) == 1
    assert adr(app(var("f"), app(var("g"), omega()))) == 2


def test_hh_reduce_contracts_depth_levels():
    t = app(lam("x", app(var("x"), var("x"))), app(lam("y", var("y")), var("z")))
    seq = hh_reduce(t, 10)
    assert term_equal(seq.final, app(var("z"), var("z")))
    assert [len(s.positions) for s in seq.steps] == [1, 1, 1]


def test_leftmost_step_under_binders():
    t = lam("x", app(lam("y", var("y")), var("x")))
    assert term_equal(leftmost_step(t), lam("x", var("x")))


def _f_spine(n: int) -> BohmTree:
    tree = UNEXPLORED
    for _ in range(n):
        tree = BohmTree("app", None, (BohmTree("free", "f"), tree))
    return tree


def test_bohm_prefix_depth_convention():
    assert bohm_prefix(cu_f(), 3, 50) == _f_spine(3)
    assert bohm_prefix(f_tower(), 3, 50) == _f_spine(3)


def test_bohm_prefix_bottoms():
    assert bohm_prefix(omega(), 3, 100) == BOTTOM_LOOP
    grower = lam("x", app(app(var("x"), var("x")), var("x")))
    assert bohm_prefix(app(grower, grower), 2, 10) == BOTTOM_FUEL


def test_bohm_prefix_mixed_tree():
    t = app(var("g"), omega())
    assert bohm_prefix(t, 2, 100) == BohmTree(
        "app", None, (BohmTree("free", "g"), BOTTOM_LOOP)
    )


def test_limit_prefix_stabilizes():
    seq = hh_reduce(cu_f(), 5)
    stable = limit_prefix(seq, 3)
    assert stable == limit_prefix(hh_reduce(cu_f(), 8), 3)
    with pytest.raises(NotStable):
        limit_prefix(hh_reduce(cu_f(), 2), 3)
