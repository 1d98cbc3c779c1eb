import random

import pytest

from rigidlam import (
    InvalidDerivation,
    O,
    R0Derivation,
    RAbs,
    RApp,
    RAx,
    app,
    arrow,
    bounded_search_r0,
    check_r0,
    expand_head_r0,
    head_step_r0,
    is_unforgetful_r0,
    lam,
    mset,
    size,
    subst_deriv,
    term_equal,
    type_hnf,
    type_normal_form,
    var,
)
from rigidlam.fixtures import cu_f, discard_omega, gamma_n, omega, pi_prime, x_omega

from conftest import nf_corpus


def test_mset_is_canonically_sorted():
    assert mset([O, arrow(mset([]), O)]) == mset([arrow(mset([]), O), O])
    assert arrow(mset([O, O]), O) == arrow(mset([O, O]), O)


def test_pi_prime_judgments_and_sizes():
    for n in range(1, 6):
        d = pi_prime(n)
        j = check_r0(d)
        assert j.context == gamma_n(n)
        assert j.ty == O
        assert size(d) == 2 * n


def test_check_rejects_wrong_shapes():
    with pytest.raises(InvalidDerivation):
        check_r0(R0Derivation(var("x"), RAbs(RAx(O))))
    with pytest.raises(InvalidDerivation):
        check_r0(R0Derivation(lam("x", var("x")), RAx(O)))
    # app argument typed with a type not in the head's domain
    bad = R0Derivation(
        app(var("x"), var("y")),
        RApp(RAx(arrow(mset([O]), O)), (RAx(arrow(mset([]), O)),)),
    )
    with pytest.raises(InvalidDerivation):
        check_r0(bad)


def test_type_hnf_on_head_normal_terms():
    j = check_r0(type_hnf(lam("x", var("x"))))
    assert j.context == ()
    assert j.ty == arrow(mset([O]), O)

    j = check_r0(type_hnf(x_omega()))
    assert dict(j.context) == {"x": mset([arrow(mset([]), O)])}
    assert j.ty == O
    assert not is_unforgetful_r0(j)

    from rigidlam import TermError

    with pytest.raises(TermError):
        type_hnf(omega())


def test_type_normal_form_and_unforgetfulness():
    for t in nf_corpus(seed=11, count=40):
        d = type_normal_form(t)
        j = check_r0(d)
        assert term_equal(d.subject, t)
        assert is_unforgetful_r0(j)


def _typed_redexes(seed: int, count: int):
    """Derivations of (\\x. body) y with body a random normal form: the
    binder axioms are matched by fresh axioms typing the free variable y."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        body = nf_corpus(seed=rng.randrange(10**9), count=1, depth=3)[0]
        abstraction = lam("x", body)
        d_abs = type_normal_form(abstraction)
        domain = check_r0(d_abs).ty[1]
        redex = app(abstraction, var("y"))
        deriv = R0Derivation(redex, RApp(d_abs.root, tuple(RAx(ty) for ty in domain)))
        check_r0(deriv)
        out.append(deriv)
    return out


def test_head_step_strictly_decreases_size_on_100():
    derivs = _typed_redexes(seed=7, count=100)
    for d in derivs:
        before = size(d)
        after_deriv, report = head_step_r0(d)
        j_before, j_after = check_r0(d), check_r0(after_deriv)
        assert j_before == j_after
        assert size(after_deriv) < before
        assert size(after_deriv) == before - 2 - report.occurrences


def test_subst_size_identity_on_30():
    derivs = _typed_redexes(seed=8, count=30)
    for d in derivs:
        _, report = head_step_r0(d)
        assert report.result_size == (
            report.body_size + sum(report.argument_sizes) - report.occurrences
        )


def test_expand_head_r0_inverts_the_step():
    for d in _typed_redexes(seed=9, count=20):
        after, _ = head_step_r0(d)
        back = expand_head_r0(after, d.subject)
        assert term_equal(back.subject, d.subject)
        assert check_r0(back) == check_r0(d)
        re_reduced, _ = head_step_r0(back)
        assert check_r0(re_reduced) == check_r0(after)


def test_bounded_search():
    assert bounded_search_r0(omega(), 6) is None
    assert bounded_search_r0(var("x"), 2) is not None
    found = bounded_search_r0(discard_omega(), 8)
    assert found is not None
    assert check_r0(found).ty is not None


def test_cu_f_head_expansion_transport():
    # f (cu_f) is head normal; expansion carries its typing back to cu_f
    hnf = app(var("f"), cu_f())
    d = type_hnf(hnf)
    back = expand_head_r0(d, cu_f())
    assert term_equal(back.subject, cu_f())
    assert check_r0(back) == check_r0(d)
