import pytest

from rigidlam import (
    ApproximantFamily,
    NotContained,
    NotDirected,
    PathTooShort,
    SubjectMismatch,
    SupportCandidate,
    app,
    check_s,
    expand_infinitary,
    find_finite_approximant,
    flatten,
    full_support_family,
    hh_reduce,
    infinitary_reduce_family,
    join,
    lam,
    leq_approx,
    meet,
    natural_extension,
    position_code,
    refutes_s_typability,
    supp_s,
    term_equal,
    var,
)
from rigidlam.reduction import NotStable
from rigidlam.fixtures import cu_f, f_tower, omega, tower_family
from rigidlam.nf import clev

from conftest import O, OP, unconstrained_assignment


@pytest.fixture(scope="module")
def two_member_chain():
    t = lam("x", app(app(var("x"), var("y")), app(var("x"), var("z"))))
    fam = full_support_family(t)
    return t, fam, fam.member(1), fam.member(2)


def test_leq_on_family_members(two_member_chain):
    _, _, d1, d2 = two_member_chain
    assert set(flatten(d1)) <= set(flatten(d2))
    assert leq_approx(d1, d2)
    assert not leq_approx(d2, d1)
    assert leq_approx(d1, d1)


def test_chain_join_meet_are_the_ends(two_member_chain):
    t, _, d1, d2 = two_member_chain
    assert term_equal(join([d1, d2]).subject, t)
    assert flatten(join([d1, d2])) == flatten(d2)
    assert flatten(meet([d1, d2])) == flatten(d1)
    assert flatten(join([d1])) == flatten(d1)


def test_sub_candidate_lattice(two_member_chain):
    t, fam, _, d2 = two_member_chain
    full = fam.positions_upto(2)
    A_small = frozenset(a for a in full if a[:2] != (0, 2))
    cand_small = SupportCandidate(t, A_small)
    d_small = natural_extension(
        cand_small, unconstrained_assignment(cand_small), fam.track_policy
    )
    A_small2 = frozenset(a for a in full if a[:3] != (0, 1, 2))
    cand_small2 = SupportCandidate(t, A_small2)
    d_small2 = natural_extension(
        cand_small2, unconstrained_assignment(cand_small2), fam.track_policy
    )
    assert leq_approx(d_small, d2) and leq_approx(d_small2, d2)
    j = join([d_small, d_small2])
    m = meet([d_small, d_small2])
    assert leq_approx(d_small, j) and leq_approx(d_small2, j)
    assert leq_approx(m, d_small) and leq_approx(m, d_small2)
    assert flatten(join([d_small, m])) == flatten(d_small)  # absorption
    assert flatten(meet([d_small, j])) == flatten(d_small)
    assert flatten(j) == flatten(join([d_small2, d_small]))  # commutativity
    assert flatten(meet([meet([d_small, d_small2]), d2])) == flatten(
        meet([d_small, meet([d_small2, d2])])
    )


def test_not_directed_witnesses():
    tiny = var("x")
    ca = SupportCandidate(tiny, frozenset({()}))
    da = natural_extension(ca, {(): O})
    db = natural_extension(ca, {(): OP})
    for op_ in (join, meet):
        with pytest.raises(NotDirected):
            op_([da, db])
    dc = natural_extension(ca, {(): O}, policy=lambda a: 7)
    with pytest.raises(NotDirected) as exc:
        join([da, dc])
    assert exc.value.witness is not None


def test_subject_mismatch(two_member_chain):
    _, _, d1, _ = two_member_chain
    da = natural_extension(SupportCandidate(var("x"), frozenset({()})), {(): O})
    with pytest.raises(SubjectMismatch):
        leq_approx(da, d1)


def test_meet_requires_directed_inputs():
    t2 = app(var("x"), app(var("y"), var("z")))
    A2 = frozenset({(), (1,), (2,), (2, 1), (2, 2)})
    c2 = SupportCandidate(t2, A2)
    e1 = natural_extension(c2, unconstrained_assignment(c2))
    e2 = natural_extension(
        c2,
        unconstrained_assignment(c2),
        policy=lambda a: position_code(a) + 2 if a == (1,) else position_code(a) + 50,
    )
    with pytest.raises(NotDirected):
        meet([e1, e2])


def test_lattice_laws_on_random_triples(approximant_groups):
    checked = 0
    for _full, (x, y, z) in approximant_groups:
        fx, fy = flatten(x), flatten(y)
        assert flatten(join([x, x])) == fx
        assert flatten(meet([x, x])) == fx
        assert flatten(join([x, y])) == flatten(join([y, x]))
        assert flatten(meet([x, y])) == flatten(meet([y, x]))
        assert flatten(join([join([x, y]), z])) == flatten(join([x, join([y, z])]))
        assert flatten(meet([meet([x, y]), z])) == flatten(meet([x, meet([y, z])]))
        assert flatten(join([x, meet([x, y])])) == fx
        assert flatten(meet([x, join([x, y])])) == fx
        checked += 1
    assert checked >= 60


def test_generated_approximants_sit_below_their_full_member(approximant_groups):
    for full, members in approximant_groups:
        for d in members:
            assert leq_approx(d, full)


def test_find_finite_approximant_oracle_and_scan():
    fam = tower_family()
    spine = lambda j: tuple(range(2, j + 2))
    bips = [("r", spine(j) + (1,), ()) for j in range(3)]
    d = find_finite_approximant(fam, bips)
    fl = flatten(d)
    assert all(p in fl for p in bips)
    assert len(supp_s(d)) == len(fam.positions_upto(3))
    with pytest.raises(NotContained):
        find_finite_approximant(fam, [("r", (5, 5), ())])
    scan_fam = ApproximantFamily(
        term=f_tower(), member_fn=fam.member, min_rank=1, max_rank=None,
        called_rank_fn=None,
    )
    assert flatten(find_finite_approximant(scan_fam, bips)) == fl


def test_expand_infinitary_tower_along_recorded_path():
    fam = tower_family()
    path = hh_reduce(cu_f(), 8)
    assert term_equal(path.terms[1], app(var("f"), cu_f()))
    pulled = expand_infinitary(fam, path)
    members = {n: pulled.member(n) for n in range(1, 5)}
    for n, dn in members.items():
        assert term_equal(dn.subject, cu_f())
        jn = check_s(dn)
        assert jn.ty == O
        assert jn == check_s(fam.member(n))
    assert leq_approx(members[1], members[2])
    assert leq_approx(members[2], members[3])
    assert leq_approx(members[3], members[4])
    with pytest.raises(PathTooShort):
        pulled.member(12)


def test_infinitary_reduce_family_forward():
    fam = tower_family()
    K = 8
    path = hh_reduce(cu_f(), K)
    d4 = expand_infinitary(fam, path).member(4)
    prefix = infinitary_reduce_family(d4, path)
    assert len(prefix.states) == len(path.steps) + 1
    assert term_equal(prefix.final.subject, path.final)
    conc = check_s(d4)
    for st in prefix.states:
        assert check_s(st) == conc
    settled = prefix.judgments(1)
    assert all(len([l for l in a if l >= 2]) <= 1 for a in settled)
    with pytest.raises(NotStable):
        prefix.judgments(K + 5)


def test_refutes_s_typability():
    assert refutes_s_typability(omega(), 8)
    assert not refutes_s_typability(var("x"), 1)
