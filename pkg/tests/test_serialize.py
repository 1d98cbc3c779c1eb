import json

import pytest

from rigidlam import (
    SchemaError,
    check_r0,
    check_s,
    dumps_assignment,
    dumps_bipositions,
    dumps_derivation,
    dumps_path,
    hh_reduce,
    loads_assignment,
    loads_bipositions,
    loads_derivation,
    loads_path,
    parse_derivation,
    read_path,
    read_term,
    sarrow,
    seq,
    term_equal,
    write_derivation,
    write_path,
    write_term,
)
from rigidlam.fixtures import (
    cu_f,
    p_ex,
    pi_n,
    pi_prime,
    pitfall_discard,
    ptilde_prefix,
    tower_member,
)

from conftest import O


DERIVS = {
    "p_ex": p_ex,
    "pi_1": lambda: pi_n(1),
    "pi_3": lambda: pi_n(3),
    "pi_prime_1": lambda: pi_prime(1),
    "pi_prime_5": lambda: pi_prime(5),
    "p_n_2": lambda: tower_member(2),
    "p_n_4": lambda: tower_member(4),
    "pitfall_discard": pitfall_discard,
    "ptilde_prefix": ptilde_prefix,
}


@pytest.mark.parametrize("name", sorted(DERIVS))
def test_derivation_round_trip(name):
    d = DERIVS[name]()
    text = dumps_derivation(d)
    back = loads_derivation(text)
    assert type(back) is type(d)
    assert term_equal(back.subject, d.subject)
    assert back.root == d.root
    if type(back).__name__.startswith("S"):
        check = lambda x: check_s(x, allow_hypotheses=True)
    else:
        check = check_r0
    assert check(back) == check(d)
    assert dumps_derivation(back) == text


def test_derivation_file_round_trip(tmp_path):
    d = pi_prime(2)
    target = tmp_path / "d.json"
    write_derivation(d, target)
    back = parse_derivation(target)
    assert back.root == d.root and term_equal(back.subject, d.subject)


def test_term_file_round_trip(tmp_path):
    for i, t in enumerate((cu_f(), p_ex().subject, pi_prime(3).subject)):
        target = tmp_path / f"t{i}.lam"
        write_term(t, target)
        assert term_equal(read_term(target), t)


def test_path_round_trip_replays_steps(tmp_path):
    path = hh_reduce(cu_f(), 4)
    text = dumps_path(path)
    back = loads_path(text)
    assert term_equal(back.initial, path.initial)
    assert len(back.steps) == len(path.steps)
    for got, want in zip(back.steps, path.steps):
        assert got.positions == want.positions
        assert term_equal(got.result, want.result)
    assert dumps_path(back) == text
    target = tmp_path / "p.json"
    write_path(path, target)
    assert dumps_path(read_path(target)) == text


def test_bipositions_round_trip():
    bips = (
        ("r", (), ()),
        ("r", (0, 1), (2, 1)),
        ("l", (0,), 0, (5,)),
        ("l", (), "f", ()),
    )
    assert loads_bipositions(dumps_bipositions(bips)) == bips


def test_assignment_round_trip():
    s_assign = {(): O, (1,): sarrow(seq([(2, O)]), O), (2, 1): O}
    back = loads_assignment(dumps_assignment(s_assign))
    assert back == s_assign
    assert dumps_assignment(back) == dumps_assignment(s_assign)


def test_dumps_determinism():
    d = tower_member(3)
    texts = {dumps_derivation(d) for _ in range(5)}
    assert len(texts) == 1
    data = json.loads(texts.pop())
    assert data["schema"] == "rigidlam-derivation/1"


@pytest.mark.parametrize(
    "loader,bad",
    [
        (loads_derivation, ""),
        (loads_derivation, "[]"),
        (loads_derivation, '{"schema": "rigidlam-derivation/2"}'),
        (loads_derivation, '{"schema": "rigidlam-derivation/1"}'),
        (
            loads_derivation,
            '{"schema": "rigidlam-derivation/1", "system": "x", '
            '"subject": "y", "root": {}}',
        ),
        (loads_path, '{"schema": "rigidlam-path/1", "initial": 3, "steps": []}'),
        (loads_path, '{"schema": "rigidlam-path/1", "initial": "y", "steps": [[]]}'),
        (loads_bipositions, '{"schema": "rigidlam-bipositions/1", "bipositions": [["q"]]}'),
        (loads_assignment, '{"schema": "rigidlam-assignment/1"}'),
    ],
)
def test_schema_errors(loader, bad):
    with pytest.raises(SchemaError):
        loader(bad)


def test_tampered_derivation_fails_recheck():
    text = dumps_derivation(pi_prime(2))
    data = json.loads(text)
    # retarget the subject to a different term: replay must reject it
    data["subject"] = "x"
    with pytest.raises(Exception):
        loads_derivation(json.dumps(data))
