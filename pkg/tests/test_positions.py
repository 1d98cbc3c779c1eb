from hypothesis import given
from hypothesis import strategies as st

from rigidlam.positions import (
    EPSILON,
    applicative_depth,
    code_position,
    collapse,
    format_position,
    parse_position,
    position_code,
)

positions = st.lists(st.integers(min_value=0, max_value=9), max_size=6).map(tuple)


def test_applicative_depth_counts_argument_letters():
    assert applicative_depth(()) == 0
    assert applicative_depth((0, 1, 0)) == 0
    assert applicative_depth((2,)) == 1
    assert applicative_depth((0, 2, 1, 3, 0, 7)) == 3


def test_collapse_clamps_tracks_to_two():
    assert collapse(()) == ()
    assert collapse((0, 1, 2)) == (0, 1, 2)
    assert collapse((5, 1, 9, 0)) == (2, 1, 2, 0)


@given(positions)
def test_collapse_is_idempotent(p):
    assert collapse(collapse(p)) == collapse(p)


@given(positions)
def test_collapse_preserves_applicative_depth(p):
    assert applicative_depth(collapse(p)) == applicative_depth(p)


def test_position_code_samples():
    assert position_code(()) == 0
    assert position_code((1,)) == 3
    assert position_code((3, 1)) == 68


@given(positions)
def test_position_code_round_trip(p):
    assert code_position(position_code(p)) == p


@given(positions, positions)
def test_position_code_injective(p, q):
    if p != q:
        assert position_code(p) != position_code(q)


@given(positions)
def test_format_parse_round_trip(p):
    assert parse_position(format_position(p)) == p


def test_epsilon_formatting():
    assert format_position(EPSILON) == "e"
    assert parse_position("e") == ()
    assert parse_position("0.1.2") == (0, 1, 2)
