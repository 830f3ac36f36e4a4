from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import regular_oracle
from tournament_entropy.core import BipartitePair, Tournament, make_random_tournament, make_transitive_tournament
from tournament_entropy.regularity import (
    BigraphView,
    ExhaustiveCapError,
    RegularPairNotFound,
    check_regular,
    find_regular_pair,
    is_regular_exact,
    refute_regular_sampled,
    ternary_partition,
    violates,
)


def view(matrix, offset=None):
    m = np.asarray(matrix, dtype=bool)
    a, b = m.shape
    return BigraphView.from_matrix(range(1, a + 1), range(a + 1, a + b + 1), m)


ONE_EDGE = view([[1, 0], [0, 0]])


@st.composite
def small_views(draw, max_side=6):
    a = draw(st.integers(1, max_side))
    b = draw(st.integers(1, max_side))
    bits = draw(st.lists(st.booleans(), min_size=a * b, max_size=a * b))
    return view(np.array(bits).reshape(a, b))


def test_complete_and_empty_are_regular():
    assert is_regular_exact(view(np.ones((3, 3))), 0.1).regular
    for delta in (0.05, 0.3, 0.9):
        assert is_regular_exact(view(np.zeros((4, 3))), delta).regular


def test_one_edge_example():
    verdict = is_regular_exact(ONE_EDGE, 0.4)
    assert not verdict.regular and verdict.mode == "exact"
    assert verdict.witness.left == {1} and verdict.witness.right == {3}
    assert verdict.witness.deviation == pytest.approx(0.75)


def test_exact_cap():
    big = view(np.ones((11, 10)))
    with pytest.raises(ExhaustiveCapError):
        is_regular_exact(big, 0.3)
    assert is_regular_exact(big, 0.3, cap=21).regular


def test_sampled_examples():
    assert refute_regular_sampled(view(np.ones((6, 7))), 0.2, 50, 0).regular
    found = refute_regular_sampled(ONE_EDGE, 0.4, 1000, 11)
    assert not found.regular and found.mode == "sampled"
    assert violates(ONE_EDGE, found.witness.left, found.witness.right, 0.4)
    again = refute_regular_sampled(ONE_EDGE, 0.4, 1000, 11)
    assert again == found


def test_sampled_determinism_on_large_graph():
    rng = np.random.default_rng(5)
    v = view(rng.random((30, 30)) < 0.5)
    assert refute_regular_sampled(v, 0.2, 40, 9) == refute_regular_sampled(v, 0.2, 40, 9)


@settings(max_examples=300, deadline=None)
@given(small_views(), st.sampled_from([0.1, 0.2, 0.25, 0.34, 0.5, 0.7]))
def test_exact_agrees_with_oracle(v, delta):
    verdict = is_regular_exact(v, delta)
    regular, worst = regular_oracle(v.matrix(), delta)
    assert verdict.regular == regular
    if not regular:
        # the witness is maximally deviating and genuine
        assert violates(v, verdict.witness.left, verdict.witness.right, delta)
        assert Fraction(verdict.witness.deviation).limit_denominator(10_000) == worst


@settings(max_examples=300, deadline=None)
@given(small_views(), st.sampled_from([0.1, 0.25, 0.4, 0.6]))
def test_complement_closure(v, delta):
    assert is_regular_exact(v, delta).regular == is_regular_exact(v.complement(), delta).regular


@settings(max_examples=200, deadline=None)
@given(small_views(), st.sampled_from([0.15, 0.3, 0.5]), st.integers(0, 1000))
def test_sampled_never_contradicts_exact(v, delta, seed):
    sampled = refute_regular_sampled(v, delta, 10, seed)
    if not sampled.regular:
        assert not is_regular_exact(v, delta).regular
        assert violates(v, sampled.witness.left, sampled.witness.right, delta)


def test_check_regular_switches_mode():
    small = view(np.ones((3, 3)))
    assert check_regular(small, 0.2).mode == "exact"
    large = view(np.ones((15, 15)))
    assert check_regular(large, 0.2).mode == "sampled"


def test_find_regular_pair_complete():
    v = view(np.ones((8, 8)))
    assert find_regular_pair(v, 0.2, 4) == v.pair


def test_find_regular_pair_half_graph():
    half = np.array([[i <= j for j in range(8)] for i in range(8)])
    v = view(half)
    pair = find_regular_pair(v, 0.45, 2)
    assert min(len(pair.left), len(pair.right)) >= 2
    assert is_regular_exact(v.restrict(pair), 0.45).regular


def test_find_regular_pair_random():
    rng = np.random.default_rng(2024)
    v = view(rng.random((10, 10)) < 0.5)
    pair = find_regular_pair(v, 0.3, 3)
    assert min(len(pair.left), len(pair.right)) >= 3
    assert is_regular_exact(v.restrict(pair), 0.3).regular


def test_find_regular_pair_floor_errors():
    with pytest.raises(RegularPairNotFound):
        find_regular_pair(view(np.ones((2, 2))), 0.3, 3)
    with pytest.raises(ValueError):
        find_regular_pair(view(np.ones((2, 2))), 0.3, 0)


def test_find_regular_pair_unreachable_floor_reports_best():
    # a checkerboard of 1x1 deviations 1/2 cannot be regular at delta 0.3 with sides >= 2
    board = np.array([[(i + j) % 2 for j in range(4)] for i in range(4)])
    v = view(board)
    with pytest.raises(RegularPairNotFound) as info:
        find_regular_pair(v, 0.3, 4)
    assert info.value.best_pair is not None


def test_ternary_partition_transitive():
    t = make_transitive_tournament(9)
    part = ternary_partition(t, range(1, 10), 0.4, 0.2)
    assert part.density == 1
    assert part.left | part.right | part.rest == set(range(1, 10))
    assert min(len(part.left), len(part.right)) >= 0.2 * 9
    assert part.verdict.regular


def rotation_tournament(n: int) -> Tournament:
    return Tournament.from_arcs(
        n, [(u, v) for u in range(1, n + 1) for v in range(1, n + 1) if (v - u) % n in range(1, (n - 1) // 2 + 1)]
    )


def test_ternary_partition_rotation():
    t = rotation_tournament(9)
    part = ternary_partition(t, range(1, 10), 0.4, 0.1)
    sub = BigraphView.from_tournament(t, BipartitePair(part.left, part.right))
    assert is_regular_exact(sub, 0.4).regular
    assert part.density >= Fraction(1, 2)
    assert all(u in part.left and v in part.right for u, v in part.arcs.arcs)


@settings(max_examples=40, deadline=None)
@given(st.integers(6, 30), st.integers(0, 10_000), st.sampled_from([0.3, 0.4, 0.45]))
def test_ternary_partition_postconditions(n, seed, delta):
    t = make_random_tournament(n, seed)
    try:
        part = ternary_partition(t, range(1, n + 1), delta, 0.1, seed=seed)
    except RegularPairNotFound:
        return
    assert part.density >= Fraction(1, 2)
    assert min(len(part.left), len(part.right)) >= 0.1 * n
    assert not (part.left & part.right or part.left & part.rest or part.right & part.rest)
    assert part.verdict.regular
