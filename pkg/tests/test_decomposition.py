import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tournament_entropy.core import Permutation, Tournament, make_random_tournament, make_transitive_tournament
from tournament_entropy.decomposition import (
    TreeBuildError,
    TreeLemmaInstance,
    build_tree,
    check_ltree,
    default_leaf_threshold,
    dyadic_decomposition,
    extract_blocks,
    random_partition_tree,
    reconstruct_from_blocks,
    tree_stats,
)


def test_default_leaf_threshold_is_ceil_sqrt():
    for n in range(1, 300):
        assert default_leaf_threshold(n) == max(2, math.ceil(math.sqrt(n)))


def test_single_leaf_tree():
    tree = build_tree(make_transitive_tournament(3), 0.3, leaf_threshold=5)
    stats = tree_stats(tree)
    assert (stats.lambda_, stats.m) == (0, 0)
    assert len(tree.nodes) == 1 and not tree.check_invariants()


def test_n4_transitive_singletons():
    tree = build_tree(make_transitive_tournament(4), 0.3, leaf_threshold=2)
    assert all(leaf.size == 1 for leaf in tree.leaves())
    stats = tree_stats(tree)
    assert stats.m < 4
    assert stats.lambda_ == sum(u * d for u, d in zip(stats.leaf_sizes, stats.leaf_depths))
    assert not tree.check_invariants()


def test_complete_binary_tree_lambda():
    tree = build_tree(make_transitive_tournament(8), 0.3, leaf_threshold=2)
    stats = tree_stats(tree)
    assert stats.lambda_ == 8 + 4 + 4 + 2 * 4 == 24
    assert set(stats.leaf_depths) == {3}


def test_n243_transitive_lambda_bound():
    tree = build_tree(make_transitive_tournament(243), 0.4, leaf_threshold=16)
    stats = tree_stats(tree)
    assert Fraction(stats.lambda_) >= Fraction(243, 2) * 5  # log_3 243 = 5 exactly
    assert stats.lambda_ >= 607.5


def test_n81_random_internal_count():
    tree = build_tree(make_random_tournament(81, 3), 0.4)
    assert tree_stats(tree).m < 81
    assert not tree.check_invariants()


def test_tree_text_is_stable():
    t = make_random_tournament(40, 8)
    a = build_tree(t, 0.4, seed=5).to_text()
    b = build_tree(t, 0.4, seed=5).to_text()
    assert a == b
    first = a.splitlines()[0].split()
    assert first[:3] == ["0", "-", "root"]


def test_build_failure_names_node():
    # the only 2x2 candidate {1,2} x {3,4} is mixed, so nothing is 0.05-regular
    t = Tournament.from_arcs(4, [(1, 2), (1, 3), (4, 1), (2, 3), (2, 4), (3, 4)])
    with pytest.raises(TreeBuildError, match="node 0"):
        build_tree(t, 0.05, leaf_threshold=2, floor_fraction=0.45)


def test_build_tree_rejects_tiny_threshold():
    with pytest.raises(ValueError):
        build_tree(make_transitive_tournament(4), 0.3, leaf_threshold=1)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 60), st.integers(0, 10_000))
def test_built_trees_satisfy_invariants(n, seed):
    t = make_random_tournament(n, seed)
    try:
        tree = build_tree(t, 0.45, seed=seed)
    except TreeBuildError:
        return
    assert not tree.check_invariants()
    stats = tree_stats(tree)
    assert stats.m < n
    assert all(size < tree.leaf_threshold for size in stats.leaf_sizes)


def test_ltree_examples():
    for b in (2, 3):
        for depth in range(0, 7):
            leaves = tuple((2, depth) for _ in range(b**depth))
            res = check_ltree(TreeLemmaInstance(2 * b**depth, b, 2, leaves))
            assert res.holds and abs(res.lhs - res.rhs) <= 1e-9
    single = check_ltree(TreeLemmaInstance(5, 2, 7, ((5, 0),)))
    assert single.rhs <= 0 <= single.lhs and single.holds
    with pytest.raises(ValueError):
        check_ltree(TreeLemmaInstance(5, 1, 7, ((5, 0),)))


def test_ltree_random_trees():
    rng = random.Random(17)
    for _ in range(300):
        leaves = tuple(random_partition_tree(100, rng))
        t = max(u for u, _ in leaves)
        assert check_ltree(TreeLemmaInstance(100, 3, t, leaves)).holds


def test_dyadic_examples():
    assert [(set(p.left), set(p.right)) for p in dyadic_decomposition(2)] == [({1}, {2})]
    pairs = dyadic_decomposition(4)
    assert [(set(p.left), set(p.right)) for p in pairs] == [({1, 2}, {3, 4}), ({1}, {2}), ({3}, {4})]
    covered = sorted((a, b) for p in pairs for a in p.left for b in p.right)
    assert covered == list(itertools.combinations(range(1, 5), 2))
    pairs8 = dyadic_decomposition(8)
    assert len(pairs8) == 7
    assert sum(len(p.left) * len(p.right) for p in pairs8) == 28
    with pytest.raises(ValueError):
        dyadic_decomposition(6)


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_dyadic_pairs_partition_all_ordered_pairs(n):
    pairs = dyadic_decomposition(n)
    covered = [(a, b) for p in pairs for a in p.left for b in p.right]
    assert sorted(covered) == list(itertools.combinations(range(1, n + 1), 2))
    assert all(len(p.left) == len(p.right) for p in pairs)
    assert sum(2 * len(p.left) for p in pairs) == n * int(math.log2(n))


def test_reconstruct_identity_and_reversal():
    pairs = dyadic_decomposition(8)
    top = [set(range(len(p.left) + 1, 2 * len(p.left) + 1)) for p in pairs]
    bottom = [set(range(1, len(p.left) + 1)) for p in pairs]
    assert reconstruct_from_blocks(8, top) == Permutation.identity(8)
    assert reconstruct_from_blocks(8, bottom) == Permutation(tuple(range(8, 0, -1)))
    with pytest.raises(ValueError):
        reconstruct_from_blocks(8, [{1}] * 7)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([2, 4, 8, 16]), st.data())
def test_reconstruct_round_trip(n, data):
    sigma = Permutation(tuple(data.draw(st.permutations(list(range(1, n + 1))))))
    pairs = dyadic_decomposition(n)
    assert reconstruct_from_blocks(n, extract_blocks(sigma, pairs)) == sigma
