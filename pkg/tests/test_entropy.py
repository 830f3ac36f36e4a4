import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import crossing_brute, entropy_bits
from tournament_entropy.core import Permutation
from tournament_entropy.decomposition import dyadic_decomposition
from tournament_entropy.entropy import (
    DistributionFormatError,
    PermDistribution,
    SubsetDistribution,
    binary_entropy,
    block_distributions,
    crossing_count,
    entropy,
    marginal_profile,
    mpc_check,
    read_distribution,
    relative_entropy,
    write_distribution,
)


def test_entropy_examples():
    assert entropy(PermDistribution.uniform(3)) == pytest.approx(math.log2(6), abs=1e-12)
    assert entropy(PermDistribution.point_mass(Permutation((2, 1, 3)))) == 0
    two = PermDistribution.from_mapping(2, {(1, 2): 0.6, (2, 1): 0.4})
    assert entropy(two) == pytest.approx(0.970951, abs=1e-6)


@pytest.mark.parametrize("n", range(1, 8))
def test_uniform_entropy_is_log_factorial(n):
    assert abs(entropy(PermDistribution.uniform(n)) - math.log2(math.factorial(n))) < 1e-9


def test_binary_entropy():
    assert binary_entropy(0.5) == 1
    assert binary_entropy(0) == 0 and binary_entropy(1) == 0
    assert binary_entropy(0.6) == pytest.approx(0.970951, abs=1e-6)
    with pytest.raises(ValueError):
        binary_entropy(1.2)


def test_relative_entropy_examples():
    assert relative_entropy([0.3, 0.7], [0.3, 0.7]) == 0
    assert relative_entropy([1, 0], [0.5, 0.5]) == pytest.approx(-1)
    with pytest.raises(ValueError):
        relative_entropy([0.5, 0.5], [1, 0])


def test_relative_entropy_nonpositive_on_random_pairs():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        k = int(rng.integers(1, 8))
        p, q = rng.dirichlet(np.ones(k)), rng.dirichlet(np.ones(k))
        assert relative_entropy(p, q) <= 1e-12


def test_crossing_count_examples():
    assert crossing_count({1, 2}, 2) == 0
    assert crossing_count({3, 4}, 2) == 4
    assert crossing_count({1, 4}, 2) == 2
    with pytest.raises(ValueError):
        crossing_count({1}, 2)


@pytest.mark.parametrize("m", range(1, 7))
def test_crossing_count_exhaustive(m):
    for y in itertools.combinations(range(1, 2 * m + 1), m):
        f = crossing_count(y, m)
        assert f == crossing_brute(y, m) == sum(y) - m * (m + 1) // 2
        assert 0 <= f <= m * m


def test_distribution_validation():
    with pytest.raises(ValueError):
        PermDistribution.from_mapping(2, {(1, 2): 0.5, (2, 1): 0.4})
    with pytest.raises(ValueError):
        PermDistribution.from_mapping(2, {(1, 1): 1.0})
    with pytest.raises(ValueError):
        SubsetDistribution(2, {(1,): 1.0})


def test_mpc_point_mass_top():
    for m in (1, 3, 5):
        rep = mpc_check(SubsetDistribution.point_mass(range(m + 1, 2 * m + 1), m), 0.3)
        assert rep.hypothesis and rep.entropy == 0 and rep.chain_holds
        assert rep.expected_crossings == m * m


def test_mpc_uniform_is_symmetric():
    for m in (1, 2, 4):
        rep = mpc_check(SubsetDistribution.uniform(m), 0.01)
        assert rep.expected_crossings == pytest.approx(m * m / 2)
        assert not rep.hypothesis and rep.chain == ()
        assert marginal_profile(SubsetDistribution.uniform(m)).deltas == (0,) * (2 * m)


def test_mpc_mixture_example():
    m = 3
    subsets = list(itertools.combinations(range(1, 7), 3))
    probs = {s: Fraction(1, 10) / 20 for s in subsets}
    probs[(4, 5, 6)] += Fraction(9, 10)
    rep = mpc_check(SubsetDistribution(m, probs), 0.2)
    # 0.9 * 9 + 0.1 * 4.5
    assert rep.expected_crossings == pytest.approx(8.55)
    assert rep.expected_crossings == rep.expected_crossings_from_marginals
    assert rep.hypothesis and rep.chain_holds
    assert rep.entropy < rep.bound


def test_marginals_sum_to_zero_exactly():
    subsets = list(itertools.combinations(range(1, 9), 4))
    rng = np.random.default_rng(1)
    weights = rng.integers(0, 9, len(subsets))
    weights[0] += 1
    probs = {s: Fraction(int(w), int(weights.sum())) for s, w in zip(subsets, weights)}
    profile = marginal_profile(SubsetDistribution(4, probs))
    assert profile.total == 0
    assert all(isinstance(d, Fraction) for d in profile.deltas)


@st.composite
def biased_subset_distributions(draw):
    m = draw(st.integers(1, 5))
    subsets = list(itertools.combinations(range(1, 2 * m + 1), m))
    weights = draw(st.lists(st.integers(0, 20), min_size=len(subsets), max_size=len(subsets)))
    top = draw(st.integers(0, 400))
    total = sum(weights) + top
    if total == 0:
        top, total = 1, 1
    probs = {s: Fraction(w, total) for s, w in zip(subsets, weights)}
    probs[subsets[-1]] += Fraction(top, total)
    return SubsetDistribution(m, probs)


@settings(max_examples=300, deadline=None)
@given(biased_subset_distributions(), st.sampled_from([0.05, 0.1, 0.2, 0.3]))
def test_chain_soundness(dist, eps):
    rep = mpc_check(dist, eps)
    if rep.hypothesis:
        assert rep.chain_holds
        assert rep.sum_delta_sq >= eps**2 * dist.m / 8 - 1e-12
        assert rep.entropy <= (1 - eps**2 / 8) * 2 * dist.m


def _subadditive(n, probs):
    perms = list(itertools.permutations(range(1, n + 1)))
    dist = PermDistribution(n, perms, probs)
    blocks = block_distributions(dist, dyadic_decomposition(n))
    return entropy(dist), sum(entropy(b) for b in blocks)


@pytest.mark.parametrize("n", [4, 8])
def test_block_subadditivity(n):
    rng = np.random.default_rng(n)
    count = math.factorial(n)
    for alpha in (0.05, 1.0):
        h, total = _subadditive(n, rng.dirichlet(np.full(count, alpha)))
        assert h <= total + 1e-9


def test_uniform_blocks_are_independent():
    h, total = _subadditive(4, np.full(24, 1 / 24))
    assert total == pytest.approx(math.log2(6) + 2)
    assert h == pytest.approx(total)


def test_distribution_file_round_trip(tmp_path):
    perm = PermDistribution.from_mapping(3, {(1, 2, 3): 0.25, (3, 2, 1): 0.75})
    write_distribution(perm, tmp_path / "p.txt")
    back = read_distribution(tmp_path / "p.txt", "perm")
    assert back.perms.tolist() == perm.perms.tolist() and back.probs.tolist() == perm.probs.tolist()

    sub = SubsetDistribution(2, {(3, 4): Fraction(2, 3), (1, 4): Fraction(1, 3)})
    write_distribution(sub, tmp_path / "s.txt")
    again = read_distribution(tmp_path / "s.txt", "subset")
    assert again.probs == sub.probs
    assert entropy(again) == pytest.approx(entropy_bits([2 / 3, 1 / 3]))


@pytest.mark.parametrize(
    "text", ["1 2 : 0.5\n", "1 2 0.5\n", "1 2 : 0.5\n1 2 3 : 0.5\n", "", "1 2 : x\n"]
)
def test_distribution_reader_rejects(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(DistributionFormatError):
        read_distribution(path, "perm")
