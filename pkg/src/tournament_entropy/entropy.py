"""Entropy in bits, relative entropy, and the crossing-count entropy bound for random subsets.

All entropies are base 2.  Sums are accumulated in natural log and
converted once.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import BipartitePair, Permutation, extract_relative_positions

__all__ = [
    "DistributionFormatError",
    "MPCReport",
    "MarginalProfile",
    "PermDistribution",
    "SubsetDistribution",
    "binary_entropy",
    "block_distributions",
    "crossing_count",
    "entropy",
    "marginal_profile",
    "mpc_check",
    "read_distribution",
    "relative_entropy",
    "write_distribution",
]

LN2 = math.log(2)
NORMALIZATION_TOL = 1e-12


class DistributionFormatError(ValueError):
    pass


class PermDistribution:
    """Explicit probability vector over permutations of ``[n]``.

    ``perms`` is a ``(k, n)`` integer array of image sequences and ``probs``
    the matching probabilities; zero-probability rows are allowed.
    """

    def __init__(self, n: int, perms, probs, *, check: bool = True) -> None:
        perms = np.asarray(perms, dtype=np.int64).reshape(-1, n)
        probs = np.asarray(probs, dtype=float)
        if check:
            if len(perms) != len(probs):
                raise ValueError("perms and probs differ in length")
            if (probs < 0).any():
                raise ValueError("negative probability")
            if abs(probs.sum() - 1.0) > NORMALIZATION_TOL * max(1, len(probs)) ** 0.5 * 10:
                raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
            target = np.arange(1, n + 1)
            if len(perms) and not (np.sort(perms, axis=1) == target).all():
                raise ValueError("rows must be permutations of [n]")
            if len({row.tobytes() for row in perms}) != len(perms):
                raise ValueError("duplicate permutation in support")
        perms.setflags(write=False)
        probs.setflags(write=False)
        self.n, self.perms, self.probs = n, perms, probs

    @classmethod
    def from_mapping(cls, n: int, probs: Mapping[Permutation | Sequence[int], float]) -> "PermDistribution":
        keys = [tuple(k.images if isinstance(k, Permutation) else k) for k in probs]
        return cls(n, keys, [float(v) for v in probs.values()])

    @classmethod
    def uniform(cls, n: int) -> "PermDistribution":
        perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int64)
        return cls(n, perms, np.full(len(perms), 1.0 / len(perms)), check=False)

    @classmethod
    def point_mass(cls, sigma: Permutation) -> "PermDistribution":
        return cls(sigma.n, [sigma.images], [1.0])

    def items(self) -> Iterable[tuple[Permutation, float]]:
        for row, p in zip(self.perms, self.probs):
            yield Permutation(tuple(int(i) for i in row)), float(p)

    def prob_arc(self, u: int, v: int) -> float:
        """``Pr(sigma(u) < sigma(v))``."""
        return float(self.probs[self.perms[:, u - 1] < self.perms[:, v - 1]].sum())

    def __len__(self) -> int:
        return len(self.probs)


class SubsetDistribution:
    """Probability mapping on ``m``-subsets of ``[2m]``.

    Probabilities may be floats or :class:`fractions.Fraction`; fractions keep
    marginal computations exact.
    """

    def __init__(self, m: int, probs: Mapping[Iterable[int], float | Fraction]) -> None:
        table: dict[frozenset[int], float | Fraction] = {}
        for key, p in probs.items():
            y = frozenset(int(a) for a in key)
            if len(y) != m or not all(1 <= a <= 2 * m for a in y):
                raise ValueError(f"{sorted(y)} is not an {m}-subset of [{2 * m}]")
            if p < 0:
                raise ValueError("negative probability")
            table[y] = table.get(y, 0) + p
        total = sum(table.values())
        if abs(float(total) - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        self.m = m
        self.probs = table

    @classmethod
    def uniform(cls, m: int) -> "SubsetDistribution":
        subsets = list(itertools.combinations(range(1, 2 * m + 1), m))
        return cls(m, {s: Fraction(1, len(subsets)) for s in subsets})

    @classmethod
    def point_mass(cls, y: Iterable[int], m: int) -> "SubsetDistribution":
        return cls(m, {tuple(y): Fraction(1)})

    def items(self):
        return sorted(self.probs.items(), key=lambda kv: sorted(kv[0]))

    def __len__(self) -> int:
        return len(self.probs)


def _entropy_of(probs: Iterable[float]) -> float:
    p = np.asarray([float(x) for x in probs], dtype=float)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum() / LN2) + 0.0  # no negative zero


def entropy(dist: PermDistribution | SubsetDistribution) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    if isinstance(dist, PermDistribution):
        return _entropy_of(dist.probs)
    return _entropy_of(dist.probs.values())


def binary_entropy(p: float) -> float:
    if not 0 <= p <= 1:
        raise ValueError(f"p = {p} outside [0, 1]")
    if p in (0, 1):
        return 0.0
    p = float(p)
    return -(p * math.log(p) + (1 - p) * math.log1p(-p)) / LN2


def relative_entropy(p: Sequence[float], q: Sequence[float]) -> float:
    """``Σ p_i log₂(q_i/p_i)``: nonpositive, zero iff ``p == q``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("p and q must share an index set")
    support = p > 0
    if (q[support] == 0).any():
        raise ValueError("q vanishes where p does not")
    return float((p[support] * np.log(q[support] / p[support])).sum() / LN2)


def crossing_count(y: Iterable[int], m: int) -> int:
    """Pairs ``a < b`` with ``a`` outside ``y`` and ``b`` inside, for an ``m``-subset of ``[2m]``.

    The direct count is checked against ``Σ_{b∈y} b - C(m+1, 2)``.
    """
    y = frozenset(int(b) for b in y)
    if len(y) != m or not all(1 <= b <= 2 * m for b in y):
        raise ValueError(f"{sorted(y)} is not an {m}-subset of [{2 * m}]")
    direct = sum(1 for b in y for a in range(1, b) if a not in y)
    closed = sum(y) - m * (m + 1) // 2
    if direct != closed:
        raise AssertionError(f"crossing count mismatch: {direct} != {closed}")
    return direct


@dataclass(frozen=True)
class MarginalProfile:
    """``deltas[a-1] = Pr(a ∈ Y) - 1/2``."""

    deltas: tuple

    def __post_init__(self) -> None:
        for d in self.deltas:
            if not -0.5 - 1e-12 <= d <= 0.5 + 1e-12:
                raise ValueError("marginal shift outside [-1/2, 1/2]")

    @property
    def total(self):
        return sum(self.deltas)


def marginal_profile(dist: SubsetDistribution) -> MarginalProfile:
    m = dist.m
    inclusion = [0] * (2 * m)
    for y, p in dist.probs.items():
        for a in y:
            inclusion[a - 1] += p
    half = Fraction(1, 2) if all(isinstance(p, (int, Fraction)) for p in dist.probs.values()) else 0.5
    return MarginalProfile(tuple(x - half for x in inclusion))


@dataclass(frozen=True)
class ChainStep:
    name: str
    lhs: float
    rhs: float
    relation: str  # one of "<", "<=", ">", ">="
    holds: bool


@dataclass(frozen=True)
class MPCReport:
    m: int
    epsilon: float
    profile: MarginalProfile
    expected_crossings: float
    expected_crossings_from_marginals: float
    hypothesis: bool
    entropy: float
    sum_delta_sq: float
    sum_positive_delta: float
    bound: float
    chain: tuple[ChainStep, ...] = field(default=())

    @property
    def chain_holds(self) -> bool:
        return all(step.holds for step in self.chain)


def _step(name: str, lhs: float, rhs: float, relation: str, tol: float) -> ChainStep:
    lhs, rhs = float(lhs), float(rhs)
    ok = {
        "<": lhs < rhs,
        "<=": lhs <= rhs + tol,
        ">": lhs > rhs,
        ">=": lhs >= rhs - tol,
    }[relation]
    return ChainStep(name, lhs, rhs, relation, bool(ok))


def mpc_check(dist: SubsetDistribution, epsilon: float, tol: float = 1e-9) -> MPCReport:
    """Evaluate the crossing-count entropy bound on an explicit random subset.

    When ``E f(Y) > (1/2 + epsilon) m²`` every link of the chain
    ``H(Y) <= Σ H(1/2+δ_a) <= 2m - 2Σδ_a² <= (1-ε²/8)·2m`` is evaluated,
    together with the intermediate bounds on ``Σδ_b b`` and ``Σ_{δ_b>0} δ_b``.
    Strict links are checked strictly; ``tol`` only loosens the
    non-strict ones.
    """
    if not 0 < epsilon < 0.5:
        raise ValueError("epsilon must lie in (0, 1/2)")
    m = dist.m
    profile = marginal_profile(dist)
    if abs(float(profile.total)) > 1e-9:
        raise AssertionError(f"marginal shifts sum to {profile.total}, not 0")
    direct = sum(p * crossing_count(y, m) for y, p in dist.probs.items())
    half = Fraction(1, 2) if isinstance(profile.deltas[0], Fraction) else 0.5
    via_marginals = sum((half + d) * b for b, d in enumerate(profile.deltas, start=1)) - m * (m + 1) // 2
    if abs(float(direct) - float(via_marginals)) > 1e-9 * max(1, m * m):
        raise AssertionError(f"E f mismatch: {direct} vs {via_marginals}")
    threshold = (0.5 + epsilon) * m * m
    hypothesis = float(direct) > threshold
    h = entropy(dist)
    deltas = [float(d) for d in profile.deltas]
    sq = sum(d * d for d in deltas)
    pos = sum(d for d in deltas if d > 0)
    bound = (1 - epsilon**2 / 8) * 2 * m
    chain: list[ChainStep] = []
    if hypothesis:
        weighted = sum(d * b for b, d in enumerate(deltas, start=1))
        h_marg = sum(binary_entropy(min(1.0, max(0.0, 0.5 + d))) for d in deltas)
        chain = [
            _step("sum delta_b*b > eps*m^2", weighted, epsilon * m * m, ">", 0.0),
            _step("sum_{delta_b>0} delta_b > eps*m/2", pos, epsilon * m / 2, ">", 0.0),
            _step("sum delta^2 >= eps^2*m/8", sq, epsilon**2 * m / 8, ">=", tol),
            _step("H(Y) <= sum H(1/2+delta_a)", h, h_marg, "<=", tol),
            _step("sum H(1/2+delta_a) <= 2m - 2*sum delta^2", h_marg, 2 * m - 2 * sq, "<=", tol),
            _step("2m - 2*sum delta^2 <= (1-eps^2/8)*2m", 2 * m - 2 * sq, bound, "<=", tol),
            _step("H(Y) < (1-eps^2/8)*2m", h, bound, "<", 0.0),
        ]
    return MPCReport(
        m=m,
        epsilon=epsilon,
        profile=profile,
        expected_crossings=float(direct),
        expected_crossings_from_marginals=float(via_marginals),
        hypothesis=hypothesis,
        entropy=h,
        sum_delta_sq=sq,
        sum_positive_delta=pos,
        bound=bound,
        chain=tuple(chain),
    )


def block_distributions(
    dist: PermDistribution, pairs: Sequence[BipartitePair]
) -> list[SubsetDistribution]:
    """Law of the relative-position set of ``R`` inside ``sigma(L ∪ R)`` for each pair."""
    out = []
    for pair in pairs:
        if len(pair.left) != len(pair.right):
            raise ValueError("block pairs must have equal sides")
        table: dict[frozenset[int], float] = {}
        for sigma, p in dist.items():
            if p == 0:
                continue
            y = extract_relative_positions(sigma, pair)
            table[y] = table.get(y, 0.0) + p
        out.append(SubsetDistribution(len(pair.left), table))
    return out


def _format_prob(p) -> str:
    return str(p) if isinstance(p, Fraction) else repr(float(p))


def write_distribution(dist: PermDistribution | SubsetDistribution, path: str | Path) -> None:
    """One support element per line: ``members : probability``."""
    if isinstance(dist, PermDistribution):
        lines = [f"{' '.join(str(int(i)) for i in row)} : {_format_prob(p)}" for row, p in zip(dist.perms, dist.probs)]
    else:
        lines = [f"{' '.join(map(str, sorted(y)))} : {_format_prob(p)}" for y, p in dist.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_distribution(path: str | Path, kind: str) -> PermDistribution | SubsetDistribution:
    """Parse a distribution file; ``kind`` is ``"perm"`` or ``"subset"``."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if ":" not in line:
            raise DistributionFormatError(f"line {lineno}: expected 'members : probability'")
        members, prob = line.split(":", 1)
        try:
            rows.append((tuple(int(x) for x in members.split()), Fraction(prob.strip())))
        except ValueError as exc:
            raise DistributionFormatError(f"line {lineno}: {exc}") from None
    if not rows:
        raise DistributionFormatError("empty distribution")
    sizes = {len(r[0]) for r in rows}
    if len(sizes) != 1:
        raise DistributionFormatError("support elements have different sizes")
    total = sum(p for _, p in rows)
    if abs(float(total) - 1) > 1e-9:
        raise DistributionFormatError(f"probabilities sum to {float(total)!r}, not 1")
    try:
        if kind == "perm":
            n = sizes.pop()
            return PermDistribution(n, [r[0] for r in rows], [float(r[1]) for r in rows])
        if kind == "subset":
            return SubsetDistribution(sizes.pop(), dict(rows))
    except ValueError as exc:
        raise DistributionFormatError(str(exc)) from None
    raise ValueError(f"unknown distribution kind {kind!r}")
