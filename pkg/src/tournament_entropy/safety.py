"""Safe position pairs, the interval balance condition, and unsafe-probability bounds.

A pair ``(X, Y)`` of position sets is *safe* for an arc set ``D ⊆ L×R`` when
every bijection ``tau: L ∪ R -> X ∪ Y`` with ``tau(L) = X`` has
``fit(tau, D) < epsilon |L||R| / 4``.  Only the relative order of ``X``
against ``Y`` matters, so everything here can be phrased through the
pattern of ``Y``-ranks inside the merged order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .core import ArcSet

__all__ = [
    "SAFETY_CAP",
    "SafetyCapError",
    "SafetyParams",
    "exact_unsafe_probability",
    "interval_condition",
    "is_safe_exhaustive",
    "is_safe_pattern",
    "max_fit",
    "unsafe_prob_bound",
    "unsafe_prob_monte_carlo",
]

SAFETY_CAP = 5


class SafetyCapError(ValueError):
    pass


@dataclass(frozen=True)
class SafetyParams:
    """Parameters of the interval condition for a pair with ``|L| + |R| = l``.

    ``lambda_ = 2 delta`` and ``zeta = epsilon delta gamma (1 - gamma) / 4``
    unless overridden.  Positions are cut into ``r`` consecutive intervals of
    ``max(1, floor(lambda_ l))`` positions; the last one absorbs any
    remainder.
    """

    l: int
    gamma: float
    delta: float
    epsilon: float
    lambda_: float | None = None
    zeta: float | None = None

    def __post_init__(self) -> None:
        if self.l < 2:
            raise ValueError("l must be at least 2")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.lambda_ is None:
            object.__setattr__(self, "lambda_", 2 * self.delta)
        if self.zeta is None:
            z = self.epsilon * self.delta * self.gamma * (1 - self.gamma) / 4
            object.__setattr__(self, "zeta", z)
        if not 0 < self.lambda_ <= 1 or self.zeta < 0:
            raise ValueError("need 0 < lambda <= 1 and zeta >= 0")

    @classmethod
    def for_pair(cls, left_size: int, right_size: int, delta: float, epsilon: float) -> "SafetyParams":
        l = left_size + right_size
        return cls(l, left_size / l, delta, epsilon)

    @property
    def interval_size(self) -> int:
        return max(1, math.floor(self.lambda_ * self.l + 1e-9))

    @property
    def r(self) -> int:
        return max(1, self.l // self.interval_size)

    def intervals(self) -> list[range]:
        """Consecutive rank ranges (0-based) partitioning ``range(l)``."""
        size, r = self.interval_size, self.r
        cuts = [j * size for j in range(r)] + [self.l]
        return [range(lo, hi) for lo, hi in zip(cuts, cuts[1:])]


def interval_condition(x_positions: Iterable[int], params: SafetyParams) -> bool:
    """Whether every interval holds ``gamma |I_j| ± zeta l`` members of ``X``.

    ``x_positions`` are 1-based ranks within the merged order of ``X ∪ Y``;
    for intervals of exactly ``lambda l`` positions the window is
    ``(gamma lambda ± zeta) l``.
    """
    xs = sorted(int(p) for p in x_positions)
    expected = params.gamma * params.l
    if abs(len(xs) - expected) > 1e-9:
        raise ValueError(f"|X| = {len(xs)} but gamma*l = {expected}")
    if not all(1 <= p <= params.l for p in xs):
        raise ValueError("positions must lie in [l]")
    member = np.zeros(params.l, dtype=np.int64)
    member[np.asarray(xs, dtype=np.int64) - 1] = 1
    slack = params.zeta * params.l
    for block in params.intervals():
        count = int(member[block.start:block.stop].sum())
        centre = params.gamma * len(block)
        if not centre - slack - 1e-12 <= count <= centre + slack + 1e-12:
            return False
    return True


@lru_cache(maxsize=None)
def _perm_table(k: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(k))), dtype=np.int64).reshape(-1, k)


def max_fit(adj: np.ndarray, x_ranks: Iterable[int], y_ranks: Iterable[int]) -> int:
    """Largest ``fit(tau, D)`` over placements sending ``L`` onto ``X`` and ``R`` onto ``Y``.

    ``adj`` is the ``|L| × |R|`` 0/1 matrix of ``D``; ranks are any
    comparable labels of the target positions.
    """
    xs, ys = list(x_ranks), list(y_ranks)
    a, b = adj.shape
    if len(xs) != a or len(ys) != b:
        raise ValueError("position sets must match |L| and |R|")
    if a == 0 or b == 0 or not adj.any():
        return 0
    # sign[i, j] = +1 when X-position i precedes Y-position j
    sign = np.where(np.asarray(xs)[:, None] < np.asarray(ys)[None, :], 1, -1)
    adj = adj.astype(np.int64)
    best = None
    for alpha in _perm_table(a):
        # gain[v, y] = Σ_u adj[u, v] * sign[alpha(u), y]
        gain = adj.T @ sign[alpha]
        totals = gain[np.arange(b), _perm_table(b)].sum(axis=1)
        top = int(totals.max())
        best = top if best is None else max(best, top)
    return best


def _threshold(a: int, b: int, epsilon: float) -> Fraction:
    return Fraction(epsilon) * a * b / 4


def _adjacency(d: ArcSet, left: list[int], right: list[int]) -> np.ndarray:
    li = {v: i for i, v in enumerate(left)}
    ri = {v: j for j, v in enumerate(right)}
    adj = np.zeros((len(left), len(right)), dtype=np.int64)
    for u, v in d.arcs:
        if u not in li or v not in ri:
            raise ValueError(f"arc {(u, v)} is not in L × R")
        adj[li[u], ri[v]] = 1
    return adj


def is_safe_exhaustive(
    d: ArcSet,
    x: Iterable[int],
    y: Iterable[int],
    epsilon: float,
    left: Iterable[int] | None = None,
    right: Iterable[int] | None = None,
) -> bool:
    """Check every placement bijection; ``L``/``R`` default to the arc tails/heads of ``d``."""
    x, y = sorted(set(x)), sorted(set(y))
    if set(x) & set(y):
        raise ValueError("X and Y must be disjoint")
    left = sorted(left) if left is not None else sorted({u for u, _ in d.arcs})
    right = sorted(right) if right is not None else sorted({v for _, v in d.arcs})
    if len(x) != len(left) or len(y) != len(right):
        raise ValueError("|X| must equal |L| and |Y| must equal |R|")
    if len(left) > SAFETY_CAP or len(right) > SAFETY_CAP:
        raise SafetyCapError(f"exhaustive safety is capped at {SAFETY_CAP}+{SAFETY_CAP}")
    adj = _adjacency(d, left, right)
    if not left or not right:
        return True
    return max_fit(adj, x, y) < _threshold(len(left), len(right), epsilon)


def is_safe_pattern(adj: np.ndarray, y_pattern: Iterable[int], epsilon: float) -> bool:
    """Safety of the pair whose ``Y`` occupies ranks ``y_pattern`` of ``[|L|+|R|]``."""
    a, b = adj.shape
    ys = sorted(y_pattern)
    xs = [p for p in range(1, a + b + 1) if p not in set(ys)]
    return max_fit(adj, xs, ys) < _threshold(a, b, epsilon)


def exact_unsafe_probability(adj: np.ndarray, epsilon: float) -> Fraction:
    """Unsafe probability under a uniform placement: all ``C(l, |R|)`` patterns are equally likely."""
    a, b = adj.shape
    patterns = list(itertools.combinations(range(1, a + b + 1), b))
    unsafe = sum(1 for ys in patterns if not is_safe_pattern(adj, ys, epsilon))
    return Fraction(unsafe, len(patterns))


def unsafe_prob_bound(params: SafetyParams) -> float:
    """``2 r exp(-2 zeta² l / lambda)``; not clamped to 1."""
    return 2 * params.r * math.exp(-2 * params.zeta**2 * params.l / params.lambda_)


def _patterns(
    perms: np.ndarray, left: list[int], right: list[int]
) -> np.ndarray:
    """Bitmask over merged ranks marking where ``R`` lands, one per sampled permutation."""
    cols = np.asarray(left + right) - 1
    pos = perms[:, cols]
    order = np.argsort(pos, axis=1, kind="stable")
    is_right = order >= len(left)
    weights = 1 << np.arange(len(cols), dtype=np.int64)
    return (is_right * weights).sum(axis=1)


def unsafe_prob_monte_carlo(
    d: ArcSet,
    epsilon: float,
    n_ambient: int,
    samples: int,
    seed: int,
    left: Iterable[int] | None = None,
    right: Iterable[int] | None = None,
    batch: int = 20000,
) -> tuple[float, float]:
    """Fraction of uniform ``sigma`` in ``S_n`` with ``(sigma(L), sigma(R))`` unsafe, and its standard error."""
    left = sorted(left) if left is not None else sorted({u for u, _ in d.arcs})
    right = sorted(right) if right is not None else sorted({v for _, v in d.arcs})
    if len(left) > SAFETY_CAP or len(right) > SAFETY_CAP:
        raise SafetyCapError(f"exhaustive safety is capped at {SAFETY_CAP}+{SAFETY_CAP}")
    if samples < 1:
        raise ValueError("samples must be positive")
    if not left or not right or not d.arcs:
        return 0.0, 0.0
    if max(left + right) > n_ambient:
        raise ValueError("L ∪ R must lie inside [n_ambient]")
    adj = _adjacency(d, left, right)
    rng = np.random.default_rng(seed)
    verdicts: dict[int, bool] = {}
    unsafe = 0
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        perms = np.argsort(rng.random((k, n_ambient)), axis=1) + 1
        masks = _patterns(perms, left, right)
        values, counts = np.unique(masks, return_counts=True)
        for mask, count in zip(values.tolist(), counts.tolist()):
            if mask not in verdicts:
                ys = [i + 1 for i in range(len(left) + len(right)) if mask >> i & 1]
                verdicts[mask] = not is_safe_pattern(adj, ys, epsilon)
            if verdicts[mask]:
                unsafe += count
        done += k
    p = unsafe / samples
    return p, math.sqrt(p * (1 - p) / samples)
