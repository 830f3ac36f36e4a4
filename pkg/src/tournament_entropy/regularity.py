"""delta-regularity of bipartite pairs, and constructive regular-pair search.

A bipartite graph ``H`` on ``X ∪ Y`` is delta-regular when every
``X' ⊆ X``, ``Y' ⊆ Y`` with ``|X'| > delta|X|`` and ``|Y'| > delta|Y|`` has
``|d(X',Y') - d(X,Y)| < delta``.  Densities are rationals, so every
comparison against ``delta`` here is made exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal

import numpy as np

from .core import ArcSet, BipartitePair, Tournament

__all__ = [
    "DEFAULT_EXHAUSTIVE_CAP",
    "BigraphView",
    "ExhaustiveCapError",
    "RegularPairNotFound",
    "RegularityVerdict",
    "TernaryPartition",
    "Witness",
    "check_regular",
    "find_regular_pair",
    "is_regular_exact",
    "refute_regular_sampled",
    "ternary_partition",
    "violates",
]

DEFAULT_EXHAUSTIVE_CAP = 20
DEFAULT_TRIALS = 100


class ExhaustiveCapError(ValueError):
    """Too many vertices for the exhaustive check; use :func:`refute_regular_sampled`."""


class RegularPairNotFound(RuntimeError):
    def __init__(self, message: str, best_pair: BipartitePair | None, best_deviation: float):
        super().__init__(message)
        self.best_pair = best_pair
        self.best_deviation = best_deviation


@dataclass(frozen=True)
class BigraphView:
    """Bipartite graph on ``pair.left ∪ pair.right`` with edges ``(x, y)``, x on the left."""

    pair: BipartitePair
    edges: frozenset[tuple[int, int]]

    def __init__(self, pair: BipartitePair, edges: Iterable[tuple[int, int]]) -> None:
        edges = frozenset((int(x), int(y)) for x, y in edges)
        for x, y in edges:
            if x not in pair.left or y not in pair.right:
                raise ValueError(f"edge {(x, y)} not in left × right")
        object.__setattr__(self, "pair", pair)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_matrix(cls, left: Iterable[int], right: Iterable[int], matrix) -> "BigraphView":
        left, right = sorted(left), sorted(right)
        m = np.asarray(matrix, dtype=bool)
        edges = [(left[i], right[j]) for i, j in zip(*np.nonzero(m))]
        return cls(BipartitePair(left, right), edges)

    @classmethod
    def from_arcs(cls, d: ArcSet, pair: BipartitePair) -> "BigraphView":
        """Undirected view of ``d ∩ (X×Y)``."""
        return cls(pair, ((u, v) for u, v in d.arcs if u in pair.left and v in pair.right))

    @classmethod
    def from_tournament(cls, t: Tournament, pair: BipartitePair) -> "BigraphView":
        return cls.from_matrix(pair.left, pair.right, t.submatrix(pair.left, pair.right))

    @property
    def left(self) -> list[int]:
        return sorted(self.pair.left)

    @property
    def right(self) -> list[int]:
        return sorted(self.pair.right)

    def matrix(self) -> np.ndarray:
        left, right = self.left, self.right
        li = {v: i for i, v in enumerate(left)}
        ri = {v: j for j, v in enumerate(right)}
        m = np.zeros((len(left), len(right)), dtype=bool)
        for x, y in self.edges:
            m[li[x], ri[y]] = True
        return m

    def complement(self) -> "BigraphView":
        return BigraphView.from_matrix(self.left, self.right, ~self.matrix())

    def restrict(self, pair: BipartitePair) -> "BigraphView":
        return BigraphView(
            pair, ((x, y) for x, y in self.edges if x in pair.left and y in pair.right)
        )

    def density(self) -> Fraction:
        return Fraction(len(self.edges), len(self.pair.left) * len(self.pair.right))


@dataclass(frozen=True)
class Witness:
    left: frozenset[int]
    right: frozenset[int]
    deviation: float

    @property
    def pair(self) -> BipartitePair:
        return BipartitePair(self.left, self.right)


@dataclass(frozen=True)
class RegularityVerdict:
    delta: float
    regular: bool
    witness: Witness | None
    mode: Literal["exact", "sampled"]

    def __post_init__(self) -> None:
        if not self.regular and self.witness is None:
            raise ValueError("an irregular verdict needs a witness")


def _size_floor(delta: float, size: int) -> int:
    """Smallest integer strictly greater than ``delta * size``."""
    return math.floor(Fraction(delta) * size) + 1


def _at_least(num: int, den: int, delta: float) -> bool:
    """Exact ``num/den >= delta``."""
    return Fraction(num, den) >= Fraction(delta)


def violates(view: BigraphView, left: Iterable[int], right: Iterable[int], delta: float) -> bool:
    """Whether ``(left, right)`` is a genuine witness against delta-regularity of ``view``.

    Recomputes everything from the edge set; used to certify witnesses.
    """
    left, right = frozenset(left), frozenset(right)
    x, y = view.pair.left, view.pair.right
    if not left <= x or not right <= y:
        return False
    if len(left) < _size_floor(delta, len(x)) or len(right) < _size_floor(delta, len(y)):
        return False
    inside = sum(1 for a, b in view.edges if a in left and b in right)
    dev = abs(Fraction(inside, len(left) * len(right)) - Fraction(len(view.edges), len(x) * len(y)))
    return dev >= Fraction(delta)


def _subset_matrix(size: int) -> np.ndarray:
    masks = np.arange(1 << size, dtype=np.int64)
    return ((masks[:, None] >> np.arange(size)) & 1).astype(np.int64)


def _scan(m: np.ndarray, delta: float) -> tuple[int, int, tuple[int, ...], tuple[int, ...]] | None:
    """Maximum deviation over qualifying subset pairs of the 0/1 matrix ``m``.

    Returns ``(num, den, rows, cols)`` describing the most deviating pair
    (deviation ``num/den``), or None when no qualifying pair comes within
    float rounding of ``delta``.  Rows are
    enumerated exhaustively; for a fixed row set and column count the extreme
    densities come from the columns with the most / fewest edges.
    """
    a, b = m.shape
    total = int(m.sum())
    cells = a * b
    kx, ky = _size_floor(delta, a), _size_floor(delta, b)
    if kx > a or ky > b:
        return None
    subsets = _subset_matrix(a)
    sizes = subsets.sum(axis=1)
    keep = sizes >= kx
    subsets, sizes = subsets[keep], sizes[keep]
    counts = subsets @ m.astype(np.int64)
    # stable ordering: most edges first, then smaller column index
    order = np.argsort(-counts, axis=1, kind="stable")
    desc = np.take_along_axis(counts, order, axis=1)
    top = np.cumsum(desc, axis=1)
    row_tot = counts.sum(axis=1)
    ks = np.arange(1, b + 1)
    # bottom-k sums: total minus the top (b-k)
    top_pad = np.concatenate([np.zeros((len(top), 1), dtype=np.int64), top], axis=1)
    bottom = row_tot[:, None] - top_pad[:, b - ks]
    sx = sizes[:, None]
    num_hi = top * cells - total * sx * ks[None, :]
    num_lo = total * sx * ks[None, :] - bottom * cells
    den = sx * ks[None, :] * cells
    valid = np.broadcast_to(ks[None, :] >= ky, den.shape)
    dev_hi = np.where(valid, num_hi / den, -np.inf)
    dev_lo = np.where(valid, num_lo / den, -np.inf)
    best = max(dev_hi.max(), dev_lo.max())
    if best < delta - 1e-9:
        return None

    candidates = []
    for which, dev, num in (("hi", dev_hi, num_hi), ("lo", dev_lo, num_lo)):
        for r, c in zip(*np.nonzero(dev >= best - 1e-12)):
            candidates.append((Fraction(int(num[r, c]), int(den[r, c])), which, int(r), int(c)))
    top_dev = max(c[0] for c in candidates)
    picks = []
    for dev, which, r, c in candidates:
        if dev != top_dev:
            continue
        k = c + 1
        rows = tuple(int(i) for i in np.nonzero(subsets[r])[0])
        if which == "hi":
            cols = order[r, :k]
        else:
            # fewest edges first, smaller column index first among ties
            cols = np.argsort(counts[r], kind="stable")[:k]
        cols = tuple(sorted(int(j) for j in cols))
        picks.append((-(len(rows) * k), rows, cols, dev))
    picks.sort()
    _, rows, cols, dev = picks[0]
    return dev.numerator, dev.denominator, rows, cols


def is_regular_exact(
    view: BigraphView, delta: float, cap: int = DEFAULT_EXHAUSTIVE_CAP
) -> RegularityVerdict:
    """Decide delta-regularity by scanning every qualifying subset pair.

    When irregular, the witness is a pair of maximum deviation; ties prefer
    the larger pair, then the lexicographically smallest subsets.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    left, right = view.left, view.right
    if len(left) + len(right) > cap:
        raise ExhaustiveCapError(
            f"{len(left) + len(right)} vertices exceed the exhaustive cap {cap}; "
            "use refute_regular_sampled"
        )
    if not left or not right:
        raise ValueError("both parts must be nonempty")
    m = view.matrix()
    transposed = len(left) > len(right)
    if transposed:
        m = m.T
    found = _scan(m, delta)
    if found is None:
        return RegularityVerdict(delta, True, None, "exact")
    num, den, rows, cols = found
    if not _at_least(num, den, delta):
        return RegularityVerdict(delta, True, None, "exact")
    if transposed:
        rows, cols = cols, rows
    witness = Witness(
        frozenset(left[i] for i in rows), frozenset(right[j] for j in cols), num / den
    )
    return RegularityVerdict(delta, False, witness, "exact")


def _pick(values: np.ndarray, k: int, high: bool) -> np.ndarray:
    key = -values if high else values
    return np.sort(np.argsort(key, kind="stable")[:k])


def refute_regular_sampled(
    view: BigraphView, delta: float, trials: int = DEFAULT_TRIALS, seed: int = 0
) -> RegularityVerdict:
    """Search for a regularity witness by randomized local search.

    Each trial draws random qualifying subsets and then alternately replaces
    one side by the vertices with the most (or fewest) edges into the other
    side.  Only witnesses that re-check exactly are reported, so
    ``regular=True`` means no witness was found.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    left, right = view.left, view.right
    m = view.matrix().astype(np.int64)
    a, b = m.shape
    total, cells = int(m.sum()), a * b
    kx_min, ky_min = _size_floor(delta, a), _size_floor(delta, b)
    if kx_min > a or ky_min > b:
        return RegularityVerdict(delta, True, None, "sampled")
    rng = np.random.default_rng(seed)
    best_dev, best = -1.0, None

    def consider(inside: int, rows: np.ndarray, cols: np.ndarray) -> None:
        nonlocal best_dev, best
        num = abs(inside * cells - total * len(rows) * len(cols))
        den = len(rows) * len(cols) * cells
        dev = num / den
        if dev > best_dev and dev > delta - 1e-9 and _at_least(num, den, delta):
            best_dev, best = dev, (rows, cols)

    for _ in range(trials):
        kx = int(rng.integers(kx_min, a + 1))
        ky = int(rng.integers(ky_min, b + 1))
        rows = np.sort(rng.choice(a, size=kx, replace=False))
        cols = np.sort(rng.choice(b, size=ky, replace=False))
        colsum = m[rows].sum(axis=0)
        consider(int(colsum[cols].sum()), rows, cols)
        for high in (True, False):
            r, cs = rows, colsum
            for _ in range(2):
                c = _pick(cs, ky, high)
                rs = m[:, c].sum(axis=1)
                consider(int(cs[c].sum()), r, c)
                r = _pick(rs, kx, high)
                cs = m[r].sum(axis=0)
                consider(int(rs[r].sum()), r, c)

    if best is None:
        return RegularityVerdict(delta, True, None, "sampled")
    rows, cols = best
    witness = Witness(
        frozenset(left[i] for i in rows), frozenset(right[j] for j in cols), best_dev
    )
    assert violates(view, witness.left, witness.right, delta)
    return RegularityVerdict(delta, False, witness, "sampled")


def check_regular(
    view: BigraphView,
    delta: float,
    cap: int = DEFAULT_EXHAUSTIVE_CAP,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
) -> RegularityVerdict:
    """Exact check below the cap, sampled refutation above it."""
    if len(view.pair.left) + len(view.pair.right) <= cap:
        return is_regular_exact(view, delta, cap)
    return refute_regular_sampled(view, delta, trials, seed)


def _regular_matrix(m: np.ndarray, delta: float) -> bool:
    a, b = m.shape
    if _size_floor(delta, a) == 1 and _size_floor(delta, b) == 1:
        # single cells qualify: quick rejection on one-cell deviations
        ones = int(m.sum())
        dev_one = Fraction(a * b - ones, a * b) if ones else Fraction(0)
        dev_zero = Fraction(ones, a * b) if ones < a * b else Fraction(0)
        if max(dev_one, dev_zero) >= Fraction(delta):
            return False
    if a > b:
        m = m.T
    found = _scan(m, delta)
    return found is None or not _at_least(found[0], found[1], delta)


def _fallback_search(
    view: BigraphView, delta: float, floor: int, cap: int
) -> BipartitePair | None:
    """Exhaustive scan of ``floor × floor`` sub-pairs, then greedy growth of the first hit."""
    left, right = view.left, view.right
    if len(left) + len(right) > cap:
        left, right = left[: cap // 2], right[: cap - cap // 2]
    if len(left) < floor or len(right) < floor:
        return None
    full = view.matrix()
    li = {v: i for i, v in enumerate(view.left)}
    ri = {v: j for j, v in enumerate(view.right)}

    def ok(xs, ys) -> bool:
        sub = full[np.ix_([li[x] for x in xs], [ri[y] for y in ys])]
        return _regular_matrix(sub, delta)

    for xs in itertools.combinations(left, floor):
        for ys in itertools.combinations(right, floor):
            if not ok(xs, ys):
                continue
            xs, ys = list(xs), list(ys)
            grown = True
            while grown:
                grown = False
                for side, pool in ((xs, left), (ys, right)):
                    for v in pool:
                        if v in side:
                            continue
                        side.append(v)
                        if ok(xs, ys):
                            grown = True
                            break
                        side.pop()
            return BipartitePair(xs, ys)
    return None


def find_regular_pair(
    view: BigraphView,
    delta: float,
    floor: int,
    cap: int = DEFAULT_EXHAUSTIVE_CAP,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
) -> BipartitePair:
    """Find ``X' ⊆ X``, ``Y' ⊆ Y`` with both sides at least ``floor`` that pass the check in force.

    Witness descent: while the current pair is refuted, move into the
    witness.  Descent stops after ``ceil(1/delta^2)`` steps or when the
    witness drops below ``floor``; the exhaustive floor-size search then takes
    over.
    """
    if floor < 1:
        raise ValueError("floor must be at least 1")
    if len(view.pair.left) < floor or len(view.pair.right) < floor:
        raise RegularPairNotFound("parts smaller than the floor", None, float("nan"))
    current = view
    best_pair, best_dev = view.pair, math.inf
    for step in range(math.ceil(1 / delta**2)):
        verdict = check_regular(current, delta, cap, trials, seed + step)
        if verdict.regular:
            return current.pair
        w = verdict.witness
        if w.deviation < best_dev:
            best_pair, best_dev = current.pair, w.deviation
        if len(w.left) < floor or len(w.right) < floor:
            break
        current = current.restrict(w.pair)
    found = _fallback_search(current, delta, floor, cap)
    if found is None and current is not view:
        found = _fallback_search(view, delta, floor, cap)
    if found is not None:
        return found
    raise RegularPairNotFound(
        f"no {delta}-regular pair with both sides >= {floor}", best_pair, best_dev
    )


@dataclass(frozen=True)
class TernaryPartition:
    left: frozenset[int]
    right: frozenset[int]
    rest: frozenset[int]
    arcs: ArcSet
    density: Fraction
    verdict: RegularityVerdict

    @property
    def min_fraction(self) -> float:
        return min(len(self.left), len(self.right)) / (len(self.left) + len(self.right) + len(self.rest))


def ternary_partition(
    t: Tournament,
    v: Iterable[int],
    delta: float,
    floor_fraction: float = 0.1,
    cap: int = DEFAULT_EXHAUSTIVE_CAP,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
) -> TernaryPartition:
    """Split ``v`` into ``L ∪ R ∪ W`` with ``T ∩ (L×R)`` regular and of density at least 1/2.

    Starts from the equipartition of ``v`` into its lower and upper halves.
    Both parts are kept at least ``max(1, ceil(floor_fraction·|v|))``.
    """
    verts = sorted(v)
    if len(verts) < 2:
        raise ValueError("need at least two vertices to partition")
    floor = max(1, math.ceil(floor_fraction * len(verts) - 1e-12))
    half = len(verts) // 2
    x, y = verts[:half], verts[half:]
    view = BigraphView.from_tournament(t, BipartitePair(x, y))
    pair = find_regular_pair(view, delta, floor, cap, trials, seed)
    sub = view.restrict(pair)
    left, right = pair.left, pair.right
    if sub.density() < Fraction(1, 2):
        # the reverse direction is the bipartite complement, regular as well
        left, right = right, left
        sub = BigraphView.from_tournament(t, BipartitePair(left, right))
    verdict = check_regular(sub, delta, cap, trials, seed)
    arcs = t.arcs_between(left, right)
    return TernaryPartition(
        frozenset(left),
        frozenset(right),
        frozenset(verts) - left - right,
        arcs,
        sub.density(),
        verdict,
    )
