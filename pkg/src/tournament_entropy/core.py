"""Tournaments, arc sets, permutations and the fit/density primitives.

Vertices are 1-based integers, so a tournament on ``n`` vertices lives on
``{1, ..., n}``.  A permutation ``sigma`` is stored as its image sequence
``(sigma(1), ..., sigma(n))``; an arc ``uv`` *agrees* with ``sigma`` when
``sigma(u) < sigma(v)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "ArcSet",
    "BipartitePair",
    "GroundMismatchError",
    "Permutation",
    "Tournament",
    "TournamentFormatError",
    "density",
    "extract_relative_positions",
    "fit",
    "make_random_tournament",
    "make_transitive_tournament",
    "read_tournament",
    "reverse",
    "write_tournament",
]


class GroundMismatchError(ValueError):
    """An arc set or vertex set does not live inside a permutation's domain."""


class TournamentFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Permutation:
    """A bijection ``[n] -> [n]`` given by its images."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError(f"not a permutation of [{len(images)}]: {self.images!r}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, u: int) -> int:
        return self.images[u - 1]

    def __len__(self) -> int:
        return len(self.images)

    def __iter__(self) -> Iterator[int]:
        return iter(self.images)

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for u, pos in enumerate(self.images, start=1):
            inv[pos - 1] = u
        return Permutation(tuple(inv))

    def __str__(self) -> str:
        return " ".join(map(str, self.images))


def all_permutations(n: int) -> Iterator[Permutation]:
    """Every permutation of ``[n]`` in lexicographic order of image sequences."""
    for images in itertools.permutations(range(1, n + 1)):
        yield Permutation(images)


@dataclass(frozen=True)
class ArcSet:
    """A loopless digraph: explicit ordered pairs over a ground vertex set."""

    ground: frozenset[int]
    arcs: frozenset[tuple[int, int]]

    def __init__(self, ground: Iterable[int], arcs: Iterable[tuple[int, int]] = ()) -> None:
        ground = frozenset(int(v) for v in ground)
        arcs = frozenset((int(u), int(v)) for u, v in arcs)
        for u, v in arcs:
            if u == v:
                raise ValueError(f"loop at vertex {u}")
            if u not in ground or v not in ground:
                raise ValueError(f"arc {(u, v)} leaves the ground set")
        object.__setattr__(self, "ground", ground)
        object.__setattr__(self, "arcs", arcs)

    def __len__(self) -> int:
        return len(self.arcs)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.arcs))

    def __contains__(self, arc: object) -> bool:
        return arc in self.arcs

    def __repr__(self) -> str:
        return f"ArcSet(ground={sorted(self.ground)}, arcs={sorted(self.arcs)})"

    def restrict(self, left: Iterable[int], right: Iterable[int]) -> "ArcSet":
        """Arcs running from ``left`` into ``right``."""
        left, right = frozenset(left), frozenset(right)
        return ArcSet(
            self.ground, ((u, v) for u, v in self.arcs if u in left and v in right)
        )


@dataclass(frozen=True)
class BipartitePair:
    left: frozenset[int]
    right: frozenset[int]

    def __init__(self, left: Iterable[int], right: Iterable[int]) -> None:
        left = frozenset(int(v) for v in left)
        right = frozenset(int(v) for v in right)
        if left & right:
            raise ValueError(f"parts overlap on {sorted(left & right)}")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def swapped(self) -> "BipartitePair":
        return BipartitePair(self.right, self.left)

    def __repr__(self) -> str:
        return f"BipartitePair({sorted(self.left)}, {sorted(self.right)})"


@dataclass(frozen=True, eq=False)
class Tournament:
    """A complete orientation of the pairs of ``[n]``.

    ``adjacency[u-1, v-1]`` is true iff ``uv`` is an arc.  The matrix is kept
    read-only so the tournament can be shared freely.
    """

    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        adj = np.array(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if adj.diagonal().any():
            raise ValueError("tournaments have no loops")
        off = ~np.eye(adj.shape[0], dtype=bool)
        if not np.array_equal((adj ^ adj.T)[off], np.ones(off.sum(), dtype=bool)):
            raise ValueError("exactly one of uv, vu must be present for every pair")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[tuple[int, int]]) -> "Tournament":
        adj = np.zeros((n, n), dtype=bool)
        for u, v in arcs:
            adj[u - 1, v - 1] = True
        return cls(adj)

    @classmethod
    def from_permutation(cls, sigma: Permutation) -> "Tournament":
        """The transitive tournament ``T_sigma``: ``uv`` iff ``sigma(u) < sigma(v)``."""
        pos = np.asarray(sigma.images)
        return cls(pos[:, None] < pos[None, :])

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def has_arc(self, u: int, v: int) -> bool:
        return bool(self.adjacency[u - 1, v - 1])

    def arc_list(self) -> list[tuple[int, int]]:
        us, vs = np.nonzero(self.adjacency)
        return [(int(u) + 1, int(v) + 1) for u, v in zip(us, vs)]

    def arcs(self) -> ArcSet:
        return ArcSet(range(1, self.n + 1), self.arc_list())

    def arcs_between(self, left: Iterable[int], right: Iterable[int]) -> ArcSet:
        """``T ∩ (left × right)`` as an arc set over ``[n]``."""
        left, right = sorted(left), sorted(right)
        arcs = []
        if left and right:
            sub = self.adjacency[np.ix_(np.asarray(left) - 1, np.asarray(right) - 1)]
            arcs = [(left[i], right[j]) for i, j in zip(*np.nonzero(sub))]
        return ArcSet(range(1, self.n + 1), arcs)

    def submatrix(self, left: Iterable[int], right: Iterable[int]) -> np.ndarray:
        """Boolean ``|left| × |right|`` matrix of arcs from ``left`` to ``right`` (sorted order)."""
        left, right = np.asarray(sorted(left)), np.asarray(sorted(right))
        return self.adjacency[np.ix_(left - 1, right - 1)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tournament):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self) -> int:
        return hash((self.n, np.packbits(self.adjacency).tobytes()))

    def __repr__(self) -> str:
        return f"Tournament(n={self.n})"


def make_transitive_tournament(n: int) -> Tournament:
    if n < 1:
        raise ValueError("n must be positive")
    return Tournament.from_permutation(Permutation.identity(n))


def make_random_tournament(n: int, seed: int) -> Tournament:
    """Orient every pair ``u < v`` by an independent fair coin."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, k=1)
    coins = rng.integers(0, 2, size=len(iu[0])).astype(bool)
    adj = np.zeros((n, n), dtype=bool)
    adj[iu] = coins
    adj[iu[1], iu[0]] = ~coins
    return Tournament(adj)


def _check_ground(sigma: Permutation, vertices: Iterable[int]) -> None:
    bad = [v for v in vertices if not 1 <= v <= sigma.n]
    if bad:
        raise GroundMismatchError(
            f"vertices {sorted(bad)} outside the domain [{sigma.n}] of the permutation"
        )


def fit(sigma: Permutation, d: ArcSet) -> int:
    """Agreeing minus disagreeing arcs of ``d`` under the order ``sigma``."""
    _check_ground(sigma, d.ground)
    total = 0
    for u, v in d.arcs:
        total += 1 if sigma(u) < sigma(v) else -1
    return total


def density(d: ArcSet, pair: BipartitePair) -> float:
    """``|d ∩ (X×Y)| / (|X||Y|)``, using whichever direction carries arcs."""
    x, y = pair.left, pair.right
    if not x or not y:
        raise ValueError("density needs nonempty parts")
    forward = sum(1 for u, v in d.arcs if u in x and v in y)
    backward = sum(1 for u, v in d.arcs if u in y and v in x)
    if forward and backward:
        raise ValueError("arcs run in both directions between the parts")
    return (forward or backward) / (len(x) * len(y))


def reverse(d: ArcSet) -> ArcSet:
    return ArcSet(d.ground, ((v, u) for u, v in d.arcs))


def extract_relative_positions(sigma: Permutation, pair: BipartitePair) -> frozenset[int]:
    """1-based ranks within ``sigma(L ∪ R)`` that are occupied by ``sigma(R)``."""
    _check_ground(sigma, pair.left | pair.right)
    placed = sorted((sigma(v), v in pair.right) for v in pair.left | pair.right)
    return frozenset(s for s, (_, in_right) in enumerate(placed, start=1) if in_right)


def write_tournament(t: Tournament, path: str | Path) -> None:
    lines = [str(t.n)] + [f"{u} {v}" for u, v in t.arc_list()]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_tournament(text: str) -> Tournament:
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 1:
        raise TournamentFormatError("first line must hold the vertex count n")
    try:
        n = int(rows[0][0])
        arcs = [(int(u), int(v)) for u, v in rows[1:]]
    except ValueError as exc:
        raise TournamentFormatError(f"malformed line: {exc}") from None
    if n < 1:
        raise TournamentFormatError("n must be positive")
    seen: set[frozenset[int]] = set()
    for u, v in arcs:
        if not (1 <= u <= n and 1 <= v <= n) or u == v:
            raise TournamentFormatError(f"bad arc {u} {v}")
        key = frozenset((u, v))
        if key in seen:
            raise TournamentFormatError(f"duplicate pair {{{u}, {v}}}")
        seen.add(key)
    if len(seen) != n * (n - 1) // 2:
        raise TournamentFormatError(
            f"expected {n * (n - 1) // 2} arcs, found {len(seen)} (missing pairs)"
        )
    return Tournament.from_arcs(n, arcs)


def read_tournament(path: str | Path) -> Tournament:
    return parse_tournament(Path(path).read_text())
