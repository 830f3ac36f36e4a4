"""Recursive ternary decomposition trees and the dyadic decomposition of ``[2^k]``."""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .core import ArcSet, BipartitePair, Permutation, Tournament, extract_relative_positions
from .regularity import (
    DEFAULT_EXHAUSTIVE_CAP,
    DEFAULT_TRIALS,
    RegularityVerdict,
    RegularPairNotFound,
    ternary_partition,
)

__all__ = [
    "DecompositionTree",
    "LtreeResult",
    "Node",
    "TreeBuildError",
    "TreeLemmaInstance",
    "TreeStats",
    "build_tree",
    "check_ltree",
    "default_leaf_threshold",
    "dyadic_decomposition",
    "random_partition_tree",
    "reconstruct_from_blocks",
    "tree_stats",
]


class TreeBuildError(RuntimeError):
    pass


@dataclass
class Node:
    id: int
    parent: int | None
    role: str  # root, L, R or W
    vertices: frozenset[int]
    depth: int
    children: list[int] = field(default_factory=list)
    # internal nodes only
    left: frozenset[int] | None = None
    right: frozenset[int] | None = None
    arcs: ArcSet | None = None
    density: Fraction | None = None
    verdict: RegularityVerdict | None = None

    @property
    def is_internal(self) -> bool:
        return bool(self.children)

    @property
    def size(self) -> int:
        return len(self.vertices)


@dataclass
class DecompositionTree:
    n: int
    leaf_threshold: int
    nodes: list[Node]
    # ids of internal nodes in the order they were processed (V_1, V_2, ...)
    internal_order: list[int]

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def internal_nodes(self) -> list[Node]:
        return [self.nodes[i] for i in self.internal_order]

    def leaves(self) -> list[Node]:
        return [node for node in self.nodes if not node.is_internal]

    def check_invariants(self) -> list[str]:
        """Structural problems with the tree; empty when it is well formed."""
        problems = []
        for node in self.nodes:
            if node.is_internal:
                kids = [self.nodes[c] for c in node.children]
                if len(kids) not in (2, 3):
                    problems.append(f"node {node.id} has {len(kids)} children")
                union = frozenset().union(*(k.vertices for k in kids))
                if union != node.vertices or sum(k.size for k in kids) != node.size:
                    problems.append(f"children of node {node.id} do not partition it")
                if node.density is None or node.density < Fraction(1, 2):
                    problems.append(f"node {node.id} has S density below 1/2")
            elif node.size >= self.leaf_threshold:
                problems.append(f"leaf {node.id} has size {node.size} >= {self.leaf_threshold}")
        internal = self.internal_nodes()
        seen: set[tuple[int, int]] = set()
        for i, a in enumerate(internal):
            arcs = set(a.arcs.arcs)
            if arcs & seen:
                problems.append(f"S sets overlap at node {a.id}")
            seen |= arcs
            span_a = a.left | a.right
            for b in internal[i + 1:]:
                span_b = b.left | b.right
                if span_a & span_b and not (span_b <= a.left or span_b <= a.right):
                    problems.append(f"nesting fails for nodes {a.id}, {b.id}")
        return problems

    def to_text(self) -> str:
        """One node per line: ``id parent role vertices`` (parent ``-`` at the root)."""
        lines = []
        for node in self.nodes:
            parent = "-" if node.parent is None else str(node.parent)
            verts = ",".join(map(str, sorted(node.vertices)))
            lines.append(f"{node.id} {parent} {node.role} {verts}")
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())


def default_leaf_threshold(n: int) -> int:
    """``ceil(sqrt(n))``, floored at 2."""
    return max(2, math.isqrt(n - 1) + 1)


def build_tree(
    t: Tournament,
    delta: float,
    leaf_threshold: int | None = None,
    floor_fraction: float = 0.1,
    seed: int = 0,
    cap: int = DEFAULT_EXHAUSTIVE_CAP,
    trials: int = DEFAULT_TRIALS,
) -> DecompositionTree:
    """Partition nodes of size at least ``leaf_threshold`` until none remain.

    Nodes are processed breadth first, children in the order L, R, W; an
    empty W is dropped so that node has two children.
    """
    n = t.n
    if leaf_threshold is None:
        leaf_threshold = default_leaf_threshold(n)
    if leaf_threshold < 2:
        raise ValueError("leaf_threshold must be at least 2")
    root = Node(0, None, "root", frozenset(range(1, n + 1)), 0)
    nodes = [root]
    order: list[int] = []
    queue = deque([0])
    while queue:
        node = nodes[queue.popleft()]
        if node.size < leaf_threshold:
            continue
        try:
            part = ternary_partition(
                t, node.vertices, delta, floor_fraction, cap, trials, seed + len(order)
            )
        except RegularPairNotFound as exc:
            raise TreeBuildError(
                f"partition failed at node {node.id} (vertices {sorted(node.vertices)}): {exc}"
            ) from exc
        node.left, node.right = part.left, part.right
        node.arcs, node.density, node.verdict = part.arcs, part.density, part.verdict
        order.append(node.id)
        for role, verts in (("L", part.left), ("R", part.right), ("W", part.rest)):
            if not verts:
                continue
            child = Node(len(nodes), node.id, role, verts, node.depth + 1)
            nodes.append(child)
            node.children.append(child.id)
            queue.append(child.id)
    return DecompositionTree(n, leaf_threshold, nodes, order)


@dataclass(frozen=True)
class TreeStats:
    lambda_: int
    m: int
    leaf_sizes: tuple[int, ...]
    leaf_depths: tuple[int, ...]

    @property
    def lambda_lower_bound(self) -> float:
        """``½ n log₃ n`` for the root size ``n``."""
        n = sum(self.leaf_sizes)
        return 0.5 * n * math.log(n, 3) if n > 1 else 0.0


def tree_stats(tree: DecompositionTree) -> TreeStats:
    """Λ as the sum of internal-node sizes, cross-checked against Σ leaf size × depth."""
    internal_sum = sum(node.size for node in tree.internal_nodes())
    leaves = tree.leaves()
    weighted = sum(leaf.size * leaf.depth for leaf in leaves)
    if internal_sum != weighted:
        raise AssertionError(f"Λ disagrees: {internal_sum} (internal) vs {weighted} (leaves)")
    return TreeStats(
        internal_sum,
        len(tree.internal_order),
        tuple(leaf.size for leaf in leaves),
        tuple(leaf.depth for leaf in leaves),
    )


@dataclass(frozen=True)
class TreeLemmaInstance:
    s: int
    branching: int
    t: float
    leaves: tuple[tuple[int, int], ...]  # (size, depth)

    def __post_init__(self) -> None:
        if sum(u for u, _ in self.leaves) != self.s:
            raise ValueError("leaf sizes must sum to s")
        if any(u > self.t for u, _ in self.leaves):
            raise ValueError("a leaf exceeds the size cap t")


@dataclass(frozen=True)
class LtreeResult:
    lhs: float
    rhs: float
    holds: bool


def check_ltree(instance: TreeLemmaInstance, tolerance: float = 1e-9) -> LtreeResult:
    """Compare Σ u_i d_i with ``s log_b(s/t)``."""
    if instance.branching < 2:
        raise ValueError("branching must be at least 2")
    lhs = float(sum(u * d for u, d in instance.leaves))
    rhs = instance.s * math.log(instance.s / instance.t) / math.log(instance.branching)
    return LtreeResult(lhs, rhs, lhs >= rhs - tolerance)


def random_partition_tree(
    s: int, rng: random.Random, max_leaf: int | None = None
) -> list[tuple[int, int]]:
    """Leaves ``(size, depth)`` of a random tree splitting an ``s``-set into 2 or 3 blocks.

    A node stops splitting with probability 1/3 (always once it is a
    singleton); when ``max_leaf`` is given nodes above it always split.
    """
    leaves = []
    stack = [(s, 0)]
    while stack:
        size, depth = stack.pop()
        must = max_leaf is not None and size > max_leaf
        if size == 1 or (not must and rng.random() < 1 / 3):
            leaves.append((size, depth))
            continue
        parts = min(size, rng.choice((2, 3)))
        cuts = sorted(rng.sample(range(1, size), parts - 1))
        bounds = [0, *cuts, size]
        for lo, hi in zip(bounds, bounds[1:]):
            stack.append((hi - lo, depth + 1))
    return leaves


def dyadic_decomposition(n: int) -> list[BipartitePair]:
    """The ``n - 1`` half-interval pairs of ``[n]``, ordered by level then position."""
    if n < 2 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 2, got {n}")
    k = n.bit_length() - 1
    pairs = []
    for j in range(1, k + 1):
        width = n >> j
        for s in range(1, 2 ** (j - 1) + 1):
            lo = (2 * s - 2) * width
            pairs.append(
                BipartitePair(range(lo + 1, lo + width + 1), range(lo + width + 1, lo + 2 * width + 1))
            )
    return pairs


def extract_blocks(sigma: Permutation, pairs: Sequence[BipartitePair]) -> list[frozenset[int]]:
    return [extract_relative_positions(sigma, p) for p in pairs]


def reconstruct_from_blocks(n: int, blocks: Sequence[Iterable[int]]) -> Permutation:
    """Invert block extraction over the dyadic decomposition of ``[n]``.

    Top down: the block of an interval says which of the interval's
    positions (ranked) go to its upper half.
    """
    pairs = dyadic_decomposition(n)
    if len(blocks) != len(pairs):
        raise ValueError(f"expected {len(pairs)} blocks, got {len(blocks)}")
    by_span = {(min(p.left), 2 * len(p.left)): frozenset(int(y) for y in b) for p, b in zip(pairs, blocks)}
    images = [0] * n
    stack = [(1, n, list(range(1, n + 1)))]
    while stack:
        lo, size, positions = stack.pop()
        if size == 1:
            images[lo - 1] = positions[0]
            continue
        ys = by_span[(lo, size)]
        half = size // 2
        if len(ys) != half or not ys <= set(range(1, size + 1)):
            raise ValueError(f"block for [{lo}, {lo + size - 1}] must be a {half}-subset of [{size}]")
        right = [p for rank, p in enumerate(positions, start=1) if rank in ys]
        left = [p for rank, p in enumerate(positions, start=1) if rank not in ys]
        stack.append((lo, half, left))
        stack.append((lo + half, half, right))
    return Permutation(tuple(images))
