"""Entropy bounds for random permutations that tend to agree with a tournament.

Exact small-scale machinery: tournaments and fit, regular pairs,
decomposition trees, crossing-count entropy checks, safe position pairs,
maximum-entropy solvers, and proof-chain replays over all of ``S_n``.
"""

from .core import (
    ArcSet,
    BipartitePair,
    Permutation,
    Tournament,
    density,
    extract_relative_positions,
    fit,
    make_random_tournament,
    make_transitive_tournament,
    read_tournament,
    reverse,
    write_tournament,
)
from .decomposition import DecompositionTree, build_tree, dyadic_decomposition, tree_stats
from .entropy import PermDistribution, SubsetDistribution, binary_entropy, entropy, mpc_check
from .harness import RunConfig, RunReport, export_report, replay_proof_chain, transitive_pipeline
from .maxent import ArcConstraintSystem, PaperConstants, max_agreement, solve_maxent, verify_bounds
from .regularity import BigraphView, find_regular_pair, is_regular_exact, refute_regular_sampled, ternary_partition
from .safety import SafetyParams, is_safe_exhaustive, unsafe_prob_bound, unsafe_prob_monte_carlo

__version__ = "0.1.0"

__all__ = [
    "ArcConstraintSystem",
    "ArcSet",
    "BigraphView",
    "BipartitePair",
    "DecompositionTree",
    "PaperConstants",
    "PermDistribution",
    "Permutation",
    "RunConfig",
    "RunReport",
    "SafetyParams",
    "SubsetDistribution",
    "Tournament",
    "binary_entropy",
    "build_tree",
    "density",
    "dyadic_decomposition",
    "entropy",
    "export_report",
    "extract_relative_positions",
    "find_regular_pair",
    "fit",
    "is_regular_exact",
    "is_safe_exhaustive",
    "make_random_tournament",
    "make_transitive_tournament",
    "max_agreement",
    "mpc_check",
    "read_tournament",
    "refute_regular_sampled",
    "replay_proof_chain",
    "reverse",
    "solve_maxent",
    "ternary_partition",
    "transitive_pipeline",
    "tree_stats",
    "unsafe_prob_bound",
    "unsafe_prob_monte_carlo",
    "verify_bounds",
    "write_tournament",
]
