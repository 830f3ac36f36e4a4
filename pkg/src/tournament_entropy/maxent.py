"""Maximum-entropy permutation distributions under arc-probability constraints.

For a tournament ``T`` and ``c = 1/2 + epsilon + margin`` we look for the
distribution on ``S_n`` of largest entropy with ``Pr(sigma(u) < sigma(v)) >= c``
for every arc ``uv``.  The optimum is a Gibbs distribution
``P(sigma) ∝ exp(Σ_uv w_uv [sigma(u) < sigma(v)])`` with ``w >= 0``; the
weights are found by exact coordinate minimisation of the convex dual
(one constraint at a time, iterative-scaling style).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Permutation, Tournament
from .entropy import PermDistribution

__all__ = [
    "ArcConstraintSystem",
    "BoundLine",
    "BoundsReport",
    "CountingCertificate",
    "MaxentSolution",
    "PaperConstants",
    "agreement_counts",
    "counting_certificate",
    "is_transitive",
    "max_agreement",
    "solve_maxent",
    "verify_bounds",
]

MAX_AGREEMENT_CAP = 10
MAXENT_CAP = 8


def _perm_array(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int64).reshape(-1, n)


def agreement_counts(t: Tournament, perms: np.ndarray) -> np.ndarray:
    """``|T ∩ T_sigma|`` for every row of ``perms``."""
    arcs = np.asarray(t.arc_list(), dtype=np.int64).reshape(-1, 2) - 1
    if not len(arcs):
        return np.zeros(len(perms), dtype=np.int64)
    return (perms[:, arcs[:, 0]] < perms[:, arcs[:, 1]]).sum(axis=1)


def max_agreement(t: Tournament) -> tuple[Permutation, float]:
    """Best ranking by brute force; ties go to the lexicographically first image sequence."""
    n = t.n
    if n > MAX_AGREEMENT_CAP:
        raise ValueError(f"brute force is capped at n = {MAX_AGREEMENT_CAP}")
    if n == 1:
        return Permutation((1,)), 1.0
    best_count, best_perm = -1, None
    it = itertools.permutations(range(1, n + 1))
    while True:
        chunk = np.array(list(itertools.islice(it, 200_000)), dtype=np.int64)
        if not len(chunk):
            break
        counts = agreement_counts(t, chunk)
        i = int(np.argmax(counts))
        if counts[i] > best_count:
            best_count, best_perm = int(counts[i]), tuple(int(x) for x in chunk[i])
    return Permutation(best_perm), best_count / (n * (n - 1) // 2)


@dataclass(frozen=True)
class ArcConstraintSystem:
    tournament: Tournament
    epsilon: float
    margin: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.epsilon < 0.5:
            raise ValueError("epsilon must lie in (0, 1/2)")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")

    @property
    def target(self) -> float:
        return 0.5 + self.epsilon + self.margin


@dataclass(frozen=True)
class CountingCertificate:
    """No distribution works: on ``vertices`` at most ``max_agree`` arcs agree with any order,
    yet the constraints ask for an expected ``required`` agreements."""

    vertices: tuple[int, ...]
    arcs: int
    max_agree: int
    required: float

    def describe(self) -> str:
        return (
            f"on vertices {list(self.vertices)} every ranking agrees with at most "
            f"{self.max_agree} of {self.arcs} arcs, but the constraints need "
            f"{self.required:.6g} in expectation"
        )


def counting_certificate(t: Tournament, target: float) -> CountingCertificate | None:
    """Search vertex subsets for a counting bound that rules out ``Pr(A_uv) >= target``.

    ``Σ_{uv ∈ T[S]} Pr(A_uv) <= max_sigma |T[S] ∩ T_sigma|``; a directed
    triangle is the case ``|S| = 3`` (at most 2 of its 3 arcs agree).
    Subsets are scanned by increasing size, so the smallest obstruction is
    reported.
    """
    n = t.n
    for size in range(3, n + 1):
        perms = _perm_array(size)
        for subset in itertools.combinations(range(1, n + 1), size):
            idx = np.asarray(subset) - 1
            sub = Tournament(t.adjacency[np.ix_(idx, idx)])
            arcs = size * (size - 1) // 2
            best = int(agreement_counts(sub, perms).max())
            if arcs * target > best + 1e-12:
                return CountingCertificate(subset, arcs, best, arcs * target)
    return None


@dataclass
class MaxentSolution:
    distribution: PermDistribution
    weights: dict[tuple[int, int], float]
    entropy_bits: float
    feasible: bool
    status: str  # optimal, infeasible, presumed_infeasible, not_converged
    residuals: dict[tuple[int, int], float]
    iterations: int
    target: float
    epsilon: float
    certificate: CountingCertificate | None = None
    dual_value: float = float("nan")
    tournament: Tournament | None = field(default=None, repr=False)
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def max_violation(self) -> float:
        return max((max(0.0, -r) for r in self.residuals.values()), default=0.0)


def _gibbs(features: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, float]:
    logits = features @ weights
    top = logits.max()
    p = np.exp(logits - top)
    z = p.sum()
    return p / z, float(top + math.log(z))


def solve_maxent(
    system: ArcConstraintSystem,
    tolerance: float = 1e-8,
    max_iterations: int = 20000,
    divergence_weight: float = 60.0,
) -> MaxentSolution:
    """Maximise entropy subject to ``Pr(A_uv) >= 1/2 + epsilon + margin`` for every arc.

    Each sweep visits the arcs in order and moves that arc's weight to the
    exact minimiser of the dual along its coordinate, clipped at zero.  The
    run stops once no constraint is violated by more than ``tolerance``,
    complementary slackness holds to ``tolerance`` and a sweep changes the
    dual by less than 1e-10.  Infeasibility is certified by a counting bound
    when one exists; weights growing past ``divergence_weight`` without
    convergence are reported as presumed infeasible.
    """
    t = system.tournament
    n = t.n
    if n > MAXENT_CAP:
        raise ValueError(f"explicit distributions are capped at n = {MAXENT_CAP}")
    c = system.target
    perms = _perm_array(n)
    arcs = t.arc_list()
    uniform = PermDistribution(n, perms, np.full(len(perms), 1 / len(perms)), check=False)

    def result(dist, w, status, iterations, residuals, cert=None, dual=float("nan"), hist=()):
        from .entropy import entropy

        return MaxentSolution(
            distribution=dist,
            weights={a: float(x) for a, x in zip(arcs, w)},
            entropy_bits=entropy(dist),
            feasible=status == "optimal",
            status=status,
            residuals=residuals,
            iterations=iterations,
            target=c,
            epsilon=system.epsilon,
            certificate=cert,
            dual_value=dual,
            tournament=t,
            history=list(hist),
        )

    if not arcs:
        return result(uniform, [], "optimal", 0, {})
    if c >= 1:
        cert = CountingCertificate(tuple(range(1, n + 1)), len(arcs), len(arcs), len(arcs) * c)
        return result(uniform, np.zeros(len(arcs)), "infeasible", 0, {}, cert)
    cert = counting_certificate(t, c)
    if cert is not None:
        residuals = {a: uniform.prob_arc(*a) - c for a in arcs}
        return result(uniform, np.zeros(len(arcs)), "infeasible", 0, residuals, cert)

    pairs = np.asarray(arcs, dtype=np.int64) - 1
    features = (perms[:, pairs[:, 0]] < perms[:, pairs[:, 1]]).astype(float)
    w = np.zeros(len(arcs))
    p, log_z = _gibbs(features, w)
    dual = log_z - c * w.sum()
    history = [dual]
    status = "not_converged"
    sweeps = 0
    for sweeps in range(1, max_iterations + 1):
        for a in range(len(arcs)):
            col = features[:, a]
            pa = float(p @ col)
            if pa <= 0 or pa >= 1:
                continue
            step = math.log(c * (1 - pa) / (pa * (1 - c)))
            new = max(0.0, w[a] + step)
            if new == w[a]:
                continue
            change = new - w[a]
            w[a] = new
            # reweight in place: P ∝ P * exp(change * [arc agrees])
            p = p * np.exp(change * col)
            p /= p.sum()
        p, log_z = _gibbs(features, w)
        new_dual = log_z - c * w.sum()
        marg = p @ features
        violation = float(np.max(c - marg))
        slack = float(np.max(w * np.abs(marg - c)))
        change = abs(history[-1] - new_dual)
        history.append(new_dual)
        if violation < tolerance and slack < tolerance and change < 1e-10:
            status = "optimal"
            break
        if w.max() > divergence_weight:
            status = "presumed_infeasible"
            break
    dual = history[-1]
    dist = PermDistribution(n, perms, p, check=False)
    marg = p @ features
    residuals = {a: float(m - c) for a, m in zip(arcs, marg)}
    return result(dist, w, status, sweeps, residuals, None, dual, history)


@dataclass(frozen=True)
class PaperConstants:
    """The constants of the general argument, as functions of epsilon and the floor fraction beta."""

    epsilon: float
    beta: float

    @property
    def delta(self) -> float:
        return 0.03 * self.epsilon

    @property
    def b(self) -> float:
        return self.epsilon**2 * self.delta * self.beta**3 / 33

    @property
    def c(self) -> float:
        return self.epsilon**3 * self.delta * self.beta**3 / 150

    @property
    def theta(self) -> float:
        return self.epsilon**4 * self.delta * self.beta**3 / 300

    def as_dict(self) -> dict[str, float]:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "beta": self.beta,
            "b": self.b,
            "c": self.c,
            "theta": self.theta,
        }


@dataclass(frozen=True)
class BoundLine:
    name: str
    value: float
    holds: bool
    vacuous: bool

    @property
    def tag(self) -> str:
        return "VACUOUS" if self.vacuous else ("OK" if self.holds else "VIOLATED")


@dataclass(frozen=True)
class BoundsReport:
    n: int
    entropy_bits: float
    log_factorial: float
    lines: tuple[BoundLine, ...]
    theta_vacuous: bool

    def line(self, name: str) -> BoundLine:
        return next(x for x in self.lines if x.name == name)

    @property
    def all_hold(self) -> bool:
        return all(x.holds for x in self.lines if not x.name.startswith("ceiling"))


def is_transitive(t: Tournament) -> bool:
    scores = sorted(t.adjacency.sum(axis=1).tolist())
    return scores == list(range(t.n))


def verify_bounds(solution: MaxentSolution, constants: PaperConstants) -> BoundsReport:
    """Compare the solver's entropy with the entropy bounds at this ``n``.

    An entropy bound is VACUOUS when it is at least ``log₂ n!``; the general
    ``(1 - theta) log₂ n!`` bound is also flagged when ``theta log₂ n! < 1``,
    i.e. it removes less than one bit.  The ``(1 - 2 epsilon) log₂ n!`` line
    is the ceiling on any provable theta and is reported, not required.
    """
    if not solution.feasible:
        raise ValueError("verify_bounds needs a feasible solution")
    n = solution.distribution.n
    h = solution.entropy_bits
    log_fact = math.log2(math.factorial(n))
    eps = constants.epsilon
    theta_bound = (1 - constants.theta) * log_fact
    theta_vacuous = theta_bound >= log_fact or constants.theta * log_fact < 1
    lines = [
        BoundLine("H <= log2 n!", log_fact, h <= log_fact + 1e-9, False),
        BoundLine("H <= (1-theta) log2 n!", theta_bound, h <= theta_bound + 1e-9, theta_vacuous),
    ]
    if solution.tournament is not None and is_transitive(solution.tournament):
        t2 = (1 - eps**2 / 8) * n * math.log2(n) if n > 1 else 0.0
        lines.append(BoundLine("H <= (1-eps^2/8) n log2 n", t2, h <= t2 + 1e-9, t2 >= log_fact))
    ceiling = (1 - 2 * eps) * log_fact
    lines.append(BoundLine("ceiling: H >= (1-2eps) log2 n!", ceiling, h >= ceiling - 1e-9, False))
    return BoundsReport(n, h, log_fact, tuple(lines), theta_vacuous)
