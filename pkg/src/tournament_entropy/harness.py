"""Experiment orchestration: run configuration, exact proof-chain replays and report export.

Everything at ``n <= 8`` is summed exactly over all of ``S_n``.  Reports are
flat typed tables (see :data:`SCHEMA`) so that exporting the same report
twice gives identical bytes and parsing an export gives the same values
back.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from .core import BipartitePair, Permutation, Tournament, make_random_tournament, make_transitive_tournament, read_tournament
from .decomposition import (
    DecompositionTree,
    build_tree,
    default_leaf_threshold,
    dyadic_decomposition,
    extract_blocks,
    reconstruct_from_blocks,
    tree_stats,
)
from .entropy import (
    PermDistribution,
    SubsetDistribution,
    entropy,
    mpc_check,
    read_distribution,
)
from .maxent import (
    ArcConstraintSystem,
    MaxentSolution,
    PaperConstants,
    is_transitive,
    solve_maxent,
    verify_bounds,
)
from .regularity import RegularPairNotFound
from .safety import SafetyParams, is_safe_pattern, unsafe_prob_bound, unsafe_prob_monte_carlo

__all__ = [
    "ConfigError",
    "InfeasibleConfig",
    "MODES",
    "RunConfig",
    "RunReport",
    "SCHEMA",
    "SCHEMA_VERSION",
    "ReportFormatError",
    "export_report",
    "parse_config_text",
    "parse_report",
    "read_report",
    "replay_proof_chain",
    "run",
    "transitive_pipeline",
]

SCHEMA_VERSION = "tournament-entropy-report/1"
MODES = ("replay", "transitive", "mpc", "maxent", "decompose")
EXACT_CAP = 8
LN2 = math.log(2)


class ConfigError(ValueError):
    pass


class InfeasibleConfig(RuntimeError):
    def __init__(self, message: str, solution: MaxentSolution | None = None):
        super().__init__(message)
        self.solution = solution


class ReportFormatError(ValueError):
    pass


# --------------------------------------------------------------------------- config


@dataclass(frozen=True)
class RunConfig:
    """One run.  ``source`` is ``transitive``, ``random`` or a tournament file;
    ``distribution`` is ``maxent``, ``uniform``, ``identity`` or a distribution file."""

    mode: str = "replay"
    source: str = "transitive"
    n: int = 4
    seed: int = 0
    epsilon: float = 0.2
    delta: float | None = None
    leaf_threshold: int | None = None
    floor_fraction: float = 0.1
    samples: int = 0
    distribution: str = "maxent"
    margin: float = 1e-6
    tolerance: float = 1e-8
    max_iterations: int = 20000
    output: str | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        if self.n < 1:
            raise ConfigError("n must be positive")
        if not 0 < self.epsilon < 0.5:
            raise ConfigError("epsilon must lie in (0, 1/2)")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if self.leaf_threshold is not None and self.leaf_threshold < 2:
            raise ConfigError("leaf threshold must be at least 2")
        if not 0 < self.floor_fraction < 0.5:
            raise ConfigError("floor fraction must lie in (0, 1/2)")
        if self.samples < 0:
            raise ConfigError("samples must be nonnegative")
        if self.margin < 0 or self.tolerance <= 0 or self.max_iterations < 1:
            raise ConfigError("need margin >= 0, tolerance > 0 and max_iterations >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")

    @property
    def effective_delta(self) -> float:
        return self.delta if self.delta is not None else 0.03 * self.epsilon

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, raw in values.items():
            name = key.replace("-", "_")
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[name] = _coerce(name, raw)
        return cls(**kwargs)

    def as_dict(self) -> dict[str, Any]:
        return asdict(self)


_INT_KEYS = {"n", "seed", "leaf_threshold", "samples", "max_iterations"}
_FLOAT_KEYS = {"epsilon", "delta", "floor_fraction", "margin", "tolerance"}


def _coerce(name: str, raw: Any) -> Any:
    if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none")):
        return None
    try:
        if name in _INT_KEYS:
            return int(raw)
        if name in _FLOAT_KEYS:
            return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return str(raw)


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


# --------------------------------------------------------------------------- report

_I, _F, _S, _B = "int", "float", "str", "bool"

SCHEMA: dict[str, tuple[tuple[str, str], ...]] = {
    "config": (("key", _S), ("value", _S)),
    "summary": (("key", _S), ("value", _S)),
    "node": (
        ("node", _I), ("parent", _I), ("role", _S), ("size", _I), ("left", _S), ("right", _S),
        ("arcs", _I), ("density", _S), ("regular", _B), ("regularity_mode", _S),
        ("expected_fit", _F), ("pr_a", _F), ("pr_a_samples", _I), ("pr_a_stderr", _F),
        ("mu_a", _F), ("mu_b", _F), ("mu_samples", _I), ("mu_stderr", _F),
        ("mu_b_mc", _F), ("mu_b_mc_samples", _I), ("mu_b_mc_stderr", _F),
        ("hoeffding_bound", _F), ("hoeffding_tag", _S), ("decay_bound", _F), ("decay_tag", _S),
    ),
    "leaf": (("node", _I), ("parent", _I), ("role", _S), ("size", _I), ("depth", _I), ("vertices", _S)),
    "pair": (
        ("i", _I), ("j", _I), ("mu_b_i", _F), ("mu_b_j", _F), ("joint", _F), ("product", _F),
        ("samples", _I), ("stderr", _F), ("holds", _B),
    ),
    "block": (
        ("block", _I), ("left", _S), ("right", _S), ("m", _I), ("entropy", _F),
        ("expected_crossings", _F), ("threshold", _F), ("hypothesis", _B), ("sum_delta_sq", _F),
        ("bound", _F), ("chain_holds", _B),
    ),
    "arc": (("u", _I), ("v", _I), ("probability", _F), ("weight", _F), ("residual", _F)),
    "check": (("name", _S), ("lhs", _F), ("relation", _S), ("rhs", _F), ("holds", _B), ("tag", _S)),
    "series": (
        ("sweep", _S), ("x", _F), ("empirical", _F), ("samples", _I), ("stderr", _F),
        ("bound", _F), ("tag", _S),
    ),
}
TABLE_ORDER = tuple(SCHEMA)
CSV_COLUMNS = ("table",) + tuple(
    dict.fromkeys(name for cols in SCHEMA.values() for name, _ in cols)
)


@dataclass
class RunReport:
    mode: str
    rows: list[tuple[str, dict[str, Any]]] = field(default_factory=list)
    wall_clock: float | None = None
    schema: str = SCHEMA_VERSION

    def add(self, table: str, **values: Any) -> None:
        cols = dict(SCHEMA[table])
        unknown = set(values) - set(cols)
        if unknown:
            raise ReportFormatError(f"unknown fields for {table}: {sorted(unknown)}")
        self.rows.append((table, {name: values.get(name) for name in cols}))

    def table(self, name: str) -> list[dict[str, Any]]:
        return [row for t, row in self.rows if t == name]

    def summary(self) -> dict[str, str]:
        return {row["key"]: row["value"] for row in self.table("summary")}

    def check(
        self,
        name: str,
        lhs: float,
        relation: str,
        rhs: float,
        tol: float = 1e-9,
        vacuous: bool = False,
        applies: bool = True,
    ) -> bool:
        """Record ``lhs relation rhs``; strict relations get no tolerance."""
        lhs, rhs = float(lhs), float(rhs)
        holds = {
            "<": lhs < rhs,
            "<=": lhs <= rhs + tol,
            ">": lhs > rhs,
            ">=": lhs >= rhs - tol,
            "==": abs(lhs - rhs) <= tol,
        }[relation]
        if not applies:
            tag = "SKIPPED"
        elif vacuous:
            tag = "VACUOUS"
        else:
            tag = "OK" if holds else "VIOLATED"
        self.add("check", name=name, lhs=lhs, relation=relation, rhs=rhs, holds=holds, tag=tag)
        return holds

    @property
    def violations(self) -> list[dict[str, Any]]:
        return [row for row in self.table("check") if row["tag"] == "VIOLATED"]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RunReport):
            return NotImplemented
        return (self.schema, self.mode, self.rows) == (other.schema, other.mode, other.rows)


def _fmt(value: Any, kind: str) -> str:
    if value is None:
        return ""
    if kind == _B:
        return "true" if value else "false"
    if kind == _F:
        return repr(float(value))
    return str(value)


def _parse(text: str, kind: str) -> Any:
    if text == "":
        return None
    if kind == _B:
        if text not in ("true", "false"):
            raise ReportFormatError(f"bad boolean {text!r}")
        return text == "true"
    if kind == _I:
        return int(text)
    if kind == _F:
        return float(text)
    return text


def _json_value(value: Any, kind: str) -> Any:
    if value is None:
        return None
    if kind == _F:
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if kind == _I:
        return int(value)
    if kind == _B:
        return bool(value)
    return str(value)


def _render(report: RunReport, fmt: str, include_timing: bool = False) -> str:
    if fmt == "jsonl":
        lines = [json.dumps({"schema": report.schema, "table": "meta", "mode": report.mode}, sort_keys=False)]
        if include_timing and report.wall_clock is not None:
            lines.append(json.dumps({"table": "timing", "wall_clock": report.wall_clock}))
        for table, row in report.rows:
            record = {"table": table}
            record.update({name: _json_value(row[name], kind) for name, kind in SCHEMA[table]})
            lines.append(json.dumps(record, sort_keys=False))
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for table, row in report.rows:
            kinds = dict(SCHEMA[table])
            writer.writerow([table] + [_fmt(row[c], kinds[c]) if c in kinds else "" for c in CSV_COLUMNS[1:]])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}; use jsonl or csv")


def export_report(
    report: RunReport, fmt: str, path: str | Path | None = None, include_timing: bool = False
) -> str:
    """Render ``report`` as ``jsonl`` or ``csv`` and write it to ``path`` when given.

    Rows keep insertion order and columns follow :data:`SCHEMA`, so the
    output is a pure function of the report.  The JSONL form carries the
    schema tag and mode in a leading ``meta`` record; the CSV form is a
    single table whose ``table`` column names the record kind.  Wall-clock
    time is left out unless ``include_timing`` is set (JSONL only), since it
    would break byte-for-byte reproducibility.
    """
    text = _render(report, fmt, include_timing)
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text


def parse_report(text: str, fmt: str) -> RunReport:
    """Inverse of :func:`export_report`; unknown tables or fields are rejected."""
    if fmt == "jsonl":
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise ReportFormatError("empty report")
        meta = json.loads(lines[0])
        if meta.get("table") != "meta" or set(meta) != {"schema", "table", "mode"}:
            raise ReportFormatError("first record must be the meta header")
        if meta["schema"] != SCHEMA_VERSION:
            raise ReportFormatError(f"unsupported schema {meta['schema']!r}")
        report = RunReport(meta["mode"])
        for line in lines[1:]:
            record = json.loads(line)
            table = record.pop("table", None)
            if table == "timing" and set(record) == {"wall_clock"}:
                report.wall_clock = float(record["wall_clock"])
                continue
            if table not in SCHEMA:
                raise ReportFormatError(f"unknown table {table!r}")
            kinds = dict(SCHEMA[table])
            if set(record) != set(kinds):
                raise ReportFormatError(f"fields of {table} differ from the schema: {sorted(set(record) ^ set(kinds))}")
            values = {}
            for name, kind in SCHEMA[table]:
                v = record[name]
                values[name] = float(v) if kind == _F and isinstance(v, str) else v
            report.rows.append((table, values))
        return report
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ReportFormatError("CSV header differs from the schema")
        report = RunReport("unknown")
        for cells in reader:
            if len(cells) != len(CSV_COLUMNS):
                raise ReportFormatError("ragged CSV row")
            table = cells[0]
            if table not in SCHEMA:
                raise ReportFormatError(f"unknown table {table!r}")
            kinds = dict(SCHEMA[table])
            row = dict(zip(CSV_COLUMNS[1:], cells[1:]))
            stray = [c for c, v in row.items() if v and c not in kinds]
            if stray:
                raise ReportFormatError(f"fields {stray} do not belong to {table}")
            report.rows.append((table, {name: _parse(row[name], kind) for name, kind in SCHEMA[table]}))
        mode = [r["value"] for t, r in report.rows if t == "config" and r["key"] == "mode"]
        report.mode = mode[0] if mode else "unknown"
        return report
    raise ValueError(f"unknown format {fmt!r}; use jsonl or csv")


def read_report(path: str | Path, fmt: str | None = None) -> RunReport:
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix == ".csv" else "jsonl")
    return parse_report(path.read_text(), fmt)


# --------------------------------------------------------------------------- inputs


def load_tournament(config: RunConfig) -> Tournament:
    if config.source == "transitive":
        return make_transitive_tournament(config.n)
    if config.source == "random":
        return make_random_tournament(config.n, config.seed)
    return read_tournament(config.source)


def _all_perms(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int64).reshape(-1, n)


def _perm_index(perms: np.ndarray, n: int) -> np.ndarray:
    """Lexicographic rank of each row among all permutations of ``[n]``."""
    idx = np.zeros(len(perms), dtype=np.int64)
    for i in range(n):
        smaller_later = (perms[:, i + 1:] < perms[:, i:i + 1]).sum(axis=1)
        idx += smaller_later * math.factorial(n - 1 - i)
    return idx


def dense_probabilities(dist: PermDistribution) -> np.ndarray:
    """Probability vector over all of ``S_n`` in lexicographic order."""
    probs = np.zeros(math.factorial(dist.n))
    np.add.at(probs, _perm_index(dist.perms, dist.n), dist.probs)
    return probs


def load_distribution(config: RunConfig, t: Tournament) -> tuple[PermDistribution, MaxentSolution | None]:
    n = t.n
    if config.distribution == "uniform":
        return PermDistribution.uniform(n), None
    if config.distribution == "identity":
        return PermDistribution(n, [list(range(1, n + 1))], [1.0]), None
    if config.distribution == "maxent":
        if n > EXACT_CAP:
            raise ConfigError(f"maxent distributions need n <= {EXACT_CAP}")
        system = ArcConstraintSystem(t, config.epsilon, config.margin)
        solution = solve_maxent(system, config.tolerance, config.max_iterations)
        if not solution.feasible:
            why = solution.certificate.describe() if solution.certificate else solution.status
            raise InfeasibleConfig(f"no distribution meets the arc constraints ({why})", solution)
        return solution.distribution, solution
    dist = read_distribution(config.distribution, "perm")
    if dist.n != n:
        raise ConfigError(f"distribution is on [{dist.n}] but the tournament has n = {n}")
    return dist, None


def _echo(report: RunReport, config: RunConfig) -> None:
    # the output path is where the report goes, not part of what it reports
    for key, value in config.as_dict().items():
        if key == "output":
            continue
        report.add("config", key=key, value="none" if value is None else str(value))


def _summary(report: RunReport, **values: Any) -> None:
    for key, value in values.items():
        if isinstance(value, float):
            value = repr(value)
        report.add("summary", key=key, value=str(value))


def _log2(x: float) -> float:
    return math.log2(x) if x > 0 else float("-inf")


def _verts(vs: Iterable[int]) -> str:
    return " ".join(map(str, sorted(vs)))


def _hypothesis(report: RunReport, t: Tournament, perms: np.ndarray, probs: np.ndarray, eps: float) -> bool:
    """``Pr(sigma(u) < sigma(v)) > 1/2 + epsilon`` for every arc, recorded per arc."""
    arcs = t.arc_list()
    if not arcs:
        return True
    pr = [float(probs[perms[:, u - 1] < perms[:, v - 1]].sum()) for u, v in arcs]
    worst = min(pr)
    return report.check("hypothesis: min_uv Pr(A_uv) > 1/2 + eps", worst, ">", 0.5 + eps)


# --------------------------------------------------------------------------- replay


def _fit_matrix(perms: np.ndarray, arcs: list[tuple[int, int]]) -> np.ndarray:
    a = np.asarray(arcs, dtype=np.int64).reshape(-1, 2) - 1
    agree = perms[:, a[:, 0]] < perms[:, a[:, 1]]
    return (2 * agree.astype(np.int64) - 1).sum(axis=1)


def _unsafe_vector(perms: np.ndarray, left: list[int], right: list[int], adj: np.ndarray, eps: float) -> np.ndarray:
    """``sigma in B`` for every row: unsafety depends only on where ``R`` sits in ``sigma(L ∪ R)``."""
    cols = np.asarray(left + right) - 1
    order = np.argsort(perms[:, cols], axis=1, kind="stable")
    is_right = order >= len(left)
    weights = 1 << np.arange(len(cols), dtype=np.int64)
    masks = (is_right * weights).sum(axis=1)
    values, inverse = np.unique(masks, return_inverse=True)
    verdict = np.array(
        [not is_safe_pattern(adj, [i + 1 for i in range(len(cols)) if int(v) >> i & 1], eps) for v in values]
    )
    return verdict[inverse.ravel()]


def _derived_seed(seed: int, node: int) -> int:
    return int(np.random.SeedSequence([seed, node]).generate_state(1)[0])


def replay_proof_chain(config: RunConfig, dist: PermDistribution | None = None) -> RunReport:
    """Replay the general entropy argument on an explicit distribution.

    The tree is built from ``config``; every probability over ``S_n`` under
    the supplied distribution and under the uniform measure is summed
    exactly.  Checks that depend on the arc hypothesis are tagged SKIPPED
    when it fails; bound lines that say nothing at this size are tagged
    VACUOUS.
    """
    start = time.perf_counter()
    t = load_tournament(config)
    n = t.n
    if n > EXACT_CAP:
        raise ConfigError(f"replay enumerates S_n and needs n <= {EXACT_CAP}")
    solution = None
    if dist is None:
        dist, solution = load_distribution(config, t)
    eps = config.epsilon
    delta = config.effective_delta
    constants = PaperConstants(eps, config.floor_fraction)
    report = RunReport("replay")
    _echo(report, config)

    perms = _all_perms(n)
    probs = dense_probabilities(dist)
    n_fact = len(perms)
    log_fact = math.log2(n_fact)
    hyp = _hypothesis(report, t, perms, probs, eps)

    leaf_threshold = config.leaf_threshold or default_leaf_threshold(n)
    try:
        tree = build_tree(t, delta, leaf_threshold, config.floor_fraction, seed=config.seed)
    except RegularPairNotFound as exc:
        raise RuntimeError(f"tree construction failed: {exc}") from exc
    problems = tree.check_invariants()
    report.check("tree invariants (count of problems)", len(problems), "==", 0)
    stats = tree_stats(tree)
    lam = stats.lambda_
    internal = tree.internal_nodes()
    m = len(internal)
    if n > 1:
        report.check("internal nodes: m < n", m, "<", n)

    fits, a_sets, b_sets = [], [], []
    for k, node in enumerate(internal):
        left, right = sorted(node.left), sorted(node.right)
        arcs = sorted(node.arcs.arcs)
        s = len(arcs)
        f = _fit_matrix(perms, arcs)
        threshold = Fraction(eps) * s
        a = f >= threshold  # exact: f is an integer array
        adj = t.submatrix(left, right).astype(np.int64)
        b = _unsafe_vector(perms, left, right, adj, eps)
        fits.append(f)
        a_sets.append(a)
        b_sets.append(b)

        expected_fit = float(probs @ f)
        pr_a = float(probs[a].sum())
        mu_a = a.sum() / n_fact
        mu_b = b.sum() / n_fact
        label = f"node {node.id}"
        report.check(f"{label}: E fit >= 2 eps |S_i|", expected_fit, ">=", 2 * eps * s, applies=hyp)
        report.check(f"{label}: E fit <= (Pr(A_i) + eps)|S_i|", expected_fit, "<=", (pr_a + eps) * s)
        report.check(f"{label}: Pr(A_i) >= eps", pr_a, ">=", eps, applies=hyp)
        report.check(f"{label}: A_i subset of B_i (count outside)", int((a & ~b).sum()), "==", 0)

        params = SafetyParams.for_pair(len(left), len(right), delta, eps)
        hoeffding = unsafe_prob_bound(params)
        decay = math.exp(-constants.b * node.size)
        report.check(f"{label}: mu(B_i) < 2r exp(-2 zeta^2 l/lambda)", mu_b, "<", hoeffding, vacuous=hoeffding >= 1)
        report.check(f"{label}: mu(B_i) < exp(-b|V_i|)", mu_b, "<", decay, vacuous=decay >= 1)

        mc = (None, None, None)
        if config.samples:
            p_mc, se = unsafe_prob_monte_carlo(
                node.arcs, eps, n, config.samples, _derived_seed(config.seed, node.id), left, right
            )
            mc = (p_mc, config.samples, se)
            report.check(
                f"{label}: |mu(B_i) Monte Carlo - exact| <= 4 stderr",
                abs(p_mc - mu_b), "<=", 4 * se + 1e-12,
            )
        report.add(
            "node",
            node=node.id,
            parent=-1 if node.parent is None else node.parent,
            role=node.role,
            size=node.size,
            left=_verts(left),
            right=_verts(right),
            arcs=s,
            density=str(node.density),
            regular=node.verdict.regular,
            regularity_mode=node.verdict.mode,
            expected_fit=expected_fit,
            pr_a=pr_a,
            pr_a_samples=n_fact,
            pr_a_stderr=0.0,
            mu_a=float(mu_a),
            mu_b=float(mu_b),
            mu_samples=n_fact,
            mu_stderr=0.0,
            mu_b_mc=mc[0],
            mu_b_mc_samples=mc[1],
            mu_b_mc_stderr=mc[2],
            hoeffding_bound=hoeffding,
            hoeffding_tag="VACUOUS" if hoeffding >= 1 else ("OK" if mu_b < hoeffding else "VIOLATED"),
            decay_bound=decay,
            decay_tag="VACUOUS" if decay >= 1 else ("OK" if mu_b < decay else "VIOLATED"),
        )
        report.add(
            "series", sweep="mu_B_vs_hoeffding_by_l", x=float(len(left) + len(right)), empirical=float(mu_b),
            samples=n_fact, stderr=0.0, bound=hoeffding, tag="VACUOUS" if hoeffding >= 1 else "OK",
        )
    for leaf in tree.leaves():
        report.add(
            "leaf", node=leaf.id, parent=-1 if leaf.parent is None else leaf.parent, role=leaf.role,
            size=leaf.size, depth=leaf.depth, vertices=_verts(leaf.vertices),
        )

    # independence of the B_i under uniform sampling, exactly
    counts = [int(b.sum()) for b in b_sets]
    for i, j in itertools.combinations(range(m), 2):
        joint = int((b_sets[i] & b_sets[j]).sum())
        holds = joint * n_fact == counts[i] * counts[j]
        report.add(
            "pair", i=internal[i].id, j=internal[j].id, mu_b_i=counts[i] / n_fact, mu_b_j=counts[j] / n_fact,
            joint=joint / n_fact, product=counts[i] * counts[j] / n_fact**2, samples=n_fact, stderr=0.0,
            holds=holds,
        )
        report.check(f"B independence: nodes {internal[i].id},{internal[j].id} (joint - product)",
                     joint / n_fact - counts[i] * counts[j] / n_fact**2, "==", 0.0, tol=1e-12)

    # xi and Q
    sizes = np.array([node.size for node in internal], dtype=np.int64)
    a_mat = np.column_stack(a_sets) if m else np.zeros((n_fact, 0), dtype=bool)
    xi = a_mat.astype(np.int64) @ sizes if m else np.zeros(n_fact, dtype=np.int64)
    q = xi >= Fraction(eps) * lam / 2
    pr_q = float(probs[q].sum())
    e_xi = float(probs @ xi)
    report.check("xi <= Lambda for every sigma", int(xi.max()) if m else 0, "<=", lam)
    report.check("E xi >= eps Lambda", e_xi, ">=", eps * lam, applies=hyp)
    report.check("Pr(Q) >= eps/2", pr_q, ">=", eps / 2, applies=hyp and m > 0)

    # Q as the union of A_I over the index family J
    family = [
        I for r in range(m + 1) for I in itertools.combinations(range(m), r)
        if sizes[list(I)].sum() >= Fraction(eps) * lam / 2
    ]
    union = np.zeros(n_fact, dtype=bool)
    b_prob = np.array(counts) / n_fact
    main_bound = math.exp(-constants.b * eps * lam / 2)
    worst_ai, worst_gap = 0.0, -1.0
    for I in family:
        a_i = np.logical_and.reduce([a_sets[k] for k in I]) if I else np.ones(n_fact, dtype=bool)
        union |= a_i
        mu_ai = a_i.sum() / n_fact
        worst_ai = max(worst_ai, mu_ai)
        worst_gap = max(worst_gap, mu_ai - float(np.prod(b_prob[list(I)])))
    report.check("Q equals the union of A_I over J (mismatches)", int((union != q).sum()), "==", 0)
    report.check("max_J mu(A_I) - prod mu(B_i) <= 0", worst_gap if family else 0.0, "<=", 0.0, tol=1e-12)
    report.check("max_J mu(A_I) <= exp(-b eps Lambda/2)", worst_ai, "<=", main_bound, vacuous=main_bound >= 1)

    size_q = int(q.sum())
    mu_q = size_q / n_fact
    log_mu_q = _log2(mu_q)
    log_j = math.log2(len(family)) if family else float("-inf")
    main_log = log_j - constants.b * eps * lam / (2 * LN2)
    if size_q:
        report.check("log mu(Q) <= log|J| - b eps Lambda log e/2", log_mu_q, "<=", main_log, vacuous=main_log >= 0)
        report.check("log mu(Q) <= n - b eps Lambda log e/2", log_mu_q, "<=", n - constants.b * eps * lam / (2 * LN2),
                     vacuous=True)

    h = entropy(dist)
    rhs1 = 1 + (1 - pr_q) * log_fact + (pr_q * math.log2(size_q) if size_q else 0.0)
    report.check("H(P) <= 1 + (1-Pr(Q)) log n! + Pr(Q) log|Q|", h, "<=", rhs1, vacuous=rhs1 >= log_fact)
    if size_q:
        rhs2 = 1 + log_fact + pr_q * log_mu_q
        rhs3 = 1 + log_fact + eps / 2 * log_mu_q
        report.check("entropy split rhs: log|Q| form == log mu(Q) form", rhs1, "==", rhs2)
        report.check("H(P) <= 1 + log n! + (eps/2) log mu(Q)", h, "<=", rhs3,
                     vacuous=rhs3 >= log_fact, applies=hyp)
        chained = 1 + log_fact + eps / 2 * main_log
        report.check("H(P) <= 1 + log n! + (eps/2)(log|J| - b eps Lambda log e/2)", h, "<=", chained,
                     vacuous=chained >= log_fact, applies=hyp)
    theta_bound = (1 - constants.theta) * log_fact
    report.check("H(P) <= (1-theta) log n!", h, "<=", theta_bound,
                 vacuous=theta_bound >= log_fact or constants.theta * log_fact < 1, applies=hyp)
    _summary(
        report,
        n=n,
        tree_nodes=len(tree.nodes),
        internal_nodes=m,
        Lambda=lam,
        Lambda_lower_bound=stats.lambda_lower_bound,
        hypothesis=hyp,
        entropy_bits=h,
        log2_n_factorial=log_fact,
        E_xi=e_xi,
        Pr_Q=pr_q,
        mu_Q=mu_q,
        Q_size=size_q,
        J_size=len(family),
        delta=delta,
        beta=constants.beta,
        b=constants.b,
        c=constants.c,
        theta=constants.theta,
        solver_status=solution.status if solution else "none",
    )
    if solution is not None:
        ceiling = verify_bounds(solution, constants).line("ceiling: H >= (1-2eps) log2 n!")
        _summary(report, ceiling_1_minus_2eps=ceiling.value)
    report.wall_clock = time.perf_counter() - start
    return report


# --------------------------------------------------------------------------- transitive


def _block_law(perms: np.ndarray, probs: np.ndarray, pair: BipartitePair) -> SubsetDistribution:
    left, right = sorted(pair.left), sorted(pair.right)
    cols = np.asarray(left + right) - 1
    order = np.argsort(perms[:, cols], axis=1, kind="stable")
    is_right = order >= len(left)
    weights = 1 << np.arange(len(cols), dtype=np.int64)
    masks = (is_right * weights).sum(axis=1)
    keep = probs > 0
    values, inverse = np.unique(masks[keep], return_inverse=True)
    mass = np.zeros(len(values))
    np.add.at(mass, inverse.ravel(), probs[keep])
    table = {
        tuple(i + 1 for i in range(len(cols)) if int(v) >> i & 1): float(p) for v, p in zip(values, mass)
    }
    return SubsetDistribution(len(left), table)


def transitive_pipeline(config: RunConfig, dist: PermDistribution | None = None) -> RunReport:
    """Dyadic block decomposition of a distribution for the transitive tournament.

    Each block's relative-position law is checked against the crossing-count
    entropy lemma; ``H(P) <= Σ H(Y_i)`` holds because the blocks determine
    ``sigma``, which is verified on the support.
    """
    start = time.perf_counter()
    n = config.n
    if n < 2 or n & (n - 1) or n > EXACT_CAP:
        raise ConfigError(f"transitive pipeline needs n a power of two in [2, {EXACT_CAP}], got {n}")
    t = make_transitive_tournament(n)
    solution = None
    if dist is None:
        dist, solution = load_distribution(config, t)
    eps = config.epsilon
    report = RunReport("transitive")
    _echo(report, config)
    probs = dense_probabilities(dist)
    perms = _all_perms(n)
    hyp = _hypothesis(report, t, perms, probs, eps)

    pairs = dyadic_decomposition(n)
    support = [row for row, p in zip(perms, probs) if p > 0]
    broken = 0
    for row in support:
        sigma = Permutation(tuple(int(x) for x in row))
        if reconstruct_from_blocks(n, extract_blocks(sigma, pairs)) != sigma:
            broken += 1
    report.check("blocks determine sigma (failures on support)", broken, "==", 0)

    total_h, total_2m = 0.0, 0
    for k, pair in enumerate(pairs):
        law = _block_law(perms, probs, pair)
        mpc = mpc_check(law, eps)
        m = law.m
        total_h += mpc.entropy
        total_2m += 2 * m
        report.add(
            "block", block=k, left=_verts(pair.left), right=_verts(pair.right), m=m, entropy=mpc.entropy,
            expected_crossings=mpc.expected_crossings, threshold=(0.5 + eps) * m * m, hypothesis=mpc.hypothesis,
            sum_delta_sq=mpc.sum_delta_sq, bound=mpc.bound, chain_holds=mpc.chain_holds,
        )
        report.check(f"block {k}: E f > (1/2+eps) m^2", mpc.expected_crossings, ">", (0.5 + eps) * m * m,
                     applies=hyp)
        for step in mpc.chain:
            report.check(f"block {k}: {step.name}", step.lhs, step.relation, step.rhs, applies=hyp)

    h = entropy(dist)
    log_fact = math.log2(math.factorial(n))
    report.check("H(P) <= sum H(Y_i)", h, "<=", total_h)
    per_block = (1 - eps**2 / 8) * total_2m
    final = (1 - eps**2 / 8) * n * math.log2(n)
    report.check("sum 2m_i == n log2 n", total_2m, "==", n * math.log2(n))
    report.check("sum H(Y_i) <= (1-eps^2/8) sum 2m_i", total_h, "<=", per_block,
                 vacuous=per_block >= log_fact, applies=hyp)
    report.check("sum H(Y_i) <= (1-eps^2/8) n log2 n", total_h, "<=", final,
                 vacuous=final >= log_fact, applies=hyp)
    _summary(
        report, n=n, hypothesis=hyp, entropy_bits=h, sum_block_entropy=total_h,
        log2_n_factorial=log_fact, bound=final, solver_status=solution.status if solution else "none",
    )
    report.wall_clock = time.perf_counter() - start
    return report


# --------------------------------------------------------------------------- other modes


def decompose_report(config: RunConfig) -> tuple[RunReport, DecompositionTree]:
    start = time.perf_counter()
    t = load_tournament(config)
    tree = build_tree(t, config.effective_delta, config.leaf_threshold, config.floor_fraction, seed=config.seed)
    report = RunReport("decompose")
    _echo(report, config)
    stats = tree_stats(tree)
    problems = tree.check_invariants()
    report.check("tree invariants (count of problems)", len(problems), "==", 0)
    if t.n > 1:
        report.check("internal nodes: m < n", stats.m, "<", t.n)
        report.check("Lambda >= n log3 n / 2", stats.lambda_, ">=", stats.lambda_lower_bound, tol=0.0)
    for node in tree.internal_nodes():
        report.add(
            "node", node=node.id, parent=-1 if node.parent is None else node.parent, role=node.role,
            size=node.size, left=_verts(node.left), right=_verts(node.right), arcs=len(node.arcs),
            density=str(node.density), regular=node.verdict.regular, regularity_mode=node.verdict.mode,
        )
    for leaf in tree.leaves():
        report.add(
            "leaf", node=leaf.id, parent=-1 if leaf.parent is None else leaf.parent, role=leaf.role,
            size=leaf.size, depth=leaf.depth, vertices=_verts(leaf.vertices),
        )
    _summary(report, n=t.n, Lambda=stats.lambda_, Lambda_lower_bound=stats.lambda_lower_bound, m=stats.m,
             leaf_threshold=tree.leaf_threshold)
    report.wall_clock = time.perf_counter() - start
    return report, tree


def maxent_report(config: RunConfig) -> tuple[RunReport, MaxentSolution]:
    start = time.perf_counter()
    t = load_tournament(config)
    solution = solve_maxent(ArcConstraintSystem(t, config.epsilon, config.margin), config.tolerance, config.max_iterations)
    report = RunReport("maxent")
    _echo(report, config)
    dist = solution.distribution
    for (u, v), w in solution.weights.items():
        report.add("arc", u=u, v=v, probability=dist.prob_arc(u, v), weight=w, residual=solution.residuals.get((u, v)))
    values = dict(
        n=t.n, status=solution.status, feasible=solution.feasible, entropy_bits=solution.entropy_bits,
        iterations=solution.iterations, target=solution.target, transitive=is_transitive(t),
    )
    if solution.certificate is not None:
        values["certificate"] = solution.certificate.describe()
    if solution.feasible:
        bounds = verify_bounds(solution, PaperConstants(config.epsilon, config.floor_fraction))
        for line in bounds.lines:
            relation = ">=" if line.name.startswith("ceiling") else "<="
            if line.name.startswith("ceiling"):
                # reported, not required: no general argument can certify more than this
                report.add("check", name=line.name, lhs=bounds.entropy_bits, relation=relation, rhs=line.value,
                           holds=line.holds, tag="INFO")
            else:
                report.check(line.name, bounds.entropy_bits, relation, line.value, vacuous=line.vacuous)
        report.check("max constraint violation <= tolerance", solution.max_violation, "<=", config.tolerance, tol=0.0)
    _summary(report, **values)
    report.wall_clock = time.perf_counter() - start
    return report, solution


def mpc_report(config: RunConfig) -> RunReport:
    start = time.perf_counter()
    if config.distribution in ("maxent", "uniform", "identity"):
        raise ConfigError("mpc mode needs distribution = path to a subset distribution file")
    law = read_distribution(config.distribution, "subset")
    mpc = mpc_check(law, config.epsilon)
    report = RunReport("mpc")
    _echo(report, config)
    m = law.m
    report.add(
        "block", block=0, left="", right="", m=m, entropy=mpc.entropy, expected_crossings=mpc.expected_crossings,
        threshold=(0.5 + config.epsilon) * m * m, hypothesis=mpc.hypothesis, sum_delta_sq=mpc.sum_delta_sq,
        bound=mpc.bound, chain_holds=mpc.chain_holds,
    )
    report.check("E f computed two ways", mpc.expected_crossings, "==", mpc.expected_crossings_from_marginals)
    for step in mpc.chain:
        report.check(step.name, step.lhs, step.relation, step.rhs)
    _summary(report, m=m, hypothesis=mpc.hypothesis, entropy_bits=mpc.entropy, bound=mpc.bound)
    report.wall_clock = time.perf_counter() - start
    return report


def run(config: RunConfig) -> RunReport:
    """Dispatch on ``config.mode``."""
    if config.mode == "replay":
        return replay_proof_chain(config)
    if config.mode == "transitive":
        return transitive_pipeline(config)
    if config.mode == "decompose":
        return decompose_report(config)[0]
    if config.mode == "maxent":
        return maxent_report(config)[0]
    return mpc_report(config)
