"""Command line entry point.

Exit codes: 0 success, 1 a check was violated, 2 usage error,
3 infeasible constraints or solver/tree failure.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Any, Callable

import click

from .core import TournamentFormatError, make_random_tournament, make_transitive_tournament, write_tournament
from .decomposition import TreeBuildError
from .entropy import DistributionFormatError
from .harness import (
    ConfigError,
    InfeasibleConfig,
    ReportFormatError,
    RunConfig,
    RunReport,
    decompose_report,
    export_report,
    maxent_report,
    mpc_report,
    parse_config_text,
    read_report,
    replay_proof_chain,
    transitive_pipeline,
)
from .regularity import RegularPairNotFound

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2, 3


def _shared(func: Callable) -> Callable:
    options = [
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                     help="Flat key = value file; flags override it."),
        click.option("--source", help="transitive, random, or a tournament file."),
        click.option("--n", type=int, help="Vertex count for generated tournaments."),
        click.option("--seed", type=int),
        click.option("--epsilon", type=float),
        click.option("--delta", type=float, help="Regularity parameter (default .03 epsilon)."),
        click.option("--leaf-threshold", type=int),
        click.option("--floor-fraction", type=float),
        click.option("--samples", type=int, help="Monte Carlo samples for uniform-side estimates."),
        click.option("--distribution", help="maxent, uniform, identity, or a distribution file."),
        click.option("--margin", type=float),
        click.option("--tolerance", type=float),
        click.option("--max-iterations", type=int),
        click.option("--out", "output", type=click.Path(dir_okay=False), help="Report path (default stdout)."),
        click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default=None),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _config(mode: str, config_file: str | None, fmt: str | None, **flags: Any) -> tuple[RunConfig, str]:
    values: dict[str, Any] = {}
    if config_file:
        values.update(parse_config_text(Path(config_file).read_text()))
    fmt = fmt or values.pop("format", None) or "jsonl"
    values.update({k: v for k, v in flags.items() if v is not None})
    values["mode"] = mode
    return RunConfig.from_mapping(values), fmt


def _emit(report: RunReport, config: RunConfig, fmt: str) -> int:
    text = export_report(report, fmt, config.output)
    if config.output is None:
        click.echo(text, nl=False)
    for row in report.violations:
        click.echo(f"VIOLATED: {row['name']} ({row['lhs']!r} {row['relation']} {row['rhs']!r})", err=True)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def _guarded(body: Callable[[], int]) -> None:
    try:
        code = body()
    except (ConfigError, TournamentFormatError, DistributionFormatError, ReportFormatError) as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_USAGE
    except InfeasibleConfig as exc:
        click.echo(f"infeasible: {exc}", err=True)
        code = EXIT_INFEASIBLE
    except (TreeBuildError, RegularPairNotFound, RuntimeError) as exc:
        click.echo(f"failure: {exc}", err=True)
        code = EXIT_INFEASIBLE
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_USAGE
    sys.exit(code)


@click.group()
@click.version_option(package_name="tournament-entropy")
def main() -> None:
    """Entropy of permutations that agree with a tournament: decompositions, solvers and proof-chain replays."""


@main.command()
@click.option("--n", type=int, required=True)
@click.option("--kind", type=click.Choice(["transitive", "random"]), default="random")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), help="Output file (default stdout).")
def gen(n: int, kind: str, seed: int, out: str | None) -> None:
    """Write a tournament in the edge-list format."""
    if n < 1:
        raise click.UsageError("--n must be positive")
    t = make_transitive_tournament(n) if kind == "transitive" else make_random_tournament(n, seed)
    if out:
        write_tournament(t, out)
    else:
        click.echo(str(t.n))
        for u, v in t.arc_list():
            click.echo(f"{u} {v}")


@main.command()
@_shared
@click.option("--tree-out", type=click.Path(dir_okay=False), help="Also write the tree, one node per line.")
def decompose(tree_out: str | None, **kw: Any) -> None:
    """Build the regular-pair decomposition tree and check its lemmas."""

    def body() -> int:
        config, fmt = _config("decompose", **kw)
        report, tree = decompose_report(config)
        if tree_out:
            tree.write(tree_out)
        return _emit(report, config, fmt)

    _guarded(body)


@main.command()
@_shared
def mpc(**kw: Any) -> None:
    """Crossing-count entropy checks for a subset distribution file (--distribution)."""

    def body() -> int:
        config, fmt = _config("mpc", **kw)
        return _emit(mpc_report(config), config, fmt)

    _guarded(body)


@main.command()
@_shared
def maxent(**kw: Any) -> None:
    """Solve for the maximum-entropy distribution meeting the arc constraints."""

    def body() -> int:
        config, fmt = _config("maxent", **kw)
        report, solution = maxent_report(config)
        code = _emit(report, config, fmt)
        if not solution.feasible:
            why = solution.certificate.describe() if solution.certificate else solution.status
            click.echo(f"infeasible: {why}", err=True)
            return EXIT_INFEASIBLE
        return code

    _guarded(body)


@main.command()
@_shared
def replay(**kw: Any) -> None:
    """Replay the general entropy argument exactly (n <= 8)."""

    def body() -> int:
        config, fmt = _config("replay", **kw)
        return _emit(replay_proof_chain(config), config, fmt)

    _guarded(body)


@main.command()
@_shared
def transitive(**kw: Any) -> None:
    """Dyadic block pipeline for the transitive tournament (n a power of two, <= 8)."""

    def body() -> int:
        config, fmt = _config("transitive", **kw)
        return _emit(transitive_pipeline(config), config, fmt)

    _guarded(body)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["jsonl", "csv"]), default=None,
              help="Input format (default from the file suffix).")
@click.option("--to", "to_fmt", type=click.Choice(["jsonl", "csv"]), default=None, help="Re-export in this format.")
@click.option("--out", type=click.Path(dir_okay=False))
def report(path: str, fmt: str | None, to_fmt: str | None, out: str | None) -> None:
    """Inspect or convert a saved report; exits 1 if it records a violation."""

    def body() -> int:
        parsed = read_report(path, fmt)
        if to_fmt:
            text = export_report(parsed, to_fmt, out)
            if out is None:
                click.echo(text, nl=False)
        else:
            click.echo(f"mode: {parsed.mode}")
            for key, value in parsed.summary().items():
                click.echo(f"{key}: {value}")
            tags: dict[str, int] = {}
            for row in parsed.table("check"):
                tags[row["tag"]] = tags.get(row["tag"], 0) + 1
            click.echo("checks: " + ", ".join(f"{k} {v}" for k, v in sorted(tags.items())))
            for row in parsed.violations:
                click.echo(f"VIOLATED: {row['name']}")
        return EXIT_OK if parsed.ok else EXIT_VIOLATION

    _guarded(body)


if __name__ == "__main__":
    main()
