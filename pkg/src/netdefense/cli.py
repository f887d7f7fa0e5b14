from __future__ import annotations

import logging
from collections.abc import Iterable, Iterator
from contextlib import contextmanager
from pathlib import Path

import click
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler

from netdefense.errors import ContractError, DimensionError, ParseError, RoundingError, SolverError

console = Console(stderr=True)

INSTANCE = click.Path(exists=True, dir_okay=False, path_type=Path)
OUTPUT = click.Path(dir_okay=False, writable=True, path_type=Path)


def fmt(value: float) -> str:
    return f"{value:.9g}"


def fmt_vector(values: Iterable[float]) -> str:
    return " ".join(fmt(float(v)) for v in values)


def configure_logging(verbose: int) -> None:
    from netdefense.settings import get_settings

    if verbose >= 2:
        level: int | str = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = get_settings().log_level.upper()
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


@contextmanager
def exit_on_error() -> Iterator[None]:
    try:
        yield
    except (ParseError, ContractError, DimensionError, ValidationError) as exc:
        console.print(f"[red]error:[/red] {exc}")
        raise SystemExit(2) from exc
    except (SolverError, RoundingError) as exc:
        console.print(f"[red]solver failure:[/red] {exc}")
        raise SystemExit(3) from exc


@click.group()
@click.option("-v", "--verbose", count=True, help="Log solver progress (-vv for debug detail).")
def cli(verbose: int) -> None:
    """Solve network defense games with general defending requirements."""
    configure_logging(verbose)


@cli.command("solve-pure")
@click.argument("instance_path", type=INSTANCE)
def solve_pure(instance_path: Path) -> None:
    """Optimal pure strategy."""
    from netdefense.pure import optimal_pure
    from netdefense.services import load_instance

    with exit_on_error():
        inst = load_instance(instance_path)
        strategy, result = optimal_pure(inst)
    click.echo(f"opt_p {fmt(result)}")
    click.echo(f"r {fmt_vector(strategy.allocation)}")


@cli.command("solve-frac")
@click.argument("instance_path", type=INSTANCE)
@click.option("--budget", type=float, help="Budget to solve at. Defaults to the instance resource.")
@click.option("--dump-lp", type=OUTPUT, help="Also write the LP in CPLEX LP format.")
def solve_frac(instance_path: Path, budget: float | None, dump_lp: Path | None) -> None:
    """Optimal fractional strategy."""
    from netdefense.fractional import optimal_fractional
    from netdefense.lp import build_fractional_lp, to_lp_text
    from netdefense.services import load_instance

    with exit_on_error():
        inst = load_instance(instance_path)
        budget = inst.resource if budget is None else budget
        strategy, result = optimal_fractional(inst, budget)
        if dump_lp is not None:
            dump_lp.write_text(to_lp_text(build_fractional_lp(inst, budget)), encoding="utf-8")
            console.print(f"Wrote {dump_lp}.")
    click.echo(f"opt_f {fmt(result)}")
    click.echo(f"r {fmt_vector(strategy.allocation)}")


@cli.command("round-mixed")
@click.argument("instance_path", type=INSTANCE)
@click.option("-o", "--output", type=OUTPUT, help="Write the mixed strategy as JSON.")
def round_mixed(instance_path: Path, output: Path | None) -> None:
    """Mixed strategy from rounding the fractional optimum at R - theta_max (isolated model)."""
    from netdefense.mixrounding import upper_bound_mixed
    from netdefense.services import load_instance, strategy_json

    with exit_on_error():
        inst = load_instance(instance_path)
        mixed, result = upper_bound_mixed(inst)
    click.echo(f"result {fmt(result)}")
    click.echo(f"support {mixed.size}")
    click.echo(f"total_probability {fmt(mixed.total_probability)}")
    if output is not None:
        output.write_text(strategy_json(mixed) + "\n", encoding="utf-8")
        console.print(f"Wrote {output}.")


@cli.command("patch")
@click.argument("instance_path", type=INSTANCE)
@click.option("--iters", "iterations", type=int, required=True, help="Number of patching iterations.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for the random redraw.")
@click.option("-o", "--output", type=OUTPUT, help="Write the mixed strategy as JSON.")
@click.option("--trace", "trace_path", type=OUTPUT, help="Write the per-iteration trace as CSV.")
@click.option("--timing/--no-timing", default=True, show_default=True, help="Record wall-clock milliseconds in the trace.")
def patch_command(
    instance_path: Path,
    iterations: int,
    seed: int,
    output: Path | None,
    trace_path: Path | None,
    timing: bool,
) -> None:
    """Small-support mixed strategy by patching."""
    from netdefense.patching import patch
    from netdefense.schemas import PatchConfig
    from netdefense.services import load_instance, strategy_json, write_csv

    with exit_on_error():
        inst = load_instance(instance_path)
        mixed, trace = patch(inst, PatchConfig(iterations=iterations, rng_seed=seed))
    click.echo(f"result {fmt(trace.results[-1])}")
    click.echo(f"support {mixed.size}")
    if output is not None:
        output.write_text(strategy_json(mixed) + "\n", encoding="utf-8")
        console.print(f"Wrote {output}.")
    if trace_path is not None:
        write_csv(trace.rows(timing), trace_path)
        console.print(f"Wrote {trace_path}.")


@cli.command("oracle")
@click.argument("instance_path", type=INSTANCE)
@click.option("--limit-n", type=int, help="Largest node count to enumerate. Defaults to the settings value.")
def oracle_command(instance_path: Path, limit_n: int | None) -> None:
    """Exact mixed optimum for small instances."""
    from netdefense.oracle import enumerate_feasible_statuses, exact_opt_mixed
    from netdefense.services import load_instance

    with exit_on_error():
        inst = load_instance(instance_path)
        statuses = enumerate_feasible_statuses(inst, limit_n)
        mixed, result = exact_opt_mixed(inst, statuses=statuses)
    click.echo(f"opt_m {fmt(result)}")
    click.echo(f"maximal_statuses {statuses.shape[0]}")
    click.echo(f"support {mixed.size}")


@cli.command("gen")
@click.option("--edges", "edges_path", type=INSTANCE, required=True, help="Edge list, one 'u v' pair per line.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--isolated", is_flag=True, help="Keep the graph but set every weight to 0.")
@click.option("--uniform-theta", type=float, help="Use this threshold on every node.")
@click.option("--resource-frac", type=float, default=0.2, show_default=True, help="R as a fraction of the threshold sum.")
@click.option("-o", "--output", type=OUTPUT, required=True)
def gen(
    edges_path: Path,
    seed: int,
    isolated: bool,
    uniform_theta: float | None,
    resource_frac: float,
    output: Path,
) -> None:
    """Generate a seeded instance from an edge list."""
    from netdefense.datasets import generate_instance, load_edge_list
    from netdefense.schemas import GenConfig
    from netdefense.services import save_instance

    with exit_on_error():
        cfg = GenConfig(seed=seed, isolated=isolated, uniform_theta=uniform_theta, resource_fraction=resource_frac)
        edges = load_edge_list(edges_path)
        inst = generate_instance(edges, cfg)
        save_instance(inst, output)
    if edges.self_loops:
        console.print(f"Dropped {edges.self_loops} self-loops.")
    console.print(f"Wrote {output} ({inst.node_count} nodes, {inst.edge_count} edges).")


@cli.group("gen-hard")
def gen_hard() -> None:
    """Hard instance families."""


@gen_hard.command("even-partition")
@click.argument("numbers", nargs=-1, type=float, required=True)
@click.option("-o", "--output", type=OUTPUT, required=True)
def gen_even_partition(numbers: tuple[float, ...], output: Path) -> None:
    """Isolated instance that reaches 0.5 exactly when NUMBERS split evenly."""
    from netdefense.oracle import gen_even_partition_instance
    from netdefense.services import save_instance

    with exit_on_error():
        save_instance(gen_even_partition_instance(numbers), output)
    console.print(f"Wrote {output}.")


@gen_hard.command("bipartite-gap")
@click.option("--beta", type=float, required=True, help="Gap parameter, greater than 1.")
@click.option("--resource", type=float, required=True)
@click.option("-o", "--output", type=OUTPUT, required=True)
def gen_bipartite_gap(beta: float, resource: float, output: Path) -> None:
    """Complete bipartite sharing instance with a fractional-to-mixed gap."""
    from netdefense.oracle import gen_bipartite_gap_instance
    from netdefense.services import save_instance

    with exit_on_error():
        inst = gen_bipartite_gap_instance(beta, resource)
        save_instance(inst, output)
    console.print(f"Wrote {output} ({inst.meta['left']} + {inst.meta['right']} nodes).")


@cli.command("bench")
@click.argument("instance_path", type=INSTANCE)
@click.option("--iters", "iterations", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", type=OUTPUT, required=True, help="Trace CSV path.")
@click.option("--with-rounding", is_flag=True, help="Add rows for the rounded mixed strategy.")
@click.option("--timing/--no-timing", default=True, show_default=True, help="Record wall-clock milliseconds.")
def bench(
    instance_path: Path,
    iterations: int,
    seed: int,
    output: Path,
    with_rounding: bool,
    timing: bool,
) -> None:
    """Patching convergence trace with reference optima."""
    from netdefense.services import bench_patching, load_instance, write_csv

    with exit_on_error():
        inst = load_instance(instance_path)
        rows = bench_patching(inst, iterations, seed, with_rounding=with_rounding, timing=timing)
        write_csv(rows, output)
    console.print(f"Wrote {output} ({len(rows) - 1} rows).")


if __name__ == "__main__":
    cli()
