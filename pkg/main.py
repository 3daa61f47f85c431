"""
Main application module for the switched-system realization toolkit.

Provides the CLI using Click and ties the library together: simulation,
Markov-parameter extraction, Hankel matrices, rank tests, minimization,
realization from data, and isomorphism checks.

Exit codes: 0 on success, 1 on usage or file-format errors, 2 when a
computation fails its validation or hypothesis checks.
"""

import dataclasses
import logging
import sys
from pathlib import Path
from typing import Optional

import click

from src.config.config_loader import ToleranceProfile, get_limit, get_profile, list_available_profiles
from src.core import catalog
from src.core.errors import HankelSizeError, NotIsomorphicError, RealizationError, SchemaError
from src.core.exporter import ResultExporter
from src.core.hankel import build_hankel, hankel_rank, rank_profile, stabilization_depth, word_count
from src.core.lss import io_map, simulate_trajectory
from src.core.markov import MarkovFamily, check_gcr, extract_markov
from src.core.parser import load_dataset, load_hankel, load_inputs, load_markov, load_system, looks_like_hankel
from src.core.realization import (
    algorithm_1,
    is_minimal,
    lss_isomorphism,
    markov_residual,
    minimize_lss,
    observability_rank,
    reachability_rank,
    reduce_lss,
)
from src.utils.ui_helpers import (
    console,
    format_vector,
    print_error,
    print_info,
    print_matrix,
    print_report_table,
    print_singular_values,
    print_success,
    print_tolerances,
    print_warning,
    yes_no,
)
from src.utils.validator import build_hybrid_word, parse_dims, parse_switching

# Configure logging
logging.basicConfig(
    level=logging.WARNING,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_FAILED_CHECK = 2


class RealizationGroup(click.Group):
    """Click group mapping library errors to the toolkit's exit codes."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        if not standalone_mode:
            return super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        try:
            result = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            print_error("Aborted")
            sys.exit(EXIT_USAGE)
        except SchemaError as e:
            print_error(f"Invalid input file: {e}")
            sys.exit(EXIT_USAGE)
        except RealizationError as e:
            residual = getattr(e, 'residual', None)
            suffix = f" (residual {residual:.3e})" if isinstance(residual, float) else ""
            print_error(f"{e}{suffix}")
            sys.exit(EXIT_FAILED_CHECK)
        except OSError as e:
            print_error(str(e))
            sys.exit(EXIT_USAGE)
        sys.exit(result if isinstance(result, int) else 0)


def _tolerances(ctx: click.Context) -> ToleranceProfile:
    return ctx.obj['tolerances']


def _report_written(exporter: ResultExporter, what: str, path: str):
    size = exporter.get_file_size(path)
    suffix = f" ({size:,} bytes)" if size is not None else ""
    print_success(f"{what} written to {path}{suffix}")


def _validation_depth(D: int, n: int, limit: int) -> int:
    """2n+1, lowered until the number of words fits within ``limit``."""
    depth = 2 * n + 1
    while depth > 1 and word_count(D, depth) > limit:
        depth -= 1
    return depth


@click.group(cls=RealizationGroup)
@click.option('--profile', '-p', default=None,
              help='Tolerance profile from config/settings.yaml (standard, strict, loose)')
@click.option('--rank-tol', type=float, default=None, help='Relative rank tolerance (overrides the profile)')
@click.option('--gcr-tol', type=float, default=None, help='Absolute convolution-check tolerance')
@click.option('--morphism-tol', type=float, default=None, help='Relative morphism residual tolerance')
@click.option('--validation-tol', type=float, default=None, help='Relative realization validation tolerance')
@click.option('--verbose', '-v', is_flag=True, help='Verbose output')
@click.pass_context
def cli(ctx, profile, rank_tol, gcr_tol, morphism_tol, validation_tol, verbose):
    """Switched linear systems: Markov parameters, Hankel matrices and minimal realizations"""
    if verbose:
        logging.getLogger().setLevel(logging.INFO)

    try:
        tolerances = get_profile(profile)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint='--profile')

    overrides = {
        'rank_tol': rank_tol,
        'gcr_tol': gcr_tol,
        'morphism_tol': morphism_tol,
        'validation_tol': validation_tol,
    }
    tolerances = dataclasses.replace(tolerances, **{k: v for k, v in overrides.items() if v is not None})
    ctx.obj = {'tolerances': tolerances, 'verbose': verbose, 'exporter': ResultExporter()}
    logger.info(f"Using tolerance profile '{tolerances.name}': {tolerances.as_dict()}")


@cli.command()
@click.argument('system_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--word', '-w', required=True, help='Switching sequence, e.g. 1,2,2')
@click.option('--inputs', '-u', 'inputs_file', type=click.Path(exists=True, dir_okay=False),
              help='CSV of per-step inputs (one row per step); zero inputs when omitted')
def simulate(system_file, word, inputs_file):
    """Print the output at every step of a hybrid input word"""
    system = load_system(system_file)
    try:
        modes = parse_switching(word, system.D)
        inputs = load_inputs(inputs_file, system.m) if inputs_file else None
        hybrid = build_hybrid_word(modes, inputs, system.m)
    except ValueError as e:
        raise click.BadParameter(str(e))

    outputs = simulate_trajectory(system, system.x0, hybrid)
    rows = [
        (str(t), str(q), format_vector(y))
        for t, (q, y) in enumerate(zip(hybrid.modes, outputs))
    ]
    print_report_table(f"Simulation of {system!r}", rows, ["step", "mode", "output"])


@cli.command()
@click.argument('system_file', required=False, type=click.Path(exists=True, dir_okay=False))
@click.option('--dataset', '-d', type=click.Path(exists=True, dir_okay=False),
              help='Recorded experiments instead of a system file')
@click.option('--depth', '-L', type=int, default=None,
              help='Longest word covered (default 2n+1 for a system; required for a dataset)')
@click.option('--output', '-o', default=None, help='Write the Markov table to this file')
@click.option('--gcr', is_flag=True, help='Also run the convolution-representation falsifier')
@click.option('--progress', is_flag=True, help='Show a progress bar')
@click.pass_context
def markov(ctx, system_file, dataset, depth, output, gcr, progress):
    """Extract the Markov parameters of a system or of recorded experiments"""
    tolerances = _tolerances(ctx)
    if bool(system_file) == bool(dataset):
        raise click.UsageError("Give exactly one of SYSTEM_FILE or --dataset")

    if system_file:
        system = load_system(system_file)
        oracle = io_map(system)
        depth = depth if depth is not None else 2 * system.n + 1
    else:
        if depth is None:
            raise click.UsageError("--depth is required with --dataset")
        oracle = load_dataset(dataset)
    if depth < 1:
        raise click.BadParameter("depth must be ≥ 1", param_hint='--depth')

    table = extract_markov(oracle, depth, progress=progress)
    exporter: ResultExporter = ctx.obj['exporter']

    if gcr:
        report = check_gcr(oracle, table, depth, tol=tolerances.gcr_tol,
                           max_experiments=get_limit('gcr_max_experiments'))
        line = f"Convolution check: {yes_no(report.holds)} over {report.experiments} experiments, " \
               f"max residual {report.max_residual:.3e}"
        (print_success if report.holds else print_warning)(line)

    if output:
        _report_written(exporter, f"Markov table of depth {depth}", exporter.export_markov(table, output))
    else:
        for line in exporter.markov_lines(table):
            click.echo(line)


@cli.command()
@click.argument('markov_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--L', 'row_depth', type=int, required=True, help='Longest row word')
@click.option('--M', 'col_depth', type=int, required=True, help='Longest column word')
@click.option('--rank', 'show_rank', is_flag=True, help='Print the numerical rank and singular values')
@click.option('--tol', type=float, default=None, help='Relative rank tolerance for --rank')
@click.option('--output', '-o', default=None, help='Write the matrix CSV (plus _index.csv sidecar)')
@click.option('--xlsx', default=None, help='Also write a labelled Excel workbook')
@click.option('--progress', is_flag=True, help='Show a progress bar')
@click.pass_context
def hankel(ctx, markov_file, row_depth, col_depth, show_rank, tol, output, xlsx, progress):
    """Assemble the finite Hankel matrix H_{L,M} from a Markov table"""
    tolerances = _tolerances(ctx)
    rank_tol = tol if tol is not None else tolerances.rank_tol
    table = load_markov(markov_file)
    matrix = build_hankel(table, row_depth, col_depth, get_limit('hankel_max_entries'), progress=progress)
    print_info(f"H_{{{row_depth},{col_depth}}} has shape {matrix.shape[0]}x{matrix.shape[1]}")

    exporter: ResultExporter = ctx.obj['exporter']
    if output:
        paths = exporter.export_hankel_csv(matrix, output)
        _report_written(exporter, "Hankel matrix", paths['matrix'])
        _report_written(exporter, "Hankel index", paths['index'])
    if xlsx:
        _report_written(exporter, "Workbook", exporter.export_hankel_xlsx(matrix, xlsx))

    if show_rank:
        decision = hankel_rank(matrix, rank_tol, tolerances.ambiguity_factor)
        console.print(f"rank: {decision.rank}", style="bold")
        print_singular_values(decision.singular_values, decision.threshold)
        if decision.ambiguous:
            print_warning("A singular value lies close to the threshold; the rank decision is fragile")
        print_tolerances({'rank_tol': rank_tol, 'ambiguity_factor': tolerances.ambiguity_factor})


def _print_rank_line(label: str, decision, n: int):
    verdict = yes_no(n == 0 or decision.rank == n)
    console.print(f"{label}: {verdict} (rank {decision.rank} of {n})", style="bold")
    print_singular_values(decision.singular_values, decision.threshold)
    if decision.ambiguous:
        print_warning(f"{label} rank decision is close to the threshold")


@cli.command()
@click.argument('system_file', type=click.Path(exists=True, dir_okay=False))
@click.pass_context
def check(ctx, system_file):
    """Span-reachability, observability and minimality report"""
    tolerances = _tolerances(ctx)
    system = load_system(system_file)
    console.print(f"{system!r}", style="cyan")

    reach = reachability_rank(system, tolerances.rank_tol, tolerances.ambiguity_factor)
    obs = observability_rank(system, tolerances.rank_tol, tolerances.ambiguity_factor)
    _print_rank_line("span-reachable", reach, system.n)
    _print_rank_line("observable", obs, system.n)
    minimal = (system.n == 0) or (reach.rank == system.n and obs.rank == system.n)
    console.print(f"minimal: {yes_no(minimal)}", style="bold")

    try:
        depth = system.n
        matrix = build_hankel(MarkovFamily.from_system(system), depth, depth, get_limit('hankel_max_entries'))
        decision = hankel_rank(matrix, tolerances.rank_tol, tolerances.ambiguity_factor)
        console.print(f"Hankel rank of the input-output map (H_{{{depth},{depth}}}): {decision.rank}",
                      style="bold")
    except HankelSizeError as e:
        print_warning(f"Hankel rank skipped: {e}")

    print_tolerances({'rank_tol': tolerances.rank_tol, 'ambiguity_factor': tolerances.ambiguity_factor})


@cli.command()
@click.argument('system_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--output', '-o', default=None, help='Write the minimal system as JSON')
@click.option('--morphism', default=None, help='Write the morphism matrix as CSV')
@click.pass_context
def minimize(ctx, system_file, output, morphism):
    """Minimal realization of a system's input-output map"""
    tolerances = _tolerances(ctx)
    system = load_system(system_file)
    reduction = reduce_lss(system, tolerances.rank_tol, tolerances.morphism_tol)
    minimal = reduction.system
    print_success(f"Minimal dimension: {minimal.n} (from {system.n}; reachable part {reduction.reachable.n})")

    direct = reduction.direct_morphism()
    if direct is not None:
        direction = "minimal → original" if reduction.reachable.n == minimal.n else "original → minimal"
        print_matrix(f"Morphism ({direction})", direct.T)
        line = f"Morphism residual: {direct.report.max_residual:.3e}"
        (print_info if direct.report.holds else print_warning)(line)
        matrix_to_write = direct.T
    else:
        print_matrix("Embedding (reachable part → original)", reduction.embedding.T)
        print_matrix("Quotient (reachable part → minimal)", reduction.quotient.T)
        matrix_to_write = reduction.quotient.T

    depth = _validation_depth(system.D, system.n, get_limit('oracle_max_words'))
    reference = MarkovFamily.from_system(system).truncate(depth)
    residual = markov_residual(minimal, reference, depth)
    line = f"I/O preservation residual (Markov parameters up to length {depth}): {residual:.3e}"
    (print_success if residual <= tolerances.validation_tol else print_warning)(line)
    print_tolerances({'rank_tol': tolerances.rank_tol, 'morphism_tol': tolerances.morphism_tol,
                      'validation_tol': tolerances.validation_tol})

    exporter: ResultExporter = ctx.obj['exporter']
    if output:
        _report_written(exporter, "Minimal system", exporter.export_system(minimal, output))
    if morphism:
        _report_written(exporter, "Morphism", exporter.export_matrix_csv(matrix_to_write, morphism))


@cli.command()
@click.argument('source_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--N', 'depth', type=int, required=True, help='Row depth N of H_{N,N+1}')
@click.option('--dims', required=True, help='D,m,p of the system to realize')
@click.option('--output', '-o', default=None, help='Write the realized system as JSON')
@click.pass_context
def realize(ctx, source_file, depth, dims, output):
    """Minimal realization from a Markov table or Hankel CSV"""
    tolerances = _tolerances(ctx)
    try:
        dims = parse_dims(dims)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint='--dims')
    if depth < 0:
        raise click.BadParameter("N must be ≥ 0", param_hint='--N')

    table: Optional[MarkovFamily] = None
    if looks_like_hankel(source_file):
        matrix = load_hankel(source_file, dims)
        if (matrix.row_depth, matrix.col_depth) != (depth, depth + 1):
            matrix = matrix.submatrix(depth, depth + 1)
    else:
        table = load_markov(source_file)
        if (table.D, table.m, table.p) != dims:
            raise click.BadParameter(
                f"Markov table has dims {table.D},{table.m},{table.p}", param_hint='--dims'
            )
        matrix = build_hankel(table, depth, depth + 1, get_limit('hankel_max_entries'))
        profile_depth = min(depth, (table.depth - 2) // 2)
        if profile_depth >= 1:
            profile = rank_profile(table, profile_depth, tolerances.rank_tol)
            print_info("Rank profile: " + ", ".join(f"H_{{{k},{k}}}={r}" for k, r in profile))
            if stabilization_depth(profile) is None:
                print_warning("The rank is still growing at the largest depth checked")

    result = algorithm_1(matrix, dims, tolerances.rank_tol, tolerances.validation_tol, markov=table,
                         ambiguity_factor=tolerances.ambiguity_factor)
    print_success(f"Realized a system of dimension {result.dimension}")
    print_singular_values(result.rank.singular_values, result.rank.threshold)
    print_info(f"Validation residual: {result.residual:.3e}")
    print_tolerances(result.tolerances)

    if output:
        exporter: ResultExporter = ctx.obj['exporter']
        _report_written(exporter, "System", exporter.export_system(result.system, output))


@cli.command()
@click.argument('first_file', type=click.Path(exists=True, dir_okay=False))
@click.argument('second_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--depth', type=int, default=None, help='Markov depth for the I/O residual (default 2n+1)')
@click.pass_context
def compare(ctx, first_file, second_file, depth):
    """Isomorphism between two systems, with their finite-depth I/O residual"""
    tolerances = _tolerances(ctx)
    first = load_system(first_file)
    second = load_system(second_file)
    if first.dims != second.dims:
        raise NotIsomorphicError(f"Systems differ in (D, m, p): {first.dims} vs {second.dims}")

    n = max(first.n, second.n)
    depth = depth if depth is not None else _validation_depth(first.D, n, get_limit('oracle_max_words'))
    residual = markov_residual(second, MarkovFamily.from_system(first).truncate(depth), depth)
    line = f"I/O residual (Markov parameters up to length {depth}): {residual:.3e}"
    (print_success if residual <= tolerances.validation_tol else print_warning)(line)

    candidates = []
    for label, system in (("first", first), ("second", second)):
        if not is_minimal(system, tolerances.rank_tol):
            print_warning(f"The {label} system is not minimal; comparing its minimal realization")
            system = minimize_lss(system, tolerances.rank_tol)
        candidates.append(system)

    morphism = lss_isomorphism(candidates[0], candidates[1], tolerances.morphism_tol)
    print_success(f"Isomorphic (max residual {morphism.report.max_residual:.3e})")
    print_matrix("T", morphism.T)
    print_tolerances({'rank_tol': tolerances.rank_tol, 'morphism_tol': tolerances.morphism_tol,
                      'validation_tol': tolerances.validation_tol})


@cli.command()
@click.argument('name', type=click.Choice(sorted(catalog.CATALOG)))
@click.option('--output-dir', '-o', default='fixtures', help='Directory for the generated files')
@click.option('--depth', type=int, default=8, help='Markov depth for rank-two-series')
def examples(name, output_dir, depth):
    """Write the golden example systems or Markov data"""
    exporter = ResultExporter(output_dir)
    target = Path(output_dir)
    if name == 'reachability-gap':
        written = [
            exporter.export_system(catalog.reachability_gap_system(), str(target / 'reachability_gap.json')),
            exporter.export_system(catalog.reachability_gap_minimal(), str(target / 'reachability_gap_min.json')),
        ]
    else:
        written = [exporter.export_markov(catalog.rank_two_markov(depth), str(target / 'rank_two_markov.txt'))]
    for path in written:
        _report_written(exporter, Path(path).name, path)


@cli.command()
def profiles():
    """List available tolerance profiles"""
    print_info("Available tolerance profiles:")
    for name, description in list_available_profiles().items():
        values = get_profile(name).as_dict()
        console.print(f"  [bold]{name}[/bold]: {description}")
        console.print("    " + ", ".join(f"{k}={v:g}" for k, v in values.items()), style="dim")


if __name__ == '__main__':
    cli()
