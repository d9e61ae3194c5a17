"""
Command-line interface: ``solve``, ``study`` and ``verify``.

Exit codes are 0 on success, 1 for invalid input (including usage errors),
2 when a solve does not converge and 3 when verification fails.
"""
import functools
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import click

from fem.forms import assemble_mixed_operators
from fem.mesh import build_structured_mesh
from fem.spaces import LagrangeSpace
from mongeampere import __version__, settings
from mongeampere.config import RunConfig
from mongeampere.exceptions import (ConfigError, ConvergenceError, FieldEvaluationError, InvalidProblemError,
                                    LinearSolveError, MeshError, NonConvexIterateError, QuadratureError,
                                    StudyAbortedError)
from nonlinear.solver import MongeAmpereSolver
from studies.norms import error_norm
from studies.reports import atomic_write_text
from studies.study import run_convergence_study
from studies.verification import run_verification
from studies.vtk import export_vtk

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2
EXIT_VERIFY_FAILED = 3

INVALID_INPUT = (ConfigError, InvalidProblemError, MeshError, QuadratureError, FieldEvaluationError)
SOLVE_FAILURES = (ConvergenceError, StudyAbortedError, NonConvexIterateError, LinearSolveError)

LOG_LEVELS = click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False)


@dataclass
class RunContext:
    """Resolved run configuration shared by every subcommand."""
    config: RunConfig
    config_path: Path | None = None

    @property
    def output_dir(self) -> Path:
        return Path(self.config.directory)


class RunGroup(click.Group):
    """Click group whose subcommands return exit codes; usage errors count as invalid input."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            code = super().main(args=args, prog_name=prog_name, complete_var=complete_var,
                                standalone_mode=False, **extra)
        except click.ClickException as exc:
            exc.show()
            code = EXIT_INVALID
        except click.Abort:
            click.echo('Aborted!', err=True)
            code = EXIT_INVALID
        code = EXIT_OK if code is None else code
        if standalone_mode:
            raise SystemExit(code)
        return code


def exit_codes(handler):
    """Turn the domain exception families into exit codes 1 and 2."""

    @functools.wraps(handler)
    def wrapper(*args, **kwargs):
        try:
            return handler(*args, **kwargs)
        except INVALID_INPUT as exc:
            logger.error("invalid input: %s", exc)
            click.echo(f"error: {exc}", err=True)
            return EXIT_INVALID
        except SOLVE_FAILURES as exc:
            logger.error("solve failed: %s", exc)
            click.echo(f"error: {exc}", err=True)
            return EXIT_NOT_CONVERGED
    return wrapper


@click.group(cls=RunGroup, help='Mixed finite element solver for the Monge-Ampere equation.')
@click.version_option(__version__)
@click.option('--config', 'config_path', type=click.Path(dir_okay=False, path_type=Path), default=None,
              help='Run configuration (INI).')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False, path_type=Path), default=None,
              help='Output directory (overrides [output] directory).')
@click.option('--threads', type=click.IntRange(min=1), default=None,
              help='Worker threads for assembly and study levels.')
@click.option('--log-level', type=LOG_LEVELS, default=None, help='Logging level.')
@click.pass_context
def cli(ctx, config_path, out_dir, threads, log_level):
    try:
        config = RunConfig.load(config_path) if config_path else RunConfig()
        config = config.with_overrides(directory=out_dir, threads=threads)
    except ConfigError as exc:
        raise click.UsageError(str(exc), ctx) from exc
    config.directory.mkdir(parents=True, exist_ok=True)
    settings.configure_logging(log_level or settings.LOG_LEVEL, logfile=config.directory / 'run.log')
    logger.debug("configuration:\n%s", config.to_ini())
    ctx.obj = RunContext(config, config_path)


@cli.command(help='Solve one problem on one mesh and write the solution fields.')
@click.option('--n', type=click.IntRange(min=1), default=None,
              help='Mesh resolution (defaults to the first configured level).')
@click.option('--summary', is_flag=True, help='Print mesh and space statistics before solving.')
@click.pass_obj
@exit_codes
def solve(context: RunContext, n, summary):
    config = context.config
    n = config.levels[0] if n is None else n
    problem = config.problem()
    space = LagrangeSpace(build_structured_mesh(n, config.domain), config.degree)
    if summary:
        for key, value in space.summary().items():
            click.echo(f"{key:>18s}: {value}")

    ops = assemble_mixed_operators(space, threads=config.threads)
    result = MongeAmpereSolver(problem, space, config.solver, ops=ops).solve()

    record = {
        'problem': problem.describe(),
        'n': n,
        'degree': config.degree,
        'solver': config.solver.as_dict(),
        **result.summary(),
        'residual_history': result.residual_history,
        'increment_history': result.increment_history,
        'nu_history': result.nu_history,
    }
    if problem.exact is not None:
        record['u_h1_error'] = error_norm(result.u, problem.exact, 'H1')
    out = context.output_dir
    atomic_write_text(out / 'solve.json', json.dumps(record, indent=2) + '\n')
    if config.vtk:
        export_vtk(out / 'solution.vtk', result.u, result.sigma)

    click.echo(f"{'converged' if result.converged else 'not converged'}: "
               f"{result.iterations} iterations, residual {result.final_residual:.3e}")
    if not result.converged:
        raise ConvergenceError(result.message, result)
    return EXIT_OK


@cli.command(help='Run a convergence study over the configured mesh levels and write CSV/JSON reports.')
@click.option('--stem', default='report', show_default=True, help='File name stem of the reports.')
@click.pass_obj
@exit_codes
def study(context: RunContext, stem):
    config = context.config
    problem = config.problem()
    try:
        report = run_convergence_study(problem, config.levels, config.degree, config.solver,
                                       polygon=config.domain, threads=config.threads)
    except StudyAbortedError as exc:
        if exc.report is not None and exc.report.levels:
            exc.report.write(context.output_dir, f"{stem}.partial")
        raise
    report.write(context.output_dir, stem)
    click.echo(report.table())
    return EXIT_OK


@cli.command(help='Run the built-in invariant suite and report pass/fail per property.')
@click.option('--n', type=click.IntRange(min=1), default=4, show_default=True, help='Mesh resolution.')
@click.option('--samples', type=click.IntRange(min=1), default=50, show_default=True,
              help='Random fields per check.')
@click.option('--seed', type=int, default=0, show_default=True)
@click.pass_obj
@exit_codes
def verify(context: RunContext, n, samples, seed):
    results = run_verification(n=n, degree=context.config.degree, samples=samples, seed=seed)
    for result in results:
        click.echo(str(result))
    failed = [r.name for r in results if not r.passed]
    if failed:
        click.echo(f"failed properties: {', '.join(failed)}", err=True)
        return EXIT_VERIFY_FAILED
    click.echo(f"all {len(results)} properties passed")
    return EXIT_OK


def main(argv=None, standalone_mode=True):
    return cli.main(args=argv, prog_name='manage.py', standalone_mode=standalone_mode)
