import logging
import time
from concurrent.futures import ThreadPoolExecutor

from fem.forms import assemble_mixed_operators
from fem.hessian import discrete_hessian
from fem.mesh import UNIT_SQUARE, Polygon, build_structured_mesh
from fem.spaces import LagrangeSpace, interpolate, interpolate_matrix
from mongeampere.exceptions import ConfigError, InvalidProblemError, MongeAmpereError, StudyAbortedError
from nonlinear.models import Problem, SolverConfig
from nonlinear.solver import solve
from studies.norms import error_norm, matrix_error_norm
from studies.reports import ConvergenceReport, LevelRecord

logger = logging.getLogger(__name__)

MIN_LEVELS = 3


def check_levels(levels) -> list:
    levels = [int(n) for n in levels]
    if len(levels) < MIN_LEVELS:
        raise ConfigError('domain.levels', f"a study needs at least {MIN_LEVELS} levels, got {len(levels)}")
    for coarse, fine in zip(levels, levels[1:]):
        if fine != 2 * coarse:
            raise ConfigError('domain.levels', f"consecutive levels must halve h, got n={coarse} then n={fine}")
    return levels


def solve_level(problem: Problem, n: int, degree: int, config: SolverConfig,
                polygon: Polygon = UNIT_SQUARE) -> tuple:
    """One mesh level: solve, then measure every report column. Returns (record, result)."""
    started = time.perf_counter()
    mesh = build_structured_mesh(n, polygon)
    space = LagrangeSpace(mesh, degree)
    ops = assemble_mixed_operators(space)
    result = solve(problem, space, config, ops=ops)

    exact = problem.exact
    u_interp = interpolate(exact, space)
    sigma_interp = interpolate_matrix(exact.hessian_matrix_function(), space)
    record = LevelRecord(
        n=n,
        h=mesh.h,
        dofs_u=space.n_dofs,
        dofs_sigma=3 * space.n_dofs,
        u_h1_interp=error_norm(result.u - u_interp, None, 'H1'),
        u_l2=error_norm(result.u, exact, 'L2'),
        sigma_l2_interp=matrix_error_norm(result.sigma - sigma_interp, None, 'L2'),
        sigma_l2=matrix_error_norm(result.sigma, exact, 'L2'),
        hessian_interp_l2=matrix_error_norm(discrete_hessian(u_interp, ops) - sigma_interp, None, 'L2'),
        sigma_broken_h1=matrix_error_norm(result.sigma, exact, 'brokenH1'),
        iterations=result.iterations,
        converged=result.converged,
        wall_time=time.perf_counter() - started,
    )
    logger.info("level n=%d h=%.4e dofs=%d iterations=%d u_h1_interp=%.4e sigma_l2_interp=%.4e",
                n, record.h, record.dofs_u, record.iterations, record.u_h1_interp, record.sigma_l2_interp)
    return record, result


def run_convergence_study(problem: Problem, levels, degree: int = 2, config: SolverConfig | None = None,
                          polygon: Polygon = UNIT_SQUARE, threads: int = 1) -> ConvergenceReport:
    """
    Solve ``problem`` on each structured level and collect errors and rates.

    Levels may be solved concurrently (``threads > 1``); records are merged in
    level order. A level that fails or does not converge aborts the study with
    the levels before it.
    """
    if not problem.is_manufactured:
        raise InvalidProblemError(f"problem {problem.name!r} has no exact solution to measure errors against")
    levels = check_levels(levels)
    config = SolverConfig() if config is None else config
    report = ConvergenceReport(problem.name, degree, config.method.value)

    def run(n):
        try:
            return solve_level(problem, n, degree, config, polygon), None
        except MongeAmpereError as exc:
            return None, exc

    workers = max(1, min(threads, len(levels)))
    if workers == 1:
        outcomes = map(run, levels)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        outcomes = pool.map(run, levels)
    try:
        for n, (outcome, error) in zip(levels, outcomes):
            if error is not None:
                raise StudyAbortedError(f"level n={n} failed: {error}", report) from error
            record, result = outcome
            if not result.converged:
                raise StudyAbortedError(f"level n={n} did not converge: {result.message}", report)
            report.add(record)
    finally:
        if workers > 1:
            pool.shutdown(wait=True, cancel_futures=True)
    for column in ('u_h1_interp', 'sigma_l2_interp'):
        logger.info("study %s fit rate %s=%s", problem.name, column, report.fit_rate(column))
    return report
