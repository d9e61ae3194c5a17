import pytest

from mongeampere.exceptions import ConfigError, InvalidProblemError, StudyAbortedError
from nonlinear.models import Method, SolverConfig
from nonlinear.problems import from_expressions
from studies.reports import ERROR_COLUMNS
from studies.study import check_levels, run_convergence_study, solve_level


@pytest.mark.parametrize('levels', [(4, 8), (4, 8, 12), (8, 4, 2), ()])
def test_level_sequences_are_checked(levels):
    with pytest.raises(ConfigError) as excinfo:
        check_levels(levels)
    assert excinfo.value.field == 'domain.levels'


def test_level_sequence_accepted():
    assert check_levels(('2', 4, 8.0)) == [2, 4, 8]


def test_study_needs_exact_solution():
    with pytest.raises(InvalidProblemError):
        run_convergence_study(from_expressions('1', '(x^2 + y^2)/2'), (2, 4, 8))


def test_single_level_record(exponential):
    record, result = solve_level(exponential, 4, 2, SolverConfig())
    assert result.converged
    assert record.n == 4
    assert record.dofs_sigma == 3 * record.dofs_u == 3 * 81
    assert all(getattr(record, c) > 0.0 for c in ERROR_COLUMNS)


def test_quadratic_study_is_exact(quadratic):
    report = run_convergence_study(quadratic, (2, 4, 8))
    assert [r.n for r in report.levels] == [2, 4, 8]
    for column in ERROR_COLUMNS:
        assert max(report.column(column)) <= 1e-9


def test_threaded_study_matches_serial(quadratic):
    serial = run_convergence_study(quadratic, (2, 4, 8))
    threaded = run_convergence_study(quadratic, (2, 4, 8), threads=3)
    assert threaded.to_csv() == serial.to_csv()


def test_unconverged_level_aborts(exponential):
    config = SolverConfig(max_iterations=1, tol_increment=1e-30, tol_residual=1e-30)
    with pytest.raises(StudyAbortedError) as excinfo:
        run_convergence_study(exponential, (2, 4, 8), config=config)
    assert 'n=2' in str(excinfo.value)
    assert excinfo.value.report.levels == []


@pytest.mark.slow
def test_exponential_rates(exponential):
    report = run_convergence_study(exponential, (8, 16, 32, 64))
    assert report.fit_rate('u_h1_interp') >= 1.7
    assert report.fit_rate('sigma_l2_interp') >= 0.8
    assert report.fit_rate('hessian_interp_l2') >= 0.8
    assert all(r.converged for r in report.levels)


@pytest.mark.slow
def test_time_marching_study(exponential):
    config = SolverConfig(method=Method.TIME_MARCHING, max_iterations=3000)
    report = run_convergence_study(exponential, (4, 8, 16), config=config)
    assert report.method == 'time_marching'
    assert report.fit_rate('u_h1_interp') >= 1.7


@pytest.mark.slow
def test_study_is_deterministic(exponential):
    first = run_convergence_study(exponential, (8, 16, 32, 64))
    second = run_convergence_study(exponential, (8, 16, 32, 64))
    assert first.to_csv() == second.to_csv()
