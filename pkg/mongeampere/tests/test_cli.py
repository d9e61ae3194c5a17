import json

import pytest
from click.testing import CliRunner

from mongeampere import cli as cli_module
from mongeampere.cli import EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_VERIFY_FAILED, cli, main
from studies.verification import CheckResult

QUADRATIC = """
[domain]
levels = 2, 4, 8

[problem]
preset = quadratic
"""


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def quadratic_config(tmp_path):
    path = tmp_path / 'quadratic.ini'
    path.write_text(QUADRATIC, encoding='utf-8')
    return path


def invoke(runner, tmp_path, *args, config=None):
    options = ['--out', str(tmp_path / 'out')]
    if config is not None:
        options += ['--config', str(config)]
    return runner.invoke(cli, options + list(args))


def test_commands_are_registered():
    assert sorted(cli.commands) == ['solve', 'study', 'verify']


def test_verify(runner, tmp_path):
    result = invoke(runner, tmp_path, 'verify', '--n', '2', '--samples', '3')
    assert result.exit_code == 0, result.output
    assert 'all 11 properties passed' in result.output
    assert (tmp_path / 'out' / 'run.log').exists()


def test_invalid_configuration(runner, tmp_path):
    path = tmp_path / 'bad.ini'
    path.write_text('[solver]\ntol_residual = -1\n', encoding='utf-8')
    result = invoke(runner, tmp_path, 'verify', config=path)
    assert result.exit_code == 1
    assert 'solver.tol_residual' in result.output


def test_invalid_problem_data(runner, tmp_path):
    path = tmp_path / 'negative.ini'
    path.write_text('[problem]\nf = x - 1/2\ng = x\n', encoding='utf-8')
    result = invoke(runner, tmp_path, 'solve', '--n', '2', config=path)
    assert result.exit_code == 1


def test_solve_writes_outputs(runner, tmp_path, quadratic_config):
    result = invoke(runner, tmp_path, 'solve', '--summary', config=quadratic_config)
    assert result.exit_code == 0, result.output
    out = tmp_path / 'out'
    record = json.loads((out / 'solve.json').read_text(encoding='utf-8'))
    assert record['converged'] is True
    assert record['n'] == 2
    assert record['u_h1_error'] <= 1e-9
    assert len(record['residual_history']) == record['iterations'] + 1
    assert (out / 'solution.vtk').read_text().startswith('# vtk DataFile')


def test_unconverged_solve_exits_with_two(runner, tmp_path, quadratic_config):
    path = tmp_path / 'short.ini'
    path.write_text('[problem]\npreset = exponential\n[solver]\nmax_iterations = 1\n', encoding='utf-8')
    result = invoke(runner, tmp_path, 'solve', '--n', '2', config=path)
    assert result.exit_code == EXIT_NOT_CONVERGED
    assert (tmp_path / 'out' / 'solve.json').exists()


def test_study(runner, tmp_path, quadratic_config):
    result = invoke(runner, tmp_path, 'study', '--stem', 'quadratic', config=quadratic_config)
    assert result.exit_code == 0, result.output
    assert 'fit rates' in result.output
    lines = (tmp_path / 'out' / 'quadratic.csv').read_text().splitlines()
    assert len(lines) == 4
    assert lines[0].startswith('n,h,dofs_u,dofs_sigma')


def test_study_with_too_few_levels(runner, tmp_path):
    path = tmp_path / 'short.ini'
    path.write_text('[domain]\nlevels = 2, 4\n[problem]\npreset = quadratic\n', encoding='utf-8')
    result = invoke(runner, tmp_path, 'study', config=path)
    assert result.exit_code == 1
    assert 'domain.levels' in result.output


def test_threads_must_be_positive(runner, tmp_path):
    result = invoke(runner, tmp_path, '--threads', '0', 'verify')
    assert result.exit_code == EXIT_INVALID


@pytest.mark.parametrize('args', [('verify', '--n', 'abc'), ('solve', '--n', '0'), ('simulate',)])
def test_usage_errors_are_invalid_input(runner, tmp_path, args):
    result = invoke(runner, tmp_path, *args)
    assert result.exit_code == EXIT_INVALID


def test_failed_verification_exits_with_three(runner, tmp_path, monkeypatch):
    def failing(**kwargs):
        return [CheckResult('trace_identity', True, 0.0, 1e-11), CheckResult('embedding_identity', False, 1.0, 1e-11)]

    monkeypatch.setattr(cli_module, 'run_verification', failing)
    result = invoke(runner, tmp_path, 'verify')
    assert result.exit_code == EXIT_VERIFY_FAILED
    assert 'FAIL embedding_identity' in result.output


def test_main_returns_exit_code(tmp_path):
    assert main(['--out', str(tmp_path), '--threads', '0', 'verify'], standalone_mode=False) == EXIT_INVALID
