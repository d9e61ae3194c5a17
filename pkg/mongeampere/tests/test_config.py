import logging
from pathlib import Path

import pytest

from mongeampere import settings
from mongeampere.config import RunConfig
from mongeampere.exceptions import ConfigError
from nonlinear.models import Method

EXPRESSIONS = """
[domain]
polygon = 0, 0, 2, 0, 2, 1, 0, 1
levels = 4, 8, 16
degree = 3

[problem]
f = 1                 ; unit density
g = (x^2 + y^2)/2
exact = (x^2 + y^2)/2

[solver]
method = time_marching
nu = 1.5
tol_residual = 1e-9
max_iterations = 200

[output]
directory = out/run
threads = 2
vtk = no
"""


def test_defaults():
    config = RunConfig()
    assert config.preset == 'exponential'
    assert config.levels == (8, 16, 32, 64)
    assert config.solver.method is Method.NEWTON
    assert config.problem().is_manufactured


def test_parse_expressions():
    config = RunConfig.from_text(EXPRESSIONS)
    assert config.preset is None
    assert config.polygon == ((0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0))
    assert config.levels == (4, 8, 16)
    assert config.degree == 3
    assert config.f == '1'
    assert config.solver.method is Method.TIME_MARCHING
    assert config.solver.nu == 1.5
    assert config.solver.tol_residual == 1e-9
    assert config.solver.iteration_limit == 200
    assert config.directory == Path('out/run')
    assert config.threads == 2
    assert config.vtk is False
    assert config.domain.area == pytest.approx(2.0)
    assert config.problem().name == 'custom'


@pytest.mark.parametrize('text', ['', EXPRESSIONS, '[problem]\npreset = quadratic\n[solver]\ndamping = 0.5\n'])
def test_ini_round_trip(text):
    config = RunConfig.from_text(text)
    assert RunConfig.from_text(config.to_ini()) == config


@pytest.mark.parametrize('text, field', [
    ('[solver]\ntol_residual = -1\n', 'solver.tol_residual'),
    ('[solver]\ntol_increment = small\n', 'solver.tol_increment'),
    ('[solver]\nmethod = picard\n', 'solver.method'),
    ('[solver]\ntolerance = 1\n', 'solver.tolerance'),
    ('[mesh]\nn = 4\n', 'mesh'),
    ('[domain]\nlevels = 4, x\n', 'domain.levels'),
    ('[domain]\nlevels = 0, 4\n', 'domain.levels'),
    ('[domain]\nlevels =\n', 'domain.levels'),
    ('[domain]\npolygon =\n', 'domain.polygon'),
    ('[solver]\ntol_residual = 0\n', 'solver.tol_residual'),
    ('[domain]\ndegree = 1\n', 'domain.degree'),
    ('[domain]\npolygon = 0, 0, 1, 0, 1\n', 'domain.polygon'),
    ('[domain]\npolygon = 0, 0, 1, 0, 0, 1\n', 'domain.polygon'),
    ('[domain]\npolygon = 0, 0, 0, 1, 1, 1, 1, 0\n', 'domain.polygon'),
    ('[problem]\npreset = gaussian\n', 'problem.preset'),
    ('[problem]\npreset = quadratic\nf = 1\ng = x\n', 'problem.preset'),
    ('[problem]\nf = 1\n', 'problem.g'),
    ('[output]\nthreads = 0\n', 'output.threads'),
    ('[output]\nvtk = maybe\n', 'output.vtk'),
    ('no section header\n', 'file'),
])
def test_invalid_files_name_the_key(text, field):
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_text(text)
    assert excinfo.value.field == field


def test_bad_expressions_surface_when_building_the_problem():
    config = RunConfig.from_text('[problem]\nf = sin(x)\ng = x\n')
    with pytest.raises(ConfigError) as excinfo:
        config.problem()
    assert excinfo.value.field == 'problem.f'


def test_load(tmp_path):
    path = tmp_path / 'run.ini'
    path.write_text(EXPRESSIONS, encoding='utf-8')
    assert RunConfig.load(path) == RunConfig.from_text(EXPRESSIONS)
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.load(tmp_path / 'missing.ini')
    assert excinfo.value.field == 'file'


def test_overrides():
    config = RunConfig()
    assert config.with_overrides() is config
    changed = config.with_overrides(directory='elsewhere', threads=4)
    assert changed.directory == Path('elsewhere')
    assert changed.threads == 4
    assert changed.solver == config.solver


def test_configure_logging_with_file(tmp_path):
    logfile = tmp_path / 'run.log'
    settings.configure_logging('debug', logfile=logfile)
    try:
        logging.getLogger('fem.test').debug("level=%s", 'debug')
        root = logging.getLogger()
        assert root.level == logging.DEBUG
        for handler in root.handlers:
            handler.flush()
        assert 'logger=fem.test level=debug' in logfile.read_text()
    finally:
        settings.configure_logging()
