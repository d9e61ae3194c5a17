import numpy as np
import pytest

from fem.spaces import MatrixField, ScalarField
from mongeampere.exceptions import ConfigError
from nonlinear.models import InitialGuess, Method, SolverConfig, SolveResult


def test_defaults():
    config = SolverConfig()
    assert config.method is Method.NEWTON
    assert config.initial_guess is InitialGuess.POISSON_SQRT_F
    assert config.auto_nu
    assert config.iteration_limit == 25
    assert SolverConfig(method='time_marching').iteration_limit == 500
    assert SolverConfig(max_iterations=7).iteration_limit == 7


def test_strings_are_coerced():
    config = SolverConfig(method='time_marching', nu='2.5', initial_guess='interpolant_of_exact')
    assert config.method is Method.TIME_MARCHING
    assert config.nu == 2.5
    assert not config.auto_nu
    assert config.as_dict()['initial_guess'] == 'interpolant_of_exact'


@pytest.mark.parametrize('kwargs, field', [
    ({'tol_residual': -1.0}, 'solver.tol_residual'),
    ({'tol_increment': float('nan')}, 'solver.tol_increment'),
    ({'tol_residual': 0.0}, 'solver.tol_residual'),
    ({'tol_increment': 0.0}, 'solver.tol_increment'),
    ({'method': 'picard'}, 'solver.method'),
    ({'initial_guess': 'zero'}, 'solver.initial_guess'),
    ({'nu': 0.0}, 'solver.nu'),
    ({'nu': 'fast'}, 'solver.nu'),
    ({'max_iterations': 0}, 'solver.max_iterations'),
    ({'damping': 0.0}, 'solver.damping'),
    ({'damping': 1.5}, 'solver.damping'),
    ({'perturbation': float('inf')}, 'solver.perturbation'),
    ({'nu_refresh': 0}, 'solver.nu_refresh'),
])
def test_invalid_values_name_their_field(kwargs, field):
    with pytest.raises(ConfigError) as excinfo:
        SolverConfig(**kwargs)
    assert excinfo.value.field == field
    assert str(excinfo.value).startswith(field)


def test_result_histories(space4):
    result = SolveResult(ScalarField(space4), MatrixField(space4), 3, True, Method.TIME_MARCHING,
                         residual_history=[1.0, 0.5, 0.25, 0.125], increment_history=[0.4, 0.2, 0.1])
    assert result.final_residual == 0.125
    assert result.final_increment == 0.1
    assert np.allclose(result.contraction_factors, [0.5, 0.5])
    assert result.summary()['method'] == 'time_marching'


def test_empty_result_histories(space4):
    result = SolveResult(ScalarField(space4), MatrixField(space4), 0, False, Method.NEWTON)
    assert np.isnan(result.final_residual)
    assert result.contraction_factors.size == 0
