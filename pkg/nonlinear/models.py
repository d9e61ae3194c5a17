import enum
from dataclasses import dataclass, field

import numpy as np

from fem.spaces import MatrixField, ScalarField
from mongeampere.exceptions import ConfigError
from nonlinear.expressions import AnalyticFunction


class Method(str, enum.Enum):
    TIME_MARCHING = 'time_marching'
    NEWTON = 'newton'


class InitialGuess(str, enum.Enum):
    INTERPOLANT_OF_EXACT = 'interpolant_of_exact'
    POISSON_SQRT_F = 'poisson_sqrt_f'


DEFAULT_MAX_ITERATIONS = {
    Method.TIME_MARCHING: 500,
    Method.NEWTON: 25,
}


@dataclass(frozen=True, eq=False)
class Problem:
    """det D^2 u = f in the domain, u = g on its boundary; ``exact`` when manufactured."""
    name: str
    f: AnalyticFunction
    g: AnalyticFunction
    exact: AnalyticFunction | None = None

    @property
    def is_manufactured(self) -> bool:
        return self.exact is not None

    def scaled(self, alpha: float) -> 'Problem':
        """(alpha^2 f, alpha g), solved by alpha u."""
        exact = None if self.exact is None else self.exact.scaled(alpha)
        return Problem(f"{self.name}*{alpha:g}", self.f.scaled(alpha ** 2), self.g.scaled(alpha), exact)

    def describe(self) -> dict:
        return {
            'name': self.name,
            'f': self.f.text,
            'g': self.g.text,
            'exact': None if self.exact is None else self.exact.text,
        }


def _choice(enum_type, value, name):
    try:
        return enum_type(value)
    except ValueError:
        options = ', '.join(m.value for m in enum_type)
        raise ConfigError(f"solver.{name}", f"{value!r} is not one of {options}") from None


@dataclass(frozen=True)
class SolverConfig:
    method: Method = Method.NEWTON
    nu: float | str = 'auto'
    tol_increment: float = 1e-10
    tol_residual: float = 1e-10
    max_iterations: int | None = None
    initial_guess: InitialGuess = InitialGuess.POISSON_SQRT_F
    damping: float = 1.0
    perturbation: float = 0.0
    nu_refresh: int = 25

    def __post_init__(self):
        object.__setattr__(self, 'method', _choice(Method, self.method, 'method'))
        object.__setattr__(self, 'initial_guess', _choice(InitialGuess, self.initial_guess, 'initial_guess'))
        if self.nu != 'auto':
            try:
                nu = float(self.nu)
            except (TypeError, ValueError):
                raise ConfigError('solver.nu', f"expected 'auto' or a positive number, got {self.nu!r}") from None
            if not np.isfinite(nu) or nu <= 0.0:
                raise ConfigError('solver.nu', f"must be positive, got {self.nu!r}")
            object.__setattr__(self, 'nu', nu)
        for name in ('tol_increment', 'tol_residual'):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not (np.isfinite(value) and value > 0.0):
                raise ConfigError(f"solver.{name}", f"must be a positive number, got {value!r}")
        if self.max_iterations is not None and (not isinstance(self.max_iterations, int) or self.max_iterations < 1):
            raise ConfigError('solver.max_iterations', f"must be a positive integer, got {self.max_iterations!r}")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigError('solver.damping', f"must lie in (0, 1], got {self.damping!r}")
        if not np.isfinite(self.perturbation):
            raise ConfigError('solver.perturbation', "must be finite")
        if self.nu_refresh < 1:
            raise ConfigError('solver.nu_refresh', f"must be a positive integer, got {self.nu_refresh!r}")

    @property
    def iteration_limit(self) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return DEFAULT_MAX_ITERATIONS[self.method]

    @property
    def auto_nu(self) -> bool:
        return self.nu == 'auto'

    def as_dict(self) -> dict:
        return {
            'method': self.method.value,
            'nu': self.nu,
            'tol_increment': self.tol_increment,
            'tol_residual': self.tol_residual,
            'max_iterations': self.iteration_limit,
            'initial_guess': self.initial_guess.value,
            'damping': self.damping,
            'perturbation': self.perturbation,
        }


@dataclass
class SolveResult:
    """
    Final iterate (u_h, sigma_h = H(u_h)) and per-iteration histories.

    ``residual_history[0]`` belongs to the initial guess and entry r to
    iteration r; ``increment_history[r - 1]`` is the H^1 increment of
    iteration r.
    """
    u: ScalarField
    sigma: MatrixField
    iterations: int
    converged: bool
    method: Method
    residual_history: list = field(default_factory=list)
    increment_history: list = field(default_factory=list)
    nu_history: list = field(default_factory=list)
    message: str = ''

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else float('nan')

    @property
    def final_increment(self) -> float:
        return self.increment_history[-1] if self.increment_history else float('nan')

    @property
    def contraction_factors(self) -> np.ndarray:
        """Ratios of consecutive increments; estimates the time-marching contraction rate."""
        inc = np.asarray(self.increment_history, dtype=float)
        if len(inc) < 2:
            return np.empty(0)
        with np.errstate(divide='ignore', invalid='ignore'):
            return inc[1:] / inc[:-1]

    def summary(self) -> dict:
        return {
            'method': self.method.value,
            'converged': self.converged,
            'iterations': self.iterations,
            'residual': self.final_residual,
            'increment': self.final_increment,
            'message': self.message,
        }


@dataclass
class RescaledResult:
    """Solutions for (f, g) and (alpha^2 f, alpha g), with ||u_alpha - alpha u||_{H^1}."""
    alpha: float
    base: SolveResult
    scaled: SolveResult
    scale_error: float
