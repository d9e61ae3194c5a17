"""
Problem catalogue: manufactured solutions (f = det D^2 u, g = u) and
problems given directly by (f, g) expressions.
"""
import logging

from mongeampere.exceptions import ConfigError
from nonlinear.expressions import AnalyticFunction
from nonlinear.models import Problem

logger = logging.getLogger(__name__)

PRESETS = {
    'quadratic': '(x^2 + y^2)/2',
    'exponential': 'exp((x^2 + y^2)/2)',
    'anisotropic': 'x^2/2 + y^2',
}


def _parse(text: str, field: str) -> AnalyticFunction:
    try:
        return AnalyticFunction.parse(text)
    except ValueError as exc:
        raise ConfigError(field, str(exc)) from exc


def manufactured(solution: str, name: str | None = None) -> Problem:
    """Problem whose exact solution is ``solution``; f is derived symbolically."""
    u = _parse(solution, 'problem.exact')
    f = u.monge_ampere()
    logger.debug("manufactured problem %s: f = %s", name or solution, f.text)
    return Problem(name or solution, f, u, u)


def from_expressions(f: str, g: str, name: str = 'custom', exact: str | None = None) -> Problem:
    """Problem from data expressions; ``exact`` optionally supplies a known solution for error reporting."""
    return Problem(
        name,
        _parse(f, 'problem.f'),
        _parse(g, 'problem.g'),
        None if exact is None else _parse(exact, 'problem.exact'),
    )


def preset(name: str) -> Problem:
    try:
        solution = PRESETS[name]
    except KeyError:
        raise ConfigError('problem.preset', f"unknown preset {name!r} (choose from {', '.join(PRESETS)})") from None
    return manufactured(solution, name)
