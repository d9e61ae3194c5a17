"""
Run configuration files.

INI text with four sections::

    [domain]
    polygon = 0, 0, 1, 0, 1, 1, 0, 1
    levels = 8, 16, 32, 64
    degree = 2

    [problem]
    preset = exponential          ; or f = ..., g = ..., optional exact = ...

    [solver]
    method = newton
    nu = auto
    tol_increment = 1e-10
    tol_residual = 1e-10
    initial_guess = poisson_sqrt_f

    [output]
    directory = results
    threads = 1
    vtk = true

Every key is validated on parse; failures raise ConfigError naming
``section.key``. ``to_ini`` writes every key, so parse(to_ini(c)) == c.
"""
import configparser
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from decouple import Csv

from fem.mesh import UNIT_SQUARE, Polygon
from mongeampere import settings
from mongeampere.exceptions import ConfigError, MeshError
from nonlinear.models import Problem, SolverConfig
from nonlinear.problems import PRESETS, from_expressions, preset

logger = logging.getLogger(__name__)

SECTIONS = {
    'domain': {'polygon', 'levels', 'degree'},
    'problem': {'preset', 'f', 'g', 'exact'},
    'solver': {'method', 'nu', 'tol_increment', 'tol_residual', 'max_iterations', 'initial_guess',
               'damping', 'perturbation', 'nu_refresh'},
    'output': {'directory', 'threads', 'vtk'},
}
BOOLEANS = {'1': True, 'true': True, 'yes': True, 'on': True, '0': False, 'false': False, 'no': False, 'off': False}


def _cast(section, key, raw, cast):
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}.{key}", f"invalid value {raw!r}: {exc}") from None


def _boolean(raw: str) -> bool:
    try:
        return BOOLEANS[raw.strip().lower()]
    except KeyError:
        raise ValueError("expected true or false") from None


def _number_list(raw: str) -> str:
    return ', '.join(repr(v) for v in raw)


@dataclass(frozen=True)
class RunConfig:
    polygon: tuple = UNIT_SQUARE.vertices
    levels: tuple = (8, 16, 32, 64)
    degree: int = settings.DEFAULT_DEGREE
    preset: str | None = 'exponential'
    f: str | None = None
    g: str | None = None
    exact: str | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    directory: Path = settings.OUTPUT_DIR
    threads: int = settings.THREADS
    vtk: bool = True

    def __post_init__(self):
        try:
            Polygon(self.polygon)
        except MeshError as exc:
            raise ConfigError('domain.polygon', str(exc)) from None
        if len(self.polygon) != 4:
            raise ConfigError('domain.polygon', "structured meshes need a quadrilateral (4 vertices)")
        if not self.levels or any(n < 1 for n in self.levels):
            raise ConfigError('domain.levels', f"levels must be positive integers, got {self.levels}")
        if self.degree < 2:
            raise ConfigError('domain.degree', f"degree must be at least 2, got {self.degree}")
        if self.preset is not None:
            if self.f is not None or self.g is not None:
                raise ConfigError('problem.preset', "give either a preset or f and g expressions, not both")
            if self.preset not in PRESETS:
                raise ConfigError('problem.preset', f"unknown preset {self.preset!r} (choose from {', '.join(PRESETS)})")
        elif self.f is None or self.g is None:
            raise ConfigError('problem.f' if self.f is None else 'problem.g',
                              "required when no preset is given")
        if self.threads < 1:
            raise ConfigError('output.threads', f"must be at least 1, got {self.threads}")

    # ---- parsing ----
    @classmethod
    def from_text(cls, text: str) -> 'RunConfig':
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(';', '#'))
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError('file', str(exc).splitlines()[0]) from None
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(section, "unknown section")
            unknown = set(parser[section]) - SECTIONS[section]
            if unknown:
                raise ConfigError(f"{section}.{sorted(unknown)[0]}", "unknown key")

        def get(section, key, cast=str, default=None):
            if not parser.has_option(section, key):
                return default
            return _cast(section, key, parser.get(section, key).strip(), cast)

        solver_values = {}
        solver_casts = {'method': str, 'nu': str, 'tol_increment': float, 'tol_residual': float,
                        'max_iterations': int, 'initial_guess': str, 'damping': float,
                        'perturbation': float, 'nu_refresh': int}
        for key, cast in solver_casts.items():
            value = get('solver', key, cast)
            if value is not None:
                solver_values[key] = value
        solver = SolverConfig(**solver_values)

        polygon = get('domain', 'polygon', Csv(cast=float))
        if polygon is not None:
            if not polygon:
                raise ConfigError('domain.polygon', "must not be empty")
            if len(polygon) % 2:
                raise ConfigError('domain.polygon', "expected an even number of coordinates")
            polygon = tuple(zip(polygon[::2], polygon[1::2]))
        levels = get('domain', 'levels', Csv(cast=int))
        if levels is not None and not levels:
            raise ConfigError('domain.levels', "must list at least one mesh resolution")
        has_expressions = parser.has_option('problem', 'f') or parser.has_option('problem', 'g')
        return cls(
            polygon=polygon or cls.polygon,
            levels=tuple(levels) if levels else cls.levels,
            degree=get('domain', 'degree', int, cls.degree),
            preset=get('problem', 'preset', str, None if has_expressions else cls.preset),
            f=get('problem', 'f'),
            g=get('problem', 'g'),
            exact=get('problem', 'exact'),
            solver=solver,
            directory=Path(get('output', 'directory', str, str(cls.directory))),
            threads=get('output', 'threads', int, cls.threads),
            vtk=get('output', 'vtk', _boolean, cls.vtk),
        )

    @classmethod
    def load(cls, path) -> 'RunConfig':
        path = Path(path)
        try:
            text = path.read_text(encoding='utf-8')
        except OSError as exc:
            raise ConfigError('file', f"cannot read {path}: {exc.strerror}") from None
        config = cls.from_text(text)
        logger.debug("loaded run configuration from %s", path)
        return config

    def with_overrides(self, directory=None, threads=None) -> 'RunConfig':
        changes = {}
        if directory is not None:
            changes['directory'] = Path(directory)
        if threads is not None:
            changes['threads'] = threads
        return replace(self, **changes) if changes else self

    # ---- serialization ----
    def to_ini(self) -> str:
        s = self.solver
        lines = [
            '[domain]',
            f"polygon = {_number_list(c for p in self.polygon for c in p)}",
            f"levels = {', '.join(str(n) for n in self.levels)}",
            f"degree = {self.degree}",
            '',
            '[problem]',
        ]
        for key in ('preset', 'f', 'g', 'exact'):
            value = getattr(self, key)
            if value is not None:
                lines.append(f"{key} = {value}")
        lines += [
            '',
            '[solver]',
            f"method = {s.method.value}",
            f"nu = {s.nu if s.auto_nu else repr(s.nu)}",
            f"tol_increment = {s.tol_increment!r}",
            f"tol_residual = {s.tol_residual!r}",
        ]
        if s.max_iterations is not None:
            lines.append(f"max_iterations = {s.max_iterations}")
        lines += [
            f"initial_guess = {s.initial_guess.value}",
            f"damping = {s.damping!r}",
            f"perturbation = {s.perturbation!r}",
            f"nu_refresh = {s.nu_refresh}",
            '',
            '[output]',
            f"directory = {self.directory}",
            f"threads = {self.threads}",
            f"vtk = {'true' if self.vtk else 'false'}",
        ]
        return '\n'.join(lines) + '\n'

    # ---- derived objects ----
    @property
    def domain(self) -> Polygon:
        return Polygon(self.polygon)

    def problem(self) -> Problem:
        if self.preset is not None:
            return preset(self.preset)
        return from_expressions(self.f, self.g, exact=self.exact)
