"""
Convergence reports: one record per mesh level, observed rates per error
column, CSV and JSON serialization with atomic writes.
"""
import csv
import io
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from studies.rates import RateSummary, observed_rate

logger = logging.getLogger(__name__)

ERROR_COLUMNS = (
    'u_h1_interp',        # ||u_h - I_h u||_{H1}
    'u_l2',               # ||u_h - u||_{L2}
    'sigma_l2_interp',    # ||sigma_h - I_h sigma||_{L2}
    'sigma_l2',           # ||sigma_h - sigma||_{L2}
    'hessian_interp_l2',  # ||H(I_h u) - I_h sigma||_{L2}
    'sigma_broken_h1',    # ||sigma_h - sigma||_{H1(T_h)}
)
MIN_FIT_LEVELS = 3


@dataclass
class LevelRecord:
    n: int
    h: float
    dofs_u: int
    dofs_sigma: int
    u_h1_interp: float
    u_l2: float
    sigma_l2_interp: float
    sigma_l2: float
    hessian_interp_l2: float
    sigma_broken_h1: float
    iterations: int
    converged: bool
    wall_time: float = 0.0


CSV_COLUMNS = tuple(f.name for f in fields(LevelRecord) if f.name != 'wall_time')


def _format(value) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return f"{value:.10e}"
    if value is None:
        return ''
    return str(value)


def atomic_write_text(path, text: str):
    """Write through a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("wrote %s", path)
    return path


@dataclass
class ConvergenceReport:
    problem: str
    degree: int
    method: str
    levels: list = field(default_factory=list)

    def add(self, record: LevelRecord):
        self.levels.append(record)

    @property
    def hs(self) -> list:
        return [r.h for r in self.levels]

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.levels]

    def rates(self, name: str) -> RateSummary | None:
        """Rates for one error column; None with fewer than two levels."""
        if len(self.levels) < 2:
            return None
        return observed_rate(self.column(name), self.hs, min_fit_points=MIN_FIT_LEVELS)

    def fit_rate(self, name: str) -> float | None:
        summary = self.rates(name)
        return None if summary is None else summary.fit

    # ---- serialization ----
    def to_csv(self, include_wall_time: bool = False) -> str:
        header = list(CSV_COLUMNS) + [f"rate_{c}" for c in ERROR_COLUMNS]
        if include_wall_time:
            header.append('wall_time')
        rates = {c: self.rates(c) for c in ERROR_COLUMNS}
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(header)
        for i, record in enumerate(self.levels):
            row = [_format(getattr(record, c)) for c in CSV_COLUMNS]
            for c in ERROR_COLUMNS:
                summary = rates[c]
                if i == 0 or summary is None:
                    row.append('')
                elif summary.pair_rates[i - 1] is None:
                    row.append('floor')
                else:
                    row.append(_format(summary.pair_rates[i - 1]))
            if include_wall_time:
                row.append(_format(record.wall_time))
            writer.writerow(row)
        return buffer.getvalue()

    def as_dict(self) -> dict:
        rates = {}
        for c in ERROR_COLUMNS:
            summary = self.rates(c)
            if summary is not None:
                rates[c] = {
                    'pairs': list(summary.pair_rates),
                    'fit': summary.fit,
                    'at_floor': list(summary.at_floor),
                }
        return {
            'problem': self.problem,
            'degree': self.degree,
            'method': self.method,
            'columns': list(CSV_COLUMNS) + ['wall_time'],
            'levels': [asdict(r) for r in self.levels],
            'rates': rates,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2) + '\n'

    def write(self, directory, stem: str = 'report'):
        """Write ``<stem>.csv`` and ``<stem>.json``; returns both paths."""
        directory = Path(directory)
        csv_path = atomic_write_text(directory / f"{stem}.csv", self.to_csv())
        json_path = atomic_write_text(directory / f"{stem}.json", self.to_json())
        logger.info("report written csv=%s json=%s", csv_path, json_path)
        return csv_path, json_path

    def table(self) -> str:
        """Fixed-width text table for terminal output."""
        names = ('n', 'h') + ERROR_COLUMNS + ('iterations',)
        lines = ['  '.join(f"{n:>17s}" for n in names)]
        for r in self.levels:
            cells = [f"{r.n:>17d}", f"{r.h:>17.4e}"]
            cells += [f"{getattr(r, c):>17.4e}" for c in ERROR_COLUMNS]
            cells.append(f"{r.iterations:>17d}")
            lines.append('  '.join(cells))
        fits = []
        for c in ERROR_COLUMNS:
            fit = self.fit_rate(c)
            fits.append(f"{c}={'n/a' if fit is None else f'{fit:.3f}'}")
        lines.append('fit rates: ' + ' '.join(fits))
        return '\n'.join(lines)
