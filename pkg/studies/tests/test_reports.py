import csv
import io
import json

import pytest

from studies.reports import CSV_COLUMNS, ERROR_COLUMNS, ConvergenceReport, LevelRecord, atomic_write_text


def record(n, scale, wall_time=0.0):
    h = 2 ** 0.5 / n
    errors = {c: scale * h ** 2 for c in ERROR_COLUMNS}
    errors['sigma_l2_interp'] = scale * h
    return LevelRecord(n=n, h=h, dofs_u=(2 * n + 1) ** 2, dofs_sigma=3 * (2 * n + 1) ** 2,
                       iterations=4, converged=True, wall_time=wall_time, **errors)


@pytest.fixture
def report():
    report = ConvergenceReport('exponential', 2, 'newton')
    for n in (4, 8, 16):
        report.add(record(n, 0.3, wall_time=n * 0.01))
    return report


def parse(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_csv_layout(report):
    rows = parse(report.to_csv())
    assert len(rows) == 3
    assert list(rows[0]) == list(CSV_COLUMNS) + [f"rate_{c}" for c in ERROR_COLUMNS]
    assert 'wall_time' not in rows[0]
    assert rows[0]['rate_u_h1_interp'] == ''
    assert float(rows[1]['rate_u_h1_interp']) == pytest.approx(2.0)
    assert float(rows[2]['rate_sigma_l2_interp']) == pytest.approx(1.0)
    assert rows[2]['converged'] == 'true'


def test_csv_is_independent_of_timing(report):
    other = ConvergenceReport('exponential', 2, 'newton', [record(n, 0.3, wall_time=99.0) for n in (4, 8, 16)])
    assert report.to_csv() == other.to_csv()
    assert report.to_csv(include_wall_time=True) != other.to_csv(include_wall_time=True)


def test_floor_marker():
    report = ConvergenceReport('quadratic', 2, 'newton', [record(n, 1e-20) for n in (4, 8, 16)])
    rows = parse(report.to_csv())
    assert rows[1]['rate_u_h1_interp'] == 'floor'
    assert report.fit_rate('u_h1_interp') is None


def test_fit_needs_three_levels():
    report = ConvergenceReport('exponential', 2, 'newton', [record(n, 0.3) for n in (4, 8)])
    assert report.rates('u_l2').pair_rates == pytest.approx((2.0,))
    assert report.fit_rate('u_l2') is None
    assert ConvergenceReport('exponential', 2, 'newton').rates('u_l2') is None


def test_json_document(report):
    document = json.loads(report.to_json())
    assert document['problem'] == 'exponential'
    assert document['levels'][2]['wall_time'] == pytest.approx(0.16)
    assert document['rates']['u_h1_interp']['fit'] == pytest.approx(2.0)
    assert document['columns'][-1] == 'wall_time'


def test_write(tmp_path, report):
    csv_path, json_path = report.write(tmp_path / 'out', stem='study')
    assert csv_path.read_text(encoding='utf-8') == report.to_csv()
    assert json.loads(json_path.read_text(encoding='utf-8'))['degree'] == 2
    assert sorted(p.name for p in (tmp_path / 'out').iterdir()) == ['study.csv', 'study.json']


def test_failed_write_keeps_previous_file(tmp_path):
    target = tmp_path / 'report.csv'
    atomic_write_text(target, 'old\n')
    with pytest.raises(TypeError):
        atomic_write_text(target, 42)
    assert target.read_text() == 'old\n'
    assert [p.name for p in tmp_path.iterdir()] == ['report.csv']


def test_table(report):
    text = report.table()
    assert text.splitlines()[0].split()[:2] == ['n', 'h']
    assert 'u_h1_interp=2.000' in text
