import csv
import json

import pytest

from mixhess.apps import report
from mixhess.apps.cli import EXIT_CODES, OUTPUT_ENV, main
from mixhess.apps.properties import SUITES, PropertyResult
from mixhess.discretization.grid import load_text

SUMMARY_KEYS = ['problem', 'family', 'strict_regime', 'verdict', 'final_t', 'newton_iterations', 'final_residual',
                'max_error', 'comparison_holds', 'norms_bounded']


def write_config(tmp_path, data, name='run.json'):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding='utf-8')
    return str(path)


def read_csv(path):
    with open(path, newline='', encoding='utf-8') as f:
        return list(csv.reader(f))


def test_solve_quadratic_builtin(tmp_path):
    out = tmp_path / 'out'
    assert main(['solve', 'quadratic-mms', '--out', str(out), '-q']) == EXIT_CODES['success']
    summary = report.load_json(out / report.SUMMARY)
    assert list(summary) == SUMMARY_KEYS
    assert summary['verdict'] == 'converged' and summary['final_t'] == 1
    assert summary['max_error'] <= 1e-8
    assert summary['family'] == 'mixed' and summary['strict_regime'] is True
    u, k = load_text((out / report.SOLUTION).read_text(encoding='utf-8'))
    assert k == 3 and u.box.counts == (17, 17, 17)
    rows = read_csv(out / report.NORMS)
    assert rows[0] == ['t', 'c0', 'c1', 'c2', 'residual']
    assert float(rows[-1][0]) == 1
    records = report.load_json(out / report.CONTINUATION)
    assert records[0]['t'] == 0 and records[-1]['t'] == 1


def test_solve_strict_subsolution_writes_newton_log(tmp_path):
    config = write_config(tmp_path, {'problem': 'strict-subsolution', 'resolution': 7})
    out = tmp_path / 'out'
    assert main(['solve', config, '--out', str(out), '--dt', '0.5']) == EXIT_CODES['success']
    lines = (out / report.NEWTON_LOG).read_text(encoding='utf-8').splitlines()
    entries = [json.loads(line) for line in lines]
    assert list(entries[0]) == ['t', 'iter', 'residual', 'step', 'min_sigma_margin', 'wall_time']
    summary = report.load_json(out / report.SUMMARY)
    assert summary['newton_iterations'] == sum(entry['iter'] > 0 for entry in entries)
    assert summary['max_error'] is None


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / 'env'))
    config = write_config(tmp_path, {'problem': 'quadratic-mms', 'resolution': 7})
    assert main(['solve', config, '-q']) == 0
    assert (tmp_path / 'env' / report.SUMMARY).exists()
    assert main(['solve', config, '-q', '--out', str(tmp_path / 'flag')]) == 0
    assert (tmp_path / 'flag' / report.SUMMARY).exists()


def test_inadmissible_subsolution_is_a_spec_error(tmp_path):
    config = write_config(tmp_path, {'n': 3, 'k': 3, 'alphas': [0.3, 0.1], 'rhs': 0.1,
                                     'phi': '-(x1**2 + x2**2 + x3**2)/2', 'resolution': 7})
    out = tmp_path / 'out'
    assert main(['solve', config, '--out', str(out)]) == EXIT_CODES['spec-error']
    summary = report.load_json(out / report.SUMMARY)
    assert summary['verdict'] == 'spec-error' and summary['final_t'] is None


def test_continuation_failure_exit(tmp_path):
    config = write_config(tmp_path, {'problem': 'strict-subsolution', 'resolution': 7,
                                     'solver': {'max_iters': 1, 'dt': 0.5, 'dt_min': 0.4}})
    out = tmp_path / 'out'
    assert main(['solve', config, '--out', str(out), '--tol-newton', '1e-15']) == EXIT_CODES['solver-failure']
    summary = report.load_json(out / report.SUMMARY)
    assert summary['verdict'] == 'continuation-failure' and summary['final_t'] == 0


@pytest.mark.parametrize('argv', [
    ['solve', 'no-such-problem'],
    ['check', 'missing.json'],
    ['solve', 'quadratic-mms', '--dt', '2'],
])
def test_config_errors(tmp_path, argv):
    assert main(argv + ['--out', str(tmp_path)]) == EXIT_CODES['spec-error']


def test_malformed_config_file(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text('{"n": 3,', encoding='utf-8')
    assert main(['solve', str(path), '--out', str(tmp_path)]) == EXIT_CODES['spec-error']


def test_degeneracy_sweep(tmp_path):
    assert main(['solve', 'degeneracy-sweep', '--out', str(tmp_path)]) == 0
    rows = read_csv(tmp_path / report.DEGENERACY)
    assert rows[0] == ['t', 'sigma_km1', 'G'] and len(rows) == 61
    values = [float(row[2]) for row in rows[1:]]
    assert values[-1] < -1e3
    assert report.load_json(tmp_path / report.SUMMARY)['family'] == 'mixed'


def test_check_is_deterministic(tmp_path):
    config = write_config(tmp_path, {'samples': 6, 'seed': 2})
    assert main(['check', config, '--out', str(tmp_path / 'a')]) == EXIT_CODES['success']
    assert main(['check', config, '--out', str(tmp_path / 'b')]) == EXIT_CODES['success']
    first = (tmp_path / 'a' / report.PROPERTIES).read_bytes()
    assert first == (tmp_path / 'b' / report.PROPERTIES).read_bytes()
    assert json.loads(first)['seed'] == 2
    assert main(['check', config, '--seed', '9', '--out', str(tmp_path / 'c')]) == 0
    assert json.loads((tmp_path / 'c' / report.PROPERTIES).read_bytes())['seed'] == 9


def test_check_failure_exit(tmp_path, monkeypatch):
    def failing(rng, count):
        return PropertyResult('concavity', [-0.5], [False], lambda i: {'U1': [[1.0]]})

    monkeypatch.setitem(SUITES, 'concavity', failing)
    config = write_config(tmp_path, {'samples': 0})
    assert main(['check', config, '--out', str(tmp_path)]) == EXIT_CODES['property-failure']
    payload = json.loads((tmp_path / report.PROPERTIES).read_text(encoding='utf-8'))
    failed = [entry for entry in payload['properties'] if not entry['ok']]
    assert failed[0]['failing_sample'] == {'U1': [[1.0]], 'margin': -0.5}


def test_check_validates_the_configured_chi(tmp_path):
    config = write_config(tmp_path, {'samples': 3, 'chi': {'kind': 'constant', 'psi2': 1.0, 'gamma2': 1.0}})
    assert main(['check', config, '--out', str(tmp_path)]) == EXIT_CODES['success']
    payload = report.load_json(tmp_path / report.PROPERTIES)
    assert payload['properties'][-1]['property'] == 'configured_chi'
    bad = write_config(tmp_path, {'samples': 0, 'chi': {'kind': 'zero', 'psi1': 1.0}}, name='bad.json')
    assert main(['check', bad, '--out', str(tmp_path / 'bad')]) == EXIT_CODES['spec-error']


def test_convergence_study(tmp_path):
    assert main(['mms', 'trig-perturbed-mms', '--grids', '5,9', '--out', str(tmp_path)]) == 0
    rows = read_csv(tmp_path / report.CONVERGENCE)
    assert rows[0] == ['resolution', 'h', 'max_error', 'order']
    assert [row[0] for row in rows[1:]] == ['5', '9']
    assert rows[1][3] == '' and float(rows[2][3]) > 1


def test_solve_with_grids_writes_convergence(tmp_path):
    out = tmp_path / 'out'
    plain = write_config(tmp_path, {'problem': 'trig-perturbed-mms', 'resolution': 5}, name='plain.json')
    assert main(['solve', plain, '--out', str(out), '-q']) == 0
    assert not (out / report.CONVERGENCE).exists()
    config = write_config(tmp_path, {'problem': 'trig-perturbed-mms', 'resolution': 5, 'grids': [5, 9]})
    assert main(['solve', config, '--out', str(out), '-q']) == 0
    assert (out / report.SUMMARY).exists()
    assert [row[0] for row in read_csv(out / report.CONVERGENCE)[1:]] == ['5', '9']


@pytest.mark.parametrize('argv', [
    ['mms', 'strict-subsolution', '--grids', '5,7'],
    ['mms', 'trig-perturbed-mms', '--grids', '5,x'],
    ['mms', 'quadratic-mms'],
])
def test_convergence_study_errors(tmp_path, argv):
    assert main(argv + ['--out', str(tmp_path)]) == EXIT_CODES['spec-error']


@pytest.mark.slow
def test_trig_convergence_order(tmp_path):
    assert main(['mms', 'trig-perturbed-mms', '--out', str(tmp_path)]) == 0
    order = float(read_csv(tmp_path / report.CONVERGENCE)[-1][3])
    assert 1.7 <= order <= 2.3
