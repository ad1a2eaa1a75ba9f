import numpy as np
import pytest
from numpy import testing

from mixhess.apps.config import ChiConfig, RunConfig
from mixhess.apps.properties import SUITES, PropertyResult, degeneracy_path, run_properties
from mixhess.errors import ConfigError
from mixhess.model.symmetric import sigma_all
from mixhess.utils import dumps


@pytest.mark.parametrize('name', sorted(SUITES))
def test_suite_passes_on_small_samples(name):
    result = SUITES[name](np.random.default_rng(11), 12)
    assert result.ok, result.dict
    assert result.checks > 0


def test_zero_samples_is_vacuous():
    status, report = run_properties(RunConfig(samples=0))
    assert status == 0
    assert report['ok'] and report['vacuous'] and report['checks'] == 0
    assert all(entry['worst_margin'] is None for entry in report['properties'])


def test_reports_are_deterministic():
    cfg = RunConfig(seed=3, samples=8)
    first = dumps(run_properties(cfg)[1])
    assert dumps(run_properties(cfg)[1]) == first
    assert dumps(run_properties(cfg.replace(seed=4))[1]) != first


def test_suite_streams_are_independent_of_selection():
    cfg = RunConfig(seed=5, samples=6)
    _, everything = run_properties(cfg)
    _, only = run_properties(cfg, suites=['concavity'])
    selected = [entry for entry in everything['properties'] if entry['property'] == 'concavity']
    assert only['properties'] == selected


def test_failing_result_serializes_its_sample():
    result = PropertyResult('demo', [0.5, -1.0, 0.2], [True, False, True], lambda i: {'lambda': [i, i]})
    assert not result.ok
    out = result.dict
    assert out['passed'] == 2 and out['worst_margin'] == -1.0
    assert out['failing_sample'] == {'lambda': [1, 1], 'margin': -1.0}


def test_failures_set_the_exit_status(monkeypatch):
    def failing(rng, count):
        return PropertyResult('sigma_oracle', [-1.0], [False], lambda i: {'lambda': [0.0, 0.0]})

    monkeypatch.setitem(SUITES, 'sigma_oracle', failing)
    status, report = run_properties(RunConfig(samples=0))
    assert status == 1 and not report['ok']
    assert report['properties'][0]['failing_sample']['margin'] == -1.0


def test_chi_conditions_include_growth_bounds():
    result = SUITES['chi_conditions'](np.random.default_rng(0), 5)
    assert result.ok
    # zero, constant and linear-z carry both growth bounds, gradient-quadratic only the gradient one
    assert result.checks == 5 * (4 + 4 + 4 + 3)


def test_configured_chi_is_validated():
    chi = ChiConfig(kind='linear-z', scale=0.5, psi1=1.0, gamma1=1.0, psi2=1.0, gamma2=1.0)
    status, report = run_properties(RunConfig(samples=4, chi=chi), suites=['configured_chi'])
    assert status == 0
    assert report['properties'] == [dict(report['properties'][0], property='configured_chi', checks=16, ok=True)]
    _, plain = run_properties(RunConfig(samples=0))
    assert 'configured_chi' not in [entry['property'] for entry in plain['properties']]


def test_configured_chi_violating_size_growth():
    chi = ChiConfig(kind='gradient-quadratic', psi2=1.0, gamma2=1.0)
    status, report = run_properties(RunConfig(samples=10, chi=chi), suites=['configured_chi'])
    entry = report['properties'][0]
    assert status == 1 and entry['checks'] == 30
    assert entry['failing_sample']['check'] == 'size_growth'
    assert entry['failing_sample']['chi'] == 'gradient-quadratic'


def test_invalid_configured_chi():
    with pytest.raises(ConfigError):
        run_properties(RunConfig(samples=0, chi=ChiConfig(kind='zero', psi1=1.0)))


@pytest.mark.parametrize('n, k', [(3, 3), (4, 3), (5, 4)])
def test_degeneracy_path_approaches_the_cone_boundary(n, k):
    t, path = degeneracy_path(n, k, points=30)
    assert t[0] == pytest.approx(1)
    sigmas = sigma_all(path)
    assert np.all(sigmas[:, 1:k] > 0)
    assert sigmas[-1, k - 1] < 1e-8 * sigmas[0, k - 1]
    testing.assert_array_equal(path[:, :-1], 1)


@pytest.mark.slow
def test_default_run_passes():
    status, report = run_properties(RunConfig())
    assert status == 0, [entry for entry in report['properties'] if not entry['ok']]
    assert report['checks'] > 10000
