import json

import numpy as np
import pytest

from mixhess.apps.config import RunConfig, parse_config, serialize
from mixhess.apps.problems import BUILTINS, build_params, build_problem, resolve
from mixhess.errors import ConfigError
from mixhess.solver.options import SolverOptions

FULL = {
    'problem': None,
    'n': 3,
    'k': 3,
    'alphas': [0.3, '0.1 + 0.05*x1**2'],
    'rhs': 0.05,
    'phi': '(x1**2 + x2**2 + x3**2)/2',
    'exact': None,
    'chi': {'kind': 'linear-z', 'scale': 0.5, 'matrix': None, 'psi1': None, 'psi2': None, 'gamma1': None,
            'gamma2': None},
    'box': {'lower': -1.0, 'upper': [1.0, 2.0, 1.0]},
    'resolution': [9, 11, 9],
    'subsolution': None,
    'solver': dict(SolverOptions(dt=0.2, linear_solver='bicgstab').dict),
    'seed': 7,
    'samples': 12,
    'grids': [9, 17],
    'output': 'runs/full',
    'verbosity': 2,
}


def test_minimal_config_applies_defaults():
    cfg = parse_config('{"problem": "quadratic-mms"}')
    assert cfg.problem == 'quadratic-mms'
    assert cfg.n is None and cfg.seed == 0 and cfg.verbosity == 1
    assert cfg.solver == SolverOptions()
    resolved = resolve(cfg)
    assert resolved['n'] == 3 and resolved['alphas'] == [0.3, 0.1]
    assert resolved['exact'] == '(x1**2 + x2**2 + x3**2)/2'


def test_order_above_dimension():
    with pytest.raises(ConfigError, match='k <= n required'):
        parse_config('{"n": 3, "k": 5, "alphas": [0, 0, 0, 0]}')


def test_builtin_override_is_checked_after_merge():
    with pytest.raises(ConfigError, match='k <= n required'):
        resolve(parse_config('{"problem": "quadratic-mms", "n": 2}'))


@pytest.mark.parametrize('source, message', [
    ('{"problem": "quadratic-mms", "tolerance": 1}', 'tolerance'),
    ('{"solver": {"dt": 0.5, "step": 1}}', 'step'),
    ('{"chi": {"kind": "zero", "shift": 1}}', 'shift'),
])
def test_unknown_keys_are_errors(source, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(source)


def test_json_errors_carry_position():
    with pytest.raises(ConfigError, match='line 2, column'):
        parse_config('{"n": 3,\n "k": }')
    with pytest.raises(ConfigError, match='JSON object'):
        parse_config('[1, 2]')


@pytest.mark.parametrize('data', [
    {'n': 'three'},
    {'n': 5},
    {'k': 3, 'alphas': [0.1]},
    {'n': 3, 'resolution': [9, 9]},
    {'resolution': 3},
    {'chi': {'kind': 'cubic'}},
    {'solver': {'dt': 0.01, 'dt_min': 0.1}},
    {'verbosity': 3},
])
def test_rule_violations(data):
    with pytest.raises(ConfigError):
        parse_config(json.dumps(data))


def test_type_errors_name_the_field():
    with pytest.raises(ConfigError, match='solver.dt'):
        parse_config('{"solver": {"dt": "large"}}')


def test_full_config_round_trips():
    cfg = parse_config(json.dumps(FULL))
    assert serialize(cfg) == json.dumps(FULL, indent=2)
    assert parse_config(serialize(cfg)) == cfg


def test_replace_merges_solver_overrides():
    cfg = parse_config('{"problem": "strict-subsolution", "solver": {"dt": 0.2}}')
    changed = cfg.replace(solver={'tau': 0.0}, seed=4)
    assert changed.solver.dt == 0.2 and changed.solver.tau == 0 and changed.seed == 4
    assert cfg.seed == 0
    with pytest.raises(ConfigError):
        cfg.replace(solver={'dt': 0.00001})


def test_unknown_problem():
    with pytest.raises(ConfigError, match='quadratic-mms'):
        resolve(RunConfig(problem='cubic-mms'))


def test_builtins_are_documented():
    assert set(BUILTINS) == {'quadratic-mms', 'trig-perturbed-mms', 'chi-linear-z', 'strict-subsolution',
                             'degeneracy-sweep'}


def test_quadratic_builtin_problem():
    spec = build_problem(RunConfig(problem='quadratic-mms', resolution=9))
    assert spec.box.counts == (9, 9, 9)
    np.testing.assert_allclose(spec.rhs_interior, 1 / 3 - 0.3 / 3 - 0.1, atol=1e-14)
    assert spec.exact is not None and spec.name == 'quadratic-mms'
    assert spec.exact(np.ones(3)) == pytest.approx(1.5)


def test_strict_subsolution_builtin():
    spec = build_problem(RunConfig(problem='strict-subsolution', resolution=7))
    assert spec.exact is None
    assert spec.validate() == pytest.approx(0.02)


def test_chi_builtin_and_growth_constants():
    cfg = parse_config('{"problem": "chi-linear-z", "resolution": 7, '
                       '"chi": {"kind": "linear-z", "psi2": 2.0, "gamma2": 1.0}}')
    spec = build_problem(cfg)
    assert spec.chi.name == 'linear-z' and spec.chi.monotone_z and spec.chi.psi2 == 2.0
    with pytest.raises(ConfigError):
        build_problem(cfg.replace(chi={'kind': 'linear-z', 'psi2': 2.0}))


def test_degeneracy_sweep_has_no_problem():
    with pytest.raises(ConfigError):
        build_problem(RunConfig(problem='degeneracy-sweep'))


def test_custom_problem_needs_data():
    with pytest.raises(ConfigError, match='rhs'):
        build_problem(parse_config('{"n": 3, "k": 3, "alphas": [0.3, 0.1], "phi": "x1"}'))


def test_expression_coefficients():
    cfg = parse_config(json.dumps({key: FULL[key] for key in ('n', 'k', 'alphas', 'rhs', 'phi', 'box',
                                                              'resolution')}))
    resolved = resolve(cfg)
    assert build_params(resolved).alphas[1] == pytest.approx(0.1)
    spec = build_problem(cfg)
    assert spec.alpha_fields is not None
    assert spec.box.counts == (9, 11, 9)
    assert spec.alpha_interior[1].max() > 0.1


def test_malformed_expression_is_a_config_error():
    with pytest.raises(ConfigError):
        build_problem(parse_config('{"n": 3, "k": 3, "alphas": [0.3, 0.1], "rhs": 0.1, "phi": "import os"}'))
