
import numpy as np
import pytest
from numpy import testing

from mixhess.errors import ChiEvaluationError, DomainError
from mixhess.model.chi import (ChiSamplePlan, ChiSpec, constant_chi, linear_z_chi, make_chi, validate_chi,
                               zero_chi)
from mixhess.utils import dumps

PLAN = ChiSamplePlan(3, n_samples=30)


def test_zero_chi_passes_with_zero_margins():
    report = validate_chi(zero_chi(3), PLAN)
    assert report.passed
    assert report.z_independent
    assert report.worst('p_concavity').margin == 0
    assert report.worst('z_monotonicity').margin == 0
    assert report.worst('size_growth') is None


def test_linear_z_is_monotone_and_p_independent():
    report = validate_chi(linear_z_chi(3), PLAN)
    assert report.passed
    assert not report.z_independent
    assert report.worst('z_monotonicity').margin == pytest.approx(1)
    assert report.worst('p_concavity').margin == pytest.approx(0, abs=1e-12)


def test_negative_scale_violates_monotonicity():
    report = validate_chi(linear_z_chi(3, scale=-1), PLAN)
    assert not report.passed_check('z_monotonicity')
    assert report.passed_check('p_concavity')


def test_gradient_quadratic_fails_size_growth_at_large_p():
    chi = make_chi('gradient-quadratic', 3, psi2=1.0, gamma2=1.0)
    report = validate_chi(chi, PLAN)
    assert report.passed_check('p_concavity')
    assert not report.passed_check('size_growth')
    worst = report.worst('size_growth')
    assert np.linalg.norm(worst.coordinates['p']) == pytest.approx(10)
    assert report.violations[0].margin == worst.margin
    payload = report.dict
    assert payload['chi'] == 'gradient-quadratic'
    assert payload['summary']['size_growth']['passed'] is False


def test_gradient_growth_check_runs_when_constants_are_given():
    chi = ChiSpec(3, zero_chi(3).value, zero_chi(3).dz, zero_chi(3).dp, psi1=1.0, gamma1=1.0)
    report = validate_chi(chi, PLAN)
    assert report.passed_check('gradient_growth')
    assert report.worst('gradient_growth').margin > 0


def test_callback_failure_reports_the_sample():
    def broken(x, z, p):
        raise ZeroDivisionError('boom')

    chi = ChiSpec(3, broken, zero_chi(3).dz, zero_chi(3).dp)
    with pytest.raises(ChiEvaluationError) as info:
        validate_chi(chi, PLAN)
    assert set(info.value.sample) == {'x', 'z', 'p'}
    assert isinstance(info.value.__cause__, ZeroDivisionError)


def test_non_finite_output_is_an_evaluation_error():
    def nan(x, z, p):
        return np.full(np.shape(z) + (3, 3), np.nan)

    with pytest.raises(ChiEvaluationError):
        validate_chi(ChiSpec(3, nan, zero_chi(3).dz, zero_chi(3).dp), PLAN)


def test_validation_is_seeded():
    first = dumps(validate_chi(make_chi('gradient-quadratic', 3), PLAN).dict)
    assert dumps(validate_chi(make_chi('gradient-quadratic', 3), PLAN).dict) == first


def test_growth_constants_are_checked():
    chi = zero_chi(2)
    with pytest.raises(DomainError):
        ChiSpec(2, chi.value, chi.dz, chi.dp, psi1=1.0)
    with pytest.raises(DomainError):
        ChiSpec(2, chi.value, chi.dz, chi.dp, psi2=1.0, gamma2=2.0)
    with pytest.raises(DomainError):
        ChiSpec(2, chi.value, chi.dz, chi.dp, psi2=-1.0, gamma2=1.0)
    with pytest.raises(DomainError):
        make_chi('zero', 2, psi1=1.0)
    linear = make_chi('linear-z', 2, psi2=1.0, gamma2=1.0)
    assert linear.monotone_z and linear.name == 'linear-z' and linear.psi2 == 1.0


def test_constant_chi():
    chi = constant_chi([[1.0, 0.5], [0.5, 2.0]])
    out = chi.value(np.zeros((4, 2)), np.zeros(4), np.zeros((4, 2)))
    assert out.shape == (4, 2, 2)
    testing.assert_array_equal(out[3], [[1, 0.5], [0.5, 2]])
    with pytest.raises(DomainError):
        constant_chi([[1.0, 0.5], [0.4, 2.0]])


def test_builtin_callbacks_broadcast():
    x, z, p = np.zeros((5, 3)), np.linspace(-1, 1, 5), np.ones((5, 3))
    for kind in ('zero', 'shifted-identity', 'linear-z', 'gradient-quadratic'):
        chi = make_chi(kind, 3, scale=2.0)
        assert chi.value(x, z, p).shape == (5, 3, 3)
        assert chi.dz(x, z, p).shape == (5, 3, 3)
        assert chi.dp(x, z, p).shape == (5, 3, 3, 3)
    testing.assert_allclose(make_chi('linear-z', 3, scale=2.0).value(x, z, p)[0], -2 * np.eye(3))
    testing.assert_allclose(make_chi('gradient-quadratic', 3).dp(x, z, p)[0, 1], -2 * np.eye(3))


def test_unknown_kind():
    with pytest.raises(DomainError):
        make_chi('cubic', 3)
