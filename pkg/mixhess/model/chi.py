import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ChiEvaluationError, DomainError
from ..utils import random_unit_vectors

logger = logging.getLogger(__name__)

ChiCallback = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class ChiSpec:
    def __init__(self, n: int, value: ChiCallback, dz: ChiCallback, dp: ChiCallback, name: str = 'custom',
                 psi1: Optional[float] = None, psi2: Optional[float] = None,
                 gamma1: Optional[float] = None, gamma2: Optional[float] = None,
                 monotone_z: bool = False):
        """Second-order perturbation :math:`\\chi(x, z, p)` added to the Hessian, :math:`U = \\nabla^2 u + \\chi`.

        Callbacks take :code:`x` of shape :code:`(..., n)`, :code:`z` of shape :code:`(...)` and :code:`p` of shape
        :code:`(..., n)` and broadcast over the leading axes. They must be reentrant.

        Args:
            n: Dimension
            value: :math:`\\chi^{ij}`, returns :code:`(..., n, n)`
            dz: :math:`\\chi^{ij}_z`, returns :code:`(..., n, n)`
            dp: :math:`\\chi^{ij}_{p_s}`, returns :code:`(..., n, n, n)` indexed :code:`[..., s, i, j]`
            name: Label used in reports
            psi1: Growth constant of the gradient-direction bound :math:`p \\cdot \\nabla_x\\chi^{\\xi\\xi}`
            psi2: Growth constant of the size bound :math:`|\\chi^{\\xi\\eta}|^2`
            gamma1: Exponent in :math:`(0, 2)` for :code:`psi1`
            gamma2: Exponent in :math:`(0, 2)` for :code:`psi2`
            monotone_z: Whether :math:`\\chi^{\\xi\\xi}_z \\geq 0` is claimed
        """
        self.n = n
        self.value = value
        self.dz = dz
        self.dp = dp
        self.name = name
        self.psi1, self.psi2 = psi1, psi2
        self.gamma1, self.gamma2 = gamma1, gamma2
        self.monotone_z = monotone_z
        for label, psi, gamma in (('1', psi1, gamma1), ('2', psi2, gamma2)):
            if (psi is None) != (gamma is None):
                raise DomainError(f'psi{label} and gamma{label} must be given together.')
            if psi is not None and not (psi > 0 and 0 < gamma < 2):
                raise DomainError(f'Need psi{label} > 0 and gamma{label} in (0, 2), got {psi}, {gamma}.')

    def __repr__(self):
        return f'ChiSpec(name={self.name!r}, n={self.n})'


def _broadcast_identity(n: int, shape: Tuple[int, ...], scale) -> np.ndarray:
    return np.asarray(scale)[..., np.newaxis, np.newaxis] * np.broadcast_to(np.eye(n), shape + (n, n))


def zero_chi(n: int) -> ChiSpec:
    def zeros(x, z, p):
        return np.zeros(np.shape(z) + (n, n))

    def zeros_p(x, z, p):
        return np.zeros(np.shape(z) + (n, n, n))

    return ChiSpec(n, zeros, zeros, zeros_p, name='zero', monotone_z=True)


def constant_chi(matrix) -> ChiSpec:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.allclose(a, a.T, rtol=0, atol=0):
        raise DomainError(f'Constant chi needs a symmetric square matrix, got {a}.')
    n = a.shape[0]

    def value(x, z, p):
        return np.broadcast_to(a, np.shape(z) + (n, n)).copy()

    chi = zero_chi(n)
    return ChiSpec(n, value, chi.dz, chi.dp, name='constant', monotone_z=True)


def shifted_identity_chi(n: int, scale: float = 1) -> ChiSpec:
    chi = constant_chi(scale * np.eye(n))
    chi.name = 'shifted-identity'
    return chi


def linear_z_chi(n: int, scale: float = 1) -> ChiSpec:
    """:math:`\\chi^{ij} = c z \\delta_{ij}`, which satisfies :math:`\\chi_z \\geq 0` for :math:`c \\geq 0`."""

    def value(x, z, p):
        return _broadcast_identity(n, np.shape(z), scale * np.asarray(z, dtype=float))

    def dz(x, z, p):
        return _broadcast_identity(n, np.shape(z), scale * np.ones(np.shape(z)))

    return ChiSpec(n, value, dz, zero_chi(n).dp, name='linear-z', monotone_z=scale >= 0)


def gradient_quadratic_chi(n: int, scale: float = 1) -> ChiSpec:
    """:math:`\\chi^{ij} = -c|p|^2\\delta_{ij}`, concave in :math:`p` for :math:`c \\geq 0`."""

    def value(x, z, p):
        p = np.asarray(p, dtype=float)
        return _broadcast_identity(n, p.shape[:-1], -scale * np.sum(p ** 2, axis=-1))

    def dp(x, z, p):
        p = np.asarray(p, dtype=float)
        return -2 * scale * p[..., :, np.newaxis, np.newaxis] * np.eye(n)

    return ChiSpec(n, value, zero_chi(n).dz, dp, name='gradient-quadratic', monotone_z=True)


BUILTIN_CHI: Dict[str, Callable[..., ChiSpec]] = {
    'zero': lambda n, scale=1, matrix=None: zero_chi(n),
    'constant': lambda n, scale=1, matrix=None: constant_chi(scale * np.asarray(matrix if matrix is not None
                                                                                else np.eye(n))),
    'shifted-identity': lambda n, scale=1, matrix=None: shifted_identity_chi(n, scale),
    'linear-z': lambda n, scale=1, matrix=None: linear_z_chi(n, scale),
    'gradient-quadratic': lambda n, scale=1, matrix=None: gradient_quadratic_chi(n, scale),
}


def make_chi(kind: str, n: int, scale: float = 1, matrix=None, **growth: Optional[float]) -> ChiSpec:
    """Built-in perturbation by name; :code:`growth` takes :code:`psi1, gamma1, psi2, gamma2`."""
    if kind not in BUILTIN_CHI:
        raise DomainError(f'Unknown chi {kind!r}; choose one of {sorted(BUILTIN_CHI)}.')
    chi = BUILTIN_CHI[kind](n, scale=scale, matrix=matrix)
    if not growth:
        return chi
    return ChiSpec(chi.n, chi.value, chi.dz, chi.dp, name=chi.name, monotone_z=chi.monotone_z, **growth)


class ChiSamplePlan:
    def __init__(self, n: int, n_samples: int = 256, p_radii: Sequence[float] = (0.1, 1, 10),
                 n_random_directions: int = 8, x_lower: float = -1, x_upper: float = 1,
                 z_range: Tuple[float, float] = (-1, 1), seed: int = 0, tol: float = 1e-10, fd_step: float = 1e-6):
        """Sampling plan for the structural checks on :math:`\\chi`; the conditions are universally quantified,
        so the validator can only look for counterexamples.

        Args:
            n: Dimension
            n_samples: Number of :math:`(x, z, p)` tuples
            p_radii: Radii :math:`|p|` cycled through the samples
            n_random_directions: Random unit :math:`\\xi` added to the coordinate axes
            x_lower: Lower corner coordinate of the sampled box
            x_upper: Upper corner coordinate of the sampled box
            z_range: Range of sampled :math:`z`
            seed: Seed of the sampling generator
            tol: Absolute slack allowed on sign checks
            fd_step: Step for :math:`\\nabla_x` differences
        """
        self.n = n
        self.n_samples = n_samples
        self.p_radii = tuple(p_radii)
        self.n_random_directions = n_random_directions
        self.x_lower, self.x_upper = x_lower, x_upper
        self.z_range = z_range
        self.seed = seed
        self.tol = tol
        self.fd_step = fd_step

    def directions(self, rng: np.random.Generator) -> np.ndarray:
        return np.vstack([np.eye(self.n), random_unit_vectors(self.n, self.n_random_directions, rng)])


class CheckResult:
    def __init__(self, sample: int, check: str, margin: float, passed: bool, coordinates: Dict[str, list]):
        self.sample = sample
        self.check = check
        self.margin = margin
        self.passed = passed
        self.coordinates = coordinates

    @property
    def dict(self) -> dict:
        return {'sample': self.sample, 'check': self.check, 'margin': self.margin, 'passed': self.passed,
                'coordinates': self.coordinates}


class ChiValidationReport:
    CHECKS = ('p_concavity', 'z_monotonicity', 'gradient_growth', 'size_growth')

    def __init__(self, chi_name: str, results: List[CheckResult], z_independent: bool):
        self.chi_name = chi_name
        self.results = results
        self.z_independent = z_independent

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    def worst(self, check: str) -> Optional[CheckResult]:
        results = [result for result in self.results if result.check == check]
        return min(results, key=lambda result: result.margin) if results else None

    def passed_check(self, check: str) -> bool:
        return all(result.passed for result in self.results if result.check == check)

    @property
    def violations(self) -> List[CheckResult]:
        return sorted([result for result in self.results if not result.passed], key=lambda result: result.margin)

    @property
    def dict(self) -> dict:
        summary = {}
        for check in self.CHECKS:
            worst = self.worst(check)
            if worst is not None:
                summary[check] = {'checks': sum(result.check == check for result in self.results),
                                  'passed': self.passed_check(check), 'worst': worst.dict}
        return {'chi': self.chi_name, 'passed': self.passed, 'z_independent': self.z_independent,
                'summary': summary, 'violations': [result.dict for result in self.violations[:20]]}


def _call(callback: ChiCallback, label: str, x: np.ndarray, z: float, p: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(callback(x, np.asarray(z, dtype=float), p), dtype=float)
    except Exception as e:
        raise ChiEvaluationError(f'chi callback {label} failed: {e!r}',
                                 {'x': x.tolist(), 'z': float(z), 'p': p.tolist()}) from e
    if not np.all(np.isfinite(out)):
        raise ChiEvaluationError(f'chi callback {label} returned non-finite values',
                                 {'x': x.tolist(), 'z': float(z), 'p': p.tolist()})
    return out


def validate_chi(chi: ChiSpec, plan: Optional[ChiSamplePlan] = None) -> ChiValidationReport:
    """Sample the structure conditions on :math:`\\chi`.

    Per sample :math:`(x, z, p_1, p_2)`: midpoint concavity of :math:`p \\mapsto \\chi^{\\xi\\xi}`,
    the sign of :math:`\\chi^{\\xi\\xi}_z`, and, when growth constants are supplied,
    :math:`p\\cdot\\nabla_x\\chi^{\\xi\\xi} \\leq \\bar\\psi_1|\\xi|^2(1+|p|^{\\gamma_1})` and
    :math:`|\\chi^{\\xi\\eta}|^2 \\leq \\bar\\psi_2|\\xi||\\eta|(1+|p|^{\\gamma_2})`.

    Args:
        chi: The perturbation to check
        plan: Sampling plan (defaults to :code:`ChiSamplePlan(chi.n)`)

    Returns:
        Report with one result per sample and check; margins are slack (negative means violated)

    """
    plan = ChiSamplePlan(chi.n) if plan is None else plan
    rng = np.random.default_rng(plan.seed)
    n = chi.n
    xis = plan.directions(rng)
    results = []
    z_independent = True
    for sample in range(plan.n_samples):
        x = rng.uniform(plan.x_lower, plan.x_upper, size=n)
        z = float(rng.uniform(*plan.z_range))
        radius = plan.p_radii[sample % len(plan.p_radii)]
        p1, p2 = random_unit_vectors(n, 2, rng) * radius
        coordinates = {'x': x.tolist(), 'z': z, 'p': p1.tolist()}

        def quad(a: np.ndarray) -> np.ndarray:
            return np.einsum('ai,ij,aj->a', xis, a, xis)

        c1 = _call(chi.value, 'value', x, z, p1)
        c2 = _call(chi.value, 'value', x, z, p2)
        cm = _call(chi.value, 'value', x, z, (p1 + p2) / 2)
        gap = quad(cm) - (quad(c1) + quad(c2)) / 2
        scale = 1 + np.max(np.abs([quad(c1), quad(c2)]))
        margin = float(np.min(gap))
        results.append(CheckResult(sample, 'p_concavity', margin, margin >= -plan.tol * scale, coordinates))

        dz = _call(chi.dz, 'dz', x, z, p1)
        z_independent &= bool(np.max(np.abs(dz)) <= 1e-12)
        margin = float(np.min(quad(dz)))
        results.append(CheckResult(sample, 'z_monotonicity', margin, margin >= -plan.tol, coordinates))

        norm_p = np.linalg.norm(p1)
        if chi.psi1 is not None:
            h = plan.fd_step
            lhs = np.zeros(len(xis))
            for s in range(n):
                step = h * np.eye(n)[s]
                forward = quad(_call(chi.value, 'value', x + step, z, p1))
                backward = quad(_call(chi.value, 'value', x - step, z, p1))
                lhs += p1[s] * (forward - backward) / (2 * h)
            rhs = chi.psi1 * np.sum(xis ** 2, axis=1) * (1 + norm_p ** chi.gamma1)
            margin = float(np.min(rhs - lhs))
            results.append(CheckResult(sample, 'gradient_growth', margin, margin >= -plan.tol, coordinates))
        if chi.psi2 is not None:
            lhs = np.einsum('ai,ij,bj->ab', xis, c1, xis) ** 2
            lengths = np.linalg.norm(xis, axis=1)
            rhs = chi.psi2 * np.outer(lengths, lengths) * (1 + norm_p ** chi.gamma2)
            margin = float(np.min(rhs - lhs))
            results.append(CheckResult(sample, 'size_growth', margin, margin >= -plan.tol, coordinates))

    report = ChiValidationReport(chi.name, results, z_independent)
    if not report.passed:
        logger.warning('chi %r violates %d sampled structure checks.', chi.name, len(report.violations))
    return report
