import logging
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb

from ..model.chi import ChiSamplePlan, ChiSpec, make_chi, validate_chi
from ..model.operator import (OperatorParams, degeneracy_probe, evaluate_batch, refined_trace_lower_bound,
                              trace_lower_bound)
from ..model.symmetric import (in_cone, newton_inequality_ratio, newton_maclaurin_gap, sigma, sigma_gradient,
                               sigma_restricted_all)
from ..utils import random_admissible_tensor, random_cone_vector, random_orthogonal
from .config import RunConfig
from .problems import build_chi, resolve

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-12
PROPERTY_TOL = 1e-10
FD_STEP = 1e-6
FD_TOL = 1e-6

NM_CASES = ((3, 2), (4, 3), (5, 4))
TRACE_CASES = ((3, 3), (5, 3), (5, 4))
GRADIENT_CASES = ((3, 3), (4, 3), (5, 4))

DEFAULT_COUNTS = {
    'sigma_oracle': 500,
    'sigma_symmetry': 500,
    'sigma_gradient': 200,
    'cone_restriction': 500,
    'newton_maclaurin': 1000,
    'newton_inequality': 1000,
    'trace_bound': 1000,
    'refined_trace_bound': 1000,
    'ellipticity': 1000,
    'concavity': 1000,
    'operator_gradient': 200,
    'rotation_invariance': 200,
    'form_equivalence': 500,
    'degeneracy': 1,
    'chi_conditions': 256,
    'configured_chi': 256,
}


class PropertyResult:
    def __init__(self, name: str, margins: np.ndarray, passed: np.ndarray, sample: Callable[[int], dict]):
        """Outcome of one property suite.

        Args:
            name: Property id
            margins: Slack per check, negative means violated
            passed: Pass flag per check (tolerances already applied)
            sample: Maps a check index to a serializable description of its input
        """
        self.name = name
        self.margins = np.asarray(margins, dtype=float)
        self.passed = np.asarray(passed, dtype=bool)
        self._sample = sample

    @property
    def checks(self) -> int:
        return int(self.margins.size)

    @property
    def ok(self) -> bool:
        return bool(np.all(self.passed))

    @property
    def dict(self) -> dict:
        out = {'property': self.name, 'checks': self.checks, 'passed': int(np.sum(self.passed)), 'ok': self.ok,
               'worst_margin': float(np.min(self.margins)) if self.checks else None}
        if not self.ok:
            first = int(np.argmin(self.passed))
            out['failing_sample'] = dict(self._sample(first), margin=float(self.margins[first]))
        return out


def _result(name: str, margins: Sequence[float], samples: List[dict], strict: bool = False) -> PropertyResult:
    margins = np.asarray(margins, dtype=float).ravel()
    passed = margins > 0 if strict else margins >= 0
    return PropertyResult(name, margins, passed, lambda i: samples[i])


def _subset_sigma(k: int, lam: np.ndarray) -> float:
    return float(sum(np.prod(lam[list(subset)]) for subset in combinations(range(lam.size), k)))


def sigma_oracle(rng: np.random.Generator, count: int) -> PropertyResult:
    """Recurrence against subset enumeration, relative to :math:`\\sigma_k(|\\lambda|)`."""
    margins, samples = [], []
    for _ in range(count):
        n = int(rng.integers(2, 7))
        lam = rng.standard_normal(n) * 2
        errors = [abs(sigma(k, lam) - _subset_sigma(k, lam)) / max(_subset_sigma(k, np.abs(lam)), 1e-300)
                  for k in range(n + 1)]
        margins.append(ORACLE_TOL - max(errors))
        samples.append({'lambda': lam})
    return _result('sigma_oracle', margins, samples)


def sigma_symmetry(rng: np.random.Generator, count: int) -> PropertyResult:
    margins, samples = [], []
    for _ in range(count):
        n = int(rng.integers(2, 7))
        lam = rng.standard_normal(n)
        permuted = rng.permutation(lam)
        scale = [max(_subset_sigma(k, np.abs(lam)), 1e-300) for k in range(n + 1)]
        margins.append(ORACLE_TOL - max(abs(sigma(k, lam) - sigma(k, permuted)) / scale[k] for k in range(n + 1)))
        samples.append({'lambda': lam, 'permuted': permuted})
    return _result('sigma_symmetry', margins, samples)


def sigma_gradient_fd(rng: np.random.Generator, count: int) -> PropertyResult:
    margins, samples = [], []
    for _ in range(count):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n + 1))
        lam = rng.standard_normal(n)
        eye = FD_STEP * np.eye(n)
        fd = np.array([(sigma(k, lam + eye[i]) - sigma(k, lam - eye[i])) / (2 * FD_STEP) for i in range(n)])
        grad = sigma_gradient(k, lam)
        margins.append(FD_TOL - np.max(np.abs(fd - grad)) / max(np.max(np.abs(grad)), 1))
        samples.append({'k': k, 'lambda': lam})
    return _result('sigma_gradient', margins, samples)


def cone_restriction(rng: np.random.Generator, count: int) -> PropertyResult:
    """:math:`\\lambda \\in \\Gamma_m` implies :math:`(\\lambda | i) \\in \\Gamma_{m-1}` for every :math:`i`."""
    margins, samples = [], []
    for _ in range(count):
        n = int(rng.integers(3, 7))
        m = int(rng.integers(2, n + 1))
        lam = random_cone_vector(n, m, rng)
        restricted = sigma_restricted_all(lam)[:, 1:m]
        margins.append(float(np.min(restricted)) if in_cone(m, lam) else -1.0)
        samples.append({'m': m, 'lambda': lam})
    return _result('cone_restriction', margins, samples, strict=True)


def newton_maclaurin(rng: np.random.Generator, count: int) -> PropertyResult:
    margins, samples = [], []
    for n, m in NM_CASES:
        for _ in range(count):
            lam = random_cone_vector(n, m, rng)
            l = int(rng.integers(0, m))
            s = int(rng.integers(0, l + 1))
            r = int(rng.integers(s + 1, m + 1))
            margins.append(newton_maclaurin_gap(m, l, r, s, lam) + PROPERTY_TOL)
            samples.append({'n': n, 'm': m, 'l': l, 'r': r, 's': s, 'lambda': lam})
    return _result('newton_maclaurin', margins, samples)


def newton_inequality(rng: np.random.Generator, count: int) -> PropertyResult:
    margins, samples = [], []
    for n, k in TRACE_CASES:
        for _ in range(count):
            lam = random_cone_vector(n, k - 1, rng)
            margins.append(1 + PROPERTY_TOL - newton_inequality_ratio(k, lam))
            samples.append({'n': n, 'k': k, 'lambda': lam})
    return _result('newton_inequality', margins, samples)


def _operator_samples(rng: np.random.Generator, count: int, n: int, k: int,
                      min_sigma: float = 0) -> Tuple[np.ndarray, np.ndarray]:
    u = np.stack([random_admissible_tensor(n, k - 1, rng, min_sigma=min_sigma) for _ in range(count)]) \
        if count else np.zeros((0, n, n))
    u = (u + np.swapaxes(u, 1, 2)) / 2
    alphas = rng.uniform(0.05, 1, size=(k - 1, count))
    return u, alphas


def _operator_sample(n: int, k: int, u: np.ndarray, alphas: np.ndarray, i: int) -> dict:
    return {'n': n, 'k': k, 'U': u[i], 'alphas': alphas[:, i]}


def _per_case(rng: np.random.Generator, count: int, cases, check, min_sigma: float = 0):
    margins, samples = [], []
    for n, k in cases:
        u, alphas = _operator_samples(rng, count, n, k, min_sigma)
        margins.extend(check(n, k, u, alphas))
        samples.extend(_operator_sample(n, k, u, alphas, i) for i in range(count))
    return margins, samples


def trace_bound(rng: np.random.Generator, count: int) -> PropertyResult:
    def check(n, k, u, alphas):
        batch = evaluate_batch(u, alphas, k)
        return batch.trace - trace_lower_bound(OperatorParams(n, k, np.zeros(k - 1))) + PROPERTY_TOL

    return _result('trace_bound', *_per_case(rng, count, TRACE_CASES, check))


def refined_trace_bound(rng: np.random.Generator, count: int) -> PropertyResult:
    def check(n, k, u, alphas):
        batch = evaluate_batch(u, alphas, k)
        bounds = [refined_trace_lower_bound(batch.eigenvalues[i], OperatorParams(n, k, alphas[:, i]))
                  for i in range(len(u))]
        return batch.trace - np.asarray(bounds) + PROPERTY_TOL * (1 + np.abs(batch.trace))

    return _result('refined_trace_bound', *_per_case(rng, count, TRACE_CASES, check))


def ellipticity(rng: np.random.Generator, count: int) -> PropertyResult:
    def check(n, k, u, alphas):
        return evaluate_batch(u, alphas, k).min_ellipticity

    return _result('ellipticity', *_per_case(rng, count, TRACE_CASES, check), strict=True)


def concavity(rng: np.random.Generator, count: int) -> PropertyResult:
    margins, samples = [], []
    for n, k in TRACE_CASES:
        u1, alphas = _operator_samples(rng, count, n, k)
        u2, _ = _operator_samples(rng, count, n, k)
        g1 = evaluate_batch(u1, alphas, k).value
        g2 = evaluate_batch(u2, alphas, k).value
        mid = evaluate_batch((u1 + u2) / 2, alphas, k).value
        margins.extend(mid - (g1 + g2) / 2 + PROPERTY_TOL)
        samples.extend({'n': n, 'k': k, 'U1': u1[i], 'U2': u2[i], 'alphas': alphas[:, i]} for i in range(count))
    return _result('concavity', margins, samples)


def operator_gradient(rng: np.random.Generator, count: int) -> PropertyResult:
    """:math:`G^{ij}` against central differences of :math:`G` along :math:`e_ie_j^T + e_je_i^T`."""

    def check(n, k, u, alphas):
        batch = evaluate_batch(u, alphas, k)
        scale = np.maximum(np.max(np.abs(batch.gradient), axis=(1, 2)), 1e-300)
        worst = np.zeros(len(u))
        for i in range(n):
            for j in range(i, n):
                direction = np.zeros((n, n))
                direction[i, j] = direction[j, i] = 1
                plus = evaluate_batch(u + FD_STEP * direction, alphas, k).value
                minus = evaluate_batch(u - FD_STEP * direction, alphas, k).value
                fd = (plus - minus) / (2 * FD_STEP)
                analytic = batch.gradient[:, i, j] * (1 if i == j else 2)
                worst = np.maximum(worst, np.abs(fd - analytic) / scale)
        return FD_TOL - worst

    return _result('operator_gradient', *_per_case(rng, count, GRADIENT_CASES, check, min_sigma=0.05))


def rotation_invariance(rng: np.random.Generator, count: int) -> PropertyResult:
    margins, samples = [], []
    for n, k in TRACE_CASES:
        u, alphas = _operator_samples(rng, count, n, k)
        q = np.stack([random_orthogonal(n, rng) for _ in range(count)]) if count else np.zeros((0, n, n))
        rotated = q @ u @ np.swapaxes(q, 1, 2)
        rotated = (rotated + np.swapaxes(rotated, 1, 2)) / 2
        g = evaluate_batch(u, alphas, k).value
        g_rot = evaluate_batch(rotated, alphas, k).value
        margins.extend(PROPERTY_TOL * (1 + np.abs(g)) - np.abs(g - g_rot))
        samples.extend(dict(_operator_sample(n, k, u, alphas, i), Q=q[i]) for i in range(count))
    return _result('rotation_invariance', margins, samples)


def form_equivalence(rng: np.random.Generator, count: int) -> PropertyResult:
    """:math:`(G(U) - a)\\sigma_{k-1} = \\sigma_k - \\sum_{l<k-1}\\alpha_l\\sigma_l - a\\sigma_{k-1}` for random
    :math:`a` and for :math:`a = G(U)`, where the right side is the residual of the polynomial form."""
    margins, samples = [], []
    for n, k in TRACE_CASES:
        u, alphas = _operator_samples(rng, count, n, k)
        batch = evaluate_batch(u, alphas, k)
        e = batch.sigmas
        for a in (rng.uniform(0, 1, size=count), batch.value):
            lower = np.sum(alphas * e[:, :k - 1].T, axis=0)
            lhs = (batch.value - a) * e[:, k - 1]
            rhs = e[:, k] - lower - a * e[:, k - 1]
            scale = np.abs(e[:, k]) + np.abs(lower) + np.abs(a * e[:, k - 1])
            margins.extend(PROPERTY_TOL * scale - np.abs(lhs - rhs))
            samples.extend(dict(_operator_sample(n, k, u, alphas, i), a=a[i]) for i in range(count))
    return _result('form_equivalence', margins, samples)


def degeneracy_path(n: int, k: int, points: int = 60, closest: float = 1e-10) -> Tuple[np.ndarray, np.ndarray]:
    """Path :math:`(1, \\ldots, 1, t)` from :math:`t = 1` toward the first zero of :math:`\\sigma_{k-1}`,
    :math:`t_* = -\\binom{n-1}{k-1}/\\binom{n-1}{k-2}`, with geometrically shrinking distance to :math:`t_*`."""
    t_star = -comb(n - 1, k - 1) / comb(n - 1, k - 2)
    t = t_star + (1 - t_star) * np.geomspace(1, closest, points)
    path = np.ones((points, n))
    path[:, -1] = t
    return t, path


def degeneracy(rng: np.random.Generator, count: int) -> PropertyResult:
    """With :math:`\\alpha = (0.5, 0.5)`, :math:`G` along :math:`(1, 1, t)` ends strictly decreasing and below
    :math:`-10^3`; with :math:`\\alpha = 0` the quotient :math:`\\sigma_3/\\sigma_2` is :math:`\\leq 0` once
    :math:`\\sigma_2 = 10^{-8}`."""
    if count == 0:
        return _result('degeneracy', [], [])
    n, k = 3, 3
    _, path = degeneracy_path(n, k)
    values = degeneracy_probe(path, OperatorParams(n, k, [0.5, 0.5]))
    tail = values[len(values) // 2:]
    near = np.array([[1, 1, -0.5 + 0.5e-8]])
    quotient = degeneracy_probe(near, OperatorParams(n, k, [0, 0]))[0]
    margins = [float(np.min(tail[:-1] - tail[1:])), -1e3 - float(values[-1]), -quotient]
    samples = [{'check': 'strictly decreasing tail', 'values': tail},
               {'check': 'drops below -1e3', 'final': values[-1], 't_final': path[-1, -1]},
               {'check': 'quotient limit <= 0', 'lambda': near[0], 'quotient': quotient}]
    passed = np.array([margins[0] > 0, margins[1] > 0, margins[2] >= 0])
    return PropertyResult('degeneracy', margins, passed, lambda i: samples[i])


CHI_GROWTH = {'psi1': 1.0, 'gamma1': 1.0, 'psi2': 1.0, 'gamma2': 1.0}

# gradient-quadratic grows like |p|^2 in size, so only the x-gradient bound applies to it
BUILTIN_CHI_CHECKS = {
    'zero': CHI_GROWTH,
    'constant': CHI_GROWTH,
    'linear-z': CHI_GROWTH,
    'gradient-quadratic': {'psi1': 1.0, 'gamma1': 1.0},
}

CONFIGURED_CHI = 'configured_chi'


def _chi_results(name: str, chis: Dict[str, ChiSpec], rng: np.random.Generator, count: int) -> PropertyResult:
    margins, passed, samples = [], [], []
    for label, chi in chis.items():
        plan = ChiSamplePlan(chi.n, n_samples=count, seed=int(rng.integers(2 ** 31)))
        report = validate_chi(chi, plan)
        for result in report.results:
            margins.append(result.margin)
            passed.append(result.passed)
            samples.append(dict(result.dict, chi=label))
    return PropertyResult(name, margins, passed, lambda i: samples[i])


def chi_conditions(rng: np.random.Generator, count: int) -> PropertyResult:
    """Sampled structure checks on the built-ins: concavity in :math:`p`, :math:`\\chi_z \\geq 0`, and the
    growth bounds with :math:`\\bar\\psi = 1`, :math:`\\gamma = 1`."""
    chis = {kind: make_chi(kind, 3, **growth) for kind, growth in BUILTIN_CHI_CHECKS.items()}
    return _chi_results('chi_conditions', chis, rng, count)


def configured_chi(cfg: RunConfig) -> Optional[ChiSpec]:
    """The config's own perturbation (with its growth constants), if it names one."""
    resolved = resolve(cfg)
    if resolved.get('chi') is None:
        return None
    return build_chi(dict(resolved, n=resolved.get('n') or 3))


SUITES: Dict[str, Callable[[np.random.Generator, int], PropertyResult]] = {
    'sigma_oracle': sigma_oracle,
    'sigma_symmetry': sigma_symmetry,
    'sigma_gradient': sigma_gradient_fd,
    'cone_restriction': cone_restriction,
    'newton_maclaurin': newton_maclaurin,
    'newton_inequality': newton_inequality,
    'trace_bound': trace_bound,
    'refined_trace_bound': refined_trace_bound,
    'ellipticity': ellipticity,
    'concavity': concavity,
    'operator_gradient': operator_gradient,
    'rotation_invariance': rotation_invariance,
    'form_equivalence': form_equivalence,
    'degeneracy': degeneracy,
    'chi_conditions': chi_conditions,
}


def run_properties(cfg: RunConfig, suites: Optional[Sequence[str]] = None) -> Tuple[int, dict]:
    """Run the seeded property suites.

    Suite :code:`i` draws from :code:`np.random.default_rng([seed, i])`, so reports are reproducible and
    independent of which other suites run. :code:`cfg.samples` replaces every default sample count. A config
    naming a :code:`chi` adds the suite :code:`configured_chi`, which samples that perturbation with its own
    growth constants.

    Returns:
        Exit status (0 iff every check passes, else 1) and the report

    Raises:
        ConfigError: the config's :code:`chi` block is invalid

    """
    runners = dict(SUITES)
    chi = configured_chi(cfg)
    if chi is not None:
        runners[CONFIGURED_CHI] = lambda rng, count: _chi_results(CONFIGURED_CHI, {chi.name: chi}, rng, count)
    names = list(runners) if suites is None else list(suites)
    results = []
    for index, name in enumerate(runners):
        if name not in names:
            continue
        count = DEFAULT_COUNTS[name] if cfg.samples is None else cfg.samples
        rng = np.random.default_rng([cfg.seed, index])
        result = runners[name](rng, count)
        level = logging.INFO if result.ok else logging.WARNING
        logger.log(level, '%s: %d/%d checks passed.', name, int(np.sum(result.passed)), result.checks)
        results.append(result)
    total = sum(result.checks for result in results)
    ok = all(result.ok for result in results)
    report = {'seed': cfg.seed, 'samples': cfg.samples, 'checks': total, 'vacuous': total == 0, 'ok': ok,
              'properties': [result.dict for result in results]}
    return (0 if ok else 1), report
