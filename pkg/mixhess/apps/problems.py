"""Built-in problem library.

Every built-in is a dict of config defaults; a :code:`RunConfig` overrides any of them.

- :code:`quadratic-mms`: :math:`u_* = |x|^2/2` on :math:`[-1, 1]^3`, :math:`k = 3`, :math:`\\alpha = (0.3, 0.1)`,
  :math:`\\chi = 0`; the discrete solution is :math:`u_*` at the nodes.
- :code:`trig-perturbed-mms`: :math:`u_* = |x|^2/2 + 0.05\\sin x_1 \\sin x_2 \\sin x_3`, second order in :math:`h`.
- :code:`chi-linear-z`: the trigonometric solution with :math:`\\chi = z\\delta`, so :math:`\\chi_z \\geq 0`.
- :code:`strict-subsolution`: :math:`\\underline{u} = |x|^2/2` and :math:`\\alpha_2 \\equiv G(I) - 0.02`, a strict
  subsolution with unknown solution.
- :code:`degeneracy-sweep`: no solve; :math:`G` along :math:`(1, \\ldots, 1, t)` toward :math:`\\partial\\Gamma_{k-1}`.
"""
import logging
from dataclasses import asdict
from typing import Dict, Optional

import numpy as np

from ..discretization.fields import as_field
from ..discretization.grid import Box, from_field
from ..errors import ConfigError, DomainError
from ..model.chi import ChiSpec, make_chi
from ..model.operator import OperatorParams, eval_G
from ..model.spectral import SymTensor
from ..solver.problem import ProblemSpec, mms_problem
from .config import RunConfig

logger = logging.getLogger(__name__)

STRICT_GAP = 0.02
STRICT_RHS = 'strict'


def quadratic(n: int) -> str:
    return '(' + ' + '.join(f'x{i}**2' for i in range(1, n + 1)) + ')/2'


def trig(n: int) -> str:
    return quadratic(n) + ' + 0.05*' + '*'.join(f'sin(x{i})' for i in range(1, n + 1))


BASE = {'n': 3, 'k': 3, 'alphas': [0.3, 0.1], 'box': {'lower': -1.0, 'upper': 1.0}, 'resolution': 17}

BUILTINS: Dict[str, dict] = {
    'quadratic-mms': dict(BASE, exact=quadratic, chi={'kind': 'zero'}),
    'trig-perturbed-mms': dict(BASE, exact=trig, chi={'kind': 'zero'}, grids=[9, 17]),
    'chi-linear-z': dict(BASE, exact=trig, chi={'kind': 'linear-z', 'scale': 1.0}, grids=[9, 17]),
    'strict-subsolution': dict(BASE, phi=quadratic, subsolution=quadratic, rhs=STRICT_RHS, chi={'kind': 'zero'}),
    'degeneracy-sweep': dict(BASE, alphas=[0.5, 0.5], samples=60),
}


def resolve(cfg: RunConfig) -> dict:
    """Merge a config over its built-in defaults; :code:`None` entries do not override."""
    explicit = {key: value for key, value in asdict(cfg).items() if value is not None}
    if cfg.problem is None:
        return explicit
    if cfg.problem not in BUILTINS:
        raise ConfigError(f'Unknown problem {cfg.problem!r}; built-ins are {sorted(BUILTINS)}.')
    merged = dict(BUILTINS[cfg.problem])
    merged.update(explicit)
    for key, value in merged.items():
        if callable(value):
            merged[key] = value(merged['n'])
    if merged['k'] > merged['n']:
        raise ConfigError(f"k <= n required (got k = {merged['k']}, n = {merged['n']}).")
    if len(merged['alphas']) != merged['k'] - 1:
        raise ConfigError(f"alphas must hold k - 1 = {merged['k'] - 1} entries (got {len(merged['alphas'])}).")
    return merged


def _require(resolved: dict, *keys: str):
    missing = [key for key in keys if resolved.get(key) is None]
    if missing:
        raise ConfigError(f'Config is missing {missing}.')


def build_params(resolved: dict, box: Optional[Box] = None) -> OperatorParams:
    """Operator parameters; coefficients given as expressions enter through their value at the box center."""
    _require(resolved, 'n', 'k', 'alphas')
    n = resolved['n']
    center = np.zeros(n) if box is None else (box.lower + box.upper) / 2
    try:
        alphas = [float(as_field(a, n)(center)) if isinstance(a, str) else a for a in resolved['alphas']]
        return OperatorParams(n, resolved['k'], alphas)
    except DomainError as e:
        raise ConfigError(str(e)) from e


def build_box(resolved: dict, resolution=None) -> Box:
    _require(resolved, 'n')
    n = resolved['n']
    box = resolved.get('box') or {}
    counts = resolved.get('resolution', 17) if resolution is None else resolution
    lower = box.get('lower', -1.0)
    upper = box.get('upper', 1.0)
    try:
        return Box(np.broadcast_to(lower, (n,)), np.broadcast_to(upper, (n,)), np.broadcast_to(counts, (n,)))
    except (DomainError, ValueError) as e:
        raise ConfigError(f'Invalid box: {e}') from e


def build_chi(resolved: dict) -> ChiSpec:
    chi = resolved.get('chi') or {'kind': 'zero'}
    growth = {key: chi[key] for key in ('psi1', 'psi2', 'gamma1', 'gamma2') if chi.get(key) is not None}
    try:
        return make_chi(chi.get('kind', 'zero'), resolved['n'], scale=chi.get('scale', 1.0), matrix=chi.get('matrix'),
                        **growth)
    except DomainError as e:
        raise ConfigError(f'Invalid chi: {e}') from e


def build_problem(cfg: RunConfig, resolution=None) -> ProblemSpec:
    """Turn a config into a :code:`ProblemSpec` on the requested grid.

    With :code:`exact` set the problem is manufactured from it; otherwise :code:`rhs`, :code:`phi` and
    :code:`subsolution` (defaulting to :code:`phi`) are used as given.

    Raises:
        ConfigError: missing or malformed entries
        SpecError: the manufactured solution is inadmissible
    """
    resolved = resolve(cfg)
    if cfg.problem == 'degeneracy-sweep':
        raise ConfigError('degeneracy-sweep has no boundary value problem to build.')
    box = build_box(resolved, resolution)
    params = build_params(resolved, box)
    chi = build_chi(resolved)
    n = params.n
    name = cfg.problem or 'custom'
    alpha_fields = None
    if any(isinstance(a, str) for a in resolved['alphas']):
        alpha_fields = resolved['alphas']
    try:
        if resolved.get('exact') is not None:
            if alpha_fields is not None:
                raise ConfigError('Manufactured problems need constant alphas.')
            return mms_problem(as_field(resolved['exact'], n), chi, params, box, name=name)
        _require(resolved, 'rhs', 'phi')
        phi = as_field(resolved['phi'], n)
        subsolution = from_field(box, as_field(resolved.get('subsolution', resolved['phi']), n))
        rhs = resolved['rhs']
        if rhs == STRICT_RHS:
            rhs = eval_G(SymTensor.identity(n), params).value - STRICT_GAP
        return ProblemSpec(box, params, rhs, phi, subsolution, chi=chi, alpha_fields=alpha_fields, name=name)
    except DomainError as e:
        raise ConfigError(f'Invalid field in config: {e}') from e
