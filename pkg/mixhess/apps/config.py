import json
from dataclasses import asdict, field, fields
from typing import List, Literal, Optional, Union

from pydantic import ConfigDict, TypeAdapter, ValidationError, conint
from pydantic.dataclasses import dataclass

from ..errors import ConfigError
from ..solver.options import SolverOptions

Coefficient = Union[float, str]
STRICT = ConfigDict(extra='forbid')


@dataclass(config=STRICT)
class BoxConfig:
    lower: Union[float, List[float]] = -1.0
    upper: Union[float, List[float]] = 1.0


@dataclass(config=STRICT)
class ChiConfig:
    """Built-in perturbation with optional growth constants for the structure checks."""
    kind: Literal['zero', 'constant', 'shifted-identity', 'linear-z', 'gradient-quadratic'] = 'zero'
    scale: float = 1.0
    matrix: Optional[List[List[float]]] = None
    psi1: Optional[float] = None
    psi2: Optional[float] = None
    gamma1: Optional[float] = None
    gamma2: Optional[float] = None


@dataclass(config=STRICT)
class RunConfig:
    """A run: a built-in problem and overrides, or a fully specified custom problem.

    Attributes:
        problem: Built-in problem name (omit for a custom problem)
        n: Dimension
        k: Operator order
        alphas: Constant :math:`\\alpha_0..\\alpha_{k-2}`, numbers or expressions in :code:`x1..xn`
        rhs: :math:`\\alpha_{k-1}`
        phi: Boundary data
        exact: Manufactured solution; the right-hand side is then derived from it
        chi: Perturbation tensor
        box: Box corners
        resolution: Nodes per axis, one count or one per axis
        subsolution: Subsolution expression (defaults to :code:`phi`)
        solver: Solver options
        seed: Seed of all random sampling
        samples: Sample count per property suite
        grids: Resolutions of a convergence study
        output: Output directory
        verbosity: 0 quiet, 1 info, 2 debug
    """
    problem: Optional[str] = None
    n: Optional[conint(ge=2, le=4)] = None
    k: Optional[conint(ge=2)] = None
    alphas: Optional[List[Coefficient]] = None
    rhs: Optional[Coefficient] = None
    phi: Optional[Coefficient] = None
    exact: Optional[Coefficient] = None
    chi: Optional[ChiConfig] = None
    box: Optional[BoxConfig] = None
    resolution: Optional[Union[conint(ge=5), List[conint(ge=5)]]] = None
    subsolution: Optional[Coefficient] = None
    solver: SolverOptions = field(default_factory=SolverOptions)
    seed: int = 0
    samples: Optional[conint(ge=0)] = None
    grids: Optional[List[conint(ge=5)]] = None
    output: Optional[str] = None
    verbosity: conint(ge=0, le=2) = 1

    def replace(self, **changes) -> 'RunConfig':
        data = asdict(self)
        for key, value in changes.items():
            if key == 'solver' and isinstance(value, dict):
                data['solver'].update(value)
            else:
                data[key] = value
        return _validate(data)


NESTED = {'solver': SolverOptions, 'chi': ChiConfig, 'box': BoxConfig}


def _check_keys(data: dict):
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f'Unknown key(s) {unknown}; known keys are {sorted(known)}.')
    for key, cls in NESTED.items():
        if isinstance(data.get(key), dict):
            allowed = {f.name for f in fields(cls)}
            unknown = sorted(set(data[key]) - allowed)
            if unknown:
                raise ConfigError(f'Unknown key(s) {unknown} in "{key}"; known keys are {sorted(allowed)}.')


def _validate(data: dict) -> RunConfig:
    _check_keys(data)
    try:
        cfg = TypeAdapter(RunConfig).validate_python(data)
    except ValidationError as e:
        details = '; '.join(f"{'.'.join(str(part) for part in error['loc']) or '<root>'}: {error['msg']}"
                            for error in e.errors())
        raise ConfigError(f'Invalid config: {details}') from e
    except ValueError as e:
        raise ConfigError(f'Invalid config: {e}') from e
    if cfg.n is not None and cfg.k is not None and cfg.k > cfg.n:
        raise ConfigError(f'k <= n required (got k = {cfg.k}, n = {cfg.n}).')
    if cfg.k is not None and cfg.alphas is not None and len(cfg.alphas) != cfg.k - 1:
        raise ConfigError(f'alphas must hold k - 1 = {cfg.k - 1} entries (got {len(cfg.alphas)}).')
    if cfg.n is not None and isinstance(cfg.resolution, list) and len(cfg.resolution) != cfg.n:
        raise ConfigError(f'resolution must hold n = {cfg.n} counts (got {len(cfg.resolution)}).')
    return cfg


def parse_config(source: str) -> RunConfig:
    """Parse a JSON object into a validated :code:`RunConfig`.

    Args:
        source: UTF-8 JSON text

    Returns:
        The config, with unset keys left :code:`None` so built-in problems can fill them

    Raises:
        ConfigError: malformed JSON (with line and column), unknown keys, type errors or violated rules

    """
    try:
        data = json.loads(source)
    except json.JSONDecodeError as e:
        raise ConfigError(f'Config is not valid JSON: line {e.lineno}, column {e.colno}: {e.msg}') from e
    if not isinstance(data, dict):
        raise ConfigError(f'Config must be a JSON object, got {type(data).__name__}.')
    return _validate(data)


def serialize(cfg: RunConfig) -> str:
    return json.dumps(asdict(cfg), indent=2)
