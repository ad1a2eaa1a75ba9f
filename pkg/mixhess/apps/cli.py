import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, ContinuationFailure, DomainError, SolverError, SpecError
from ..model.operator import classify, degeneracy_probe
from ..model.symmetric import sigma_all
from ..solver.continuation import continuity_solve
from . import report
from .config import RunConfig, parse_config
from .problems import BUILTINS, build_params, build_problem, resolve
from .properties import degeneracy_path, run_properties

logger = logging.getLogger(__name__)

EXIT_CODES = {
    'success': 0,
    'property-failure': 1,
    'solver-failure': 2,
    'spec-error': 3,
}

OUTPUT_ENV = 'MIXHESS_OUTPUT'
DEFAULT_OUTPUT = 'mixhess-out'
LOG_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG}


def exit_code(error: Exception) -> int:
    if isinstance(error, SolverError):
        return EXIT_CODES['solver-failure']
    if isinstance(error, (SpecError, ConfigError, DomainError)):
        return EXIT_CODES['spec-error']
    raise error


def output_dir(cfg: RunConfig, out: Optional[str] = None) -> Path:
    """:code:`--out` wins over :code:`MIXHESS_OUTPUT`, which wins over the config's :code:`output`."""
    return Path(out or os.environ.get(OUTPUT_ENV) or cfg.output or DEFAULT_OUTPUT)


def load_config(source: Optional[str]) -> RunConfig:
    """A built-in problem name or the path of a JSON config; :code:`None` gives the defaults."""
    if source is None:
        return RunConfig()
    path = Path(source)
    if path.is_file():
        return parse_config(path.read_text(encoding='utf-8'))
    if source in BUILTINS:
        return RunConfig(problem=source)
    raise ConfigError(f'{source!r} is neither a config file nor a built-in problem {sorted(BUILTINS)}.')


def run_degeneracy(cfg: RunConfig, out_dir: Path) -> int:
    """Tabulate :math:`G` along :math:`(1, \\ldots, 1, t)` as :math:`t` approaches :math:`\\partial\\Gamma_{k-1}`."""
    resolved = resolve(cfg)
    params = build_params(resolved)
    t, path = degeneracy_path(params.n, params.k, points=resolved.get('samples') or 60)
    values = degeneracy_probe(path, params)
    sigma_km1 = sigma_all(path)[:, params.k - 1]
    report.write_degeneracy(out_dir, [(float(a), float(b), float(c)) for a, b, c in zip(t, sigma_km1, values)])
    summary = report.summary(cfg.problem, None, None, 'tabulated')
    summary.update(family=classify(params), strict_regime=params.in_strict_regime)
    report.write_json(out_dir, report.SUMMARY, summary)
    return EXIT_CODES['success']


def run_solve(cfg: RunConfig, out_dir: Path, progress: bool = False) -> int:
    """Solve one problem and write the solution dump, stage records, Newton log, norms and summary.

    A config that sets :code:`grids` also gets the convergence study of :func:`run_convergence`; the defaults
    of built-in problems do not count.

    Returns:
        0 on convergence to :math:`t = 1` (and of every grid), 2 on solver failure, 3 on spec or config errors

    """
    if cfg.problem == 'degeneracy-sweep':
        return run_degeneracy(cfg, out_dir)
    name = cfg.problem or 'custom'
    spec = None
    try:
        spec = build_problem(cfg)
        if not spec.params.in_strict_regime:
            logger.warning('k = %d with alphas %s lies outside 3 <= k, alpha_l > 0.', spec.params.k,
                           spec.params.alphas.tolist())
        result = continuity_solve(spec, cfg.solver, progress=progress)
    except ContinuationFailure as e:
        logger.error('%s', e)
        report.write_json(out_dir, report.SUMMARY, report.summary(name, spec, None, 'continuation-failure',
                                                                  last_t=e.last_t))
        return EXIT_CODES['solver-failure']
    except (SolverError, SpecError, ConfigError, DomainError) as e:
        logger.error('%s', e)
        code = exit_code(e)
        verdict = 'solver-failure' if code == EXIT_CODES['solver-failure'] else 'spec-error'
        report.write_json(out_dir, report.SUMMARY, report.summary(name, spec, None, verdict))
        return code
    max_error = None if spec.exact is None else result.max_error(spec.exact)
    report.write_solution(out_dir, result.u, spec.params.k)
    report.write_continuation(out_dir, result.records)
    report.write_newton_log(out_dir, result.newton_log)
    report.write_norms(out_dir, result.records)
    report.write_json(out_dir, report.SUMMARY, report.summary(name, spec, result, 'converged', max_error))
    logger.info('Converged: %d Newton steps, residual %.3e%s.', result.total_newton_iters, result.residual,
                '' if max_error is None else f', max error {max_error:.3e}')
    if cfg.grids:
        status, _ = run_convergence(cfg, cfg.grids, out_dir)
        return status
    return EXIT_CODES['success']


def run_convergence(cfg: RunConfig, grids: Sequence[int], out_dir: Path) -> Tuple[int, List[float]]:
    """Solve a manufactured problem on each resolution and measure the error order between consecutive grids.

    Returns:
        Exit status and the measured orders (one per grid pair)

    """
    rows, orders = [], []
    previous = None
    try:
        for resolution in grids:
            spec = build_problem(cfg, resolution=resolution)
            if spec.exact is None:
                raise ConfigError(f'Convergence studies need a manufactured solution ("exact"), {spec.name} has none.')
            result = continuity_solve(spec, cfg.solver)
            error = result.max_error(spec.exact)
            h = float(spec.box.h[0])
            order = None
            if previous is not None:
                order = float(np.log(previous[1] / error) / np.log(previous[0] / h))
                orders.append(order)
            rows.append((resolution, h, error, '' if order is None else order))
            logger.info('resolution %d: h = %.4g, max error %.3e%s', resolution, h, error,
                        '' if order is None else f', order {order:.3f}')
            previous = (h, error)
    except (SolverError, SpecError, ConfigError, DomainError) as e:
        logger.error('%s', e)
        return exit_code(e), orders
    report.write_convergence(out_dir, rows)
    return EXIT_CODES['success'], orders


def run_check(cfg: RunConfig, out_dir: Path) -> int:
    try:
        status, payload = run_properties(cfg)
    except ConfigError as e:
        logger.error('%s', e)
        return EXIT_CODES['spec-error']
    report.write_json(out_dir, report.PROPERTIES, payload)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='mixhess', description='Mixed Hessian equations: solve, check, converge.')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='seed of all random sampling')
    common.add_argument('--out', help=f'output directory (overrides ${OUTPUT_ENV})')
    common.add_argument('--tol-newton', type=float, help='Newton residual tolerance')
    common.add_argument('--dt', type=float, help='initial continuation step')
    common.add_argument('--tau', type=float, help='relative admissibility margin')
    common.add_argument('-v', '--verbose', action='count', default=0, help='more logging')
    common.add_argument('-q', '--quiet', action='store_true', help='warnings and errors only')
    common.add_argument('--progress', action='store_true', help='show a progress bar over t')
    commands = parser.add_subparsers(dest='command', required=True)
    solve = commands.add_parser('solve', parents=[common], help='solve a problem by continuation')
    solve.add_argument('config', help='config file or built-in problem name')
    check = commands.add_parser('check', parents=[common], help='run the property suites')
    check.add_argument('config', nargs='?', help='config file or built-in problem name')
    mms = commands.add_parser('mms', parents=[common], help='convergence study of a manufactured problem')
    mms.add_argument('name', help='config file or built-in problem name')
    mms.add_argument('--grids', help='comma separated resolutions, e.g. 9,17')
    return parser


def _overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    changes = {}
    solver = {key: value for key, value in (('tol_newton', args.tol_newton), ('dt', args.dt), ('tau', args.tau))
              if value is not None}
    if solver:
        changes['solver'] = solver
    if args.seed is not None:
        changes['seed'] = args.seed
    if args.quiet:
        changes['verbosity'] = 0
    elif args.verbose:
        changes['verbosity'] = min(2, 1 + args.verbose)
    return cfg.replace(**changes) if changes else cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        source = args.name if args.command == 'mms' else args.config
        cfg = _overrides(load_config(source), args)
    except ConfigError as e:
        logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format='%(levelname)s %(name)s: %(message)s')
        logger.error('%s', e)
        return EXIT_CODES['spec-error']
    logging.basicConfig(stream=sys.stderr, level=LOG_LEVELS[cfg.verbosity],
                        format='%(levelname)s %(name)s: %(message)s')
    out_dir = output_dir(cfg, args.out)
    if args.command == 'solve':
        return run_solve(cfg, out_dir, progress=args.progress)
    if args.command == 'check':
        return run_check(cfg, out_dir)
    try:
        grids = [int(g) for g in args.grids.split(',')] if args.grids else resolve(cfg).get('grids')
    except ValueError:
        logger.error('--grids takes comma separated integers, got %r.', args.grids)
        return EXIT_CODES['spec-error']
    except ConfigError as e:
        logger.error('%s', e)
        return EXIT_CODES['spec-error']
    if not grids or len(grids) < 2:
        logger.error('A convergence study needs at least two grids.')
        return EXIT_CODES['spec-error']
    status, _ = run_convergence(cfg, grids, out_dir)
    return status
