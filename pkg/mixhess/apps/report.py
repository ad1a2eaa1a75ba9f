"""Artifact writers. JSON fields keep insertion order; nothing is sorted."""
import csv
import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from ..discretization.grid import GridFunction, dump_text
from ..model.operator import classify
from ..solver.continuation import ContinuationRecord, ContinuationResult
from ..solver.newton import NewtonIterate
from ..solver.problem import ProblemSpec
from ..utils import dumps

logger = logging.getLogger(__name__)

SOLUTION = 'solution.txt'
CONTINUATION = 'continuation.json'
NEWTON_LOG = 'newton_log.jsonl'
NORMS = 'norms.csv'
SUMMARY = 'summary.json'
CONVERGENCE = 'convergence.csv'
DEGENERACY = 'degeneracy.csv'
PROPERTIES = 'properties.json'


def _path(out_dir: Path, name: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / name


def _write_text(out_dir: Path, name: str, text: str) -> Path:
    path = _path(out_dir, name)
    path.write_text(text, encoding='utf-8')
    logger.info('Wrote %s', path)
    return path


def _write_csv(out_dir: Path, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = _path(out_dir, name)
    with path.open('w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    logger.info('Wrote %s', path)
    return path


def write_solution(out_dir: Path, u: GridFunction, k: int) -> Path:
    return _write_text(out_dir, SOLUTION, dump_text(u, k))


def write_continuation(out_dir: Path, records: List[ContinuationRecord]) -> Path:
    return _write_text(out_dir, CONTINUATION, dumps([record.dict for record in records]) + '\n')


def write_newton_log(out_dir: Path, log: List[NewtonIterate]) -> Path:
    return _write_text(out_dir, NEWTON_LOG, ''.join(dumps(entry.dict, indent=None) + '\n' for entry in log))


def write_norms(out_dir: Path, records: List[ContinuationRecord]) -> Path:
    rows = ([record.t, *record.norms, record.residual] for record in records)
    return _write_csv(out_dir, NORMS, ('t', 'c0', 'c1', 'c2', 'residual'), rows)


def write_convergence(out_dir: Path, rows: List[Sequence]) -> Path:
    return _write_csv(out_dir, CONVERGENCE, ('resolution', 'h', 'max_error', 'order'), rows)


def write_degeneracy(out_dir: Path, rows: List[Sequence]) -> Path:
    return _write_csv(out_dir, DEGENERACY, ('t', 'sigma_km1', 'G'), rows)


def write_json(out_dir: Path, name: str, payload) -> Path:
    return _write_text(out_dir, name, dumps(payload) + '\n')


def summary(problem: str, spec: Optional[ProblemSpec], result: Optional[ContinuationResult], verdict: str,
            max_error: Optional[float] = None, last_t: Optional[float] = None) -> dict:
    """The run summary, with a fixed field order."""
    params = spec.params if spec is not None else None
    return {
        'problem': problem,
        'family': None if params is None else classify(params, spec.rhs_vanishes),
        'strict_regime': None if params is None else params.in_strict_regime,
        'verdict': verdict,
        'final_t': result.final_t if result is not None else last_t,
        'newton_iterations': None if result is None else result.total_newton_iters,
        'final_residual': None if result is None else result.residual,
        'max_error': max_error,
        'comparison_holds': None if result is None else result.comparison_holds,
        'norms_bounded': None if result is None else result.norms_bounded,
    }


def load_json(path: Path):
    return json.loads(Path(path).read_text(encoding='utf-8'))
