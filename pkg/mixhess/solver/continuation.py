import logging
from typing import List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from ..discretization.grid import GridFunction, norms
from ..errors import ContinuationFailure, LinearSolveFailure, SolverError, StepFailure
from .linearize import GridEval, evaluate_grid
from .newton import NewtonIterate, newton_solve
from .options import SolverOptions
from .problem import ProblemSpec

logger = logging.getLogger(__name__)


class ContinuationRecord:
    def __init__(self, t: float, newton_iters: int, residual: float, norms: Tuple[float, float, float],
                 min_sigma_margin: float, ellipticity: Tuple[float, float]):
        """Diagnostics of one accepted continuation stage.

        Args:
            t: Continuation parameter in :math:`[0, 1]`
            newton_iters: Newton steps taken in the stage
            residual: Final max-norm residual of the stage
            norms: Discrete :math:`(C^0, C^1, C^2)` sizes of the stage solution
            min_sigma_margin: Smallest :math:`\\sigma_{k-1}(\\lambda(U))` over interior nodes
            ellipticity: Smallest and largest eigenvalue of :math:`G^{ij}` over interior nodes
        """
        self.t = t
        self.newton_iters = newton_iters
        self.residual = residual
        self.norms = norms
        self.min_sigma_margin = min_sigma_margin
        self.ellipticity = ellipticity

    @classmethod
    def from_eval(cls, t: float, newton_iters: int, residual: float, grid_eval: GridEval, k: int):
        return cls(t, newton_iters, residual, norms(grid_eval.u), grid_eval.min_sigma(k), grid_eval.ellipticity)

    @property
    def dict(self) -> dict:
        return {'t': self.t, 'newton_iters': self.newton_iters, 'residual': self.residual,
                'norms': list(self.norms), 'min_sigma_margin': self.min_sigma_margin,
                'ellipticity': list(self.ellipticity)}


class ContinuationResult:
    def __init__(self, u: GridFunction, records: List[ContinuationRecord], newton_log: List[NewtonIterate],
                 comparison_holds: bool, norms_bounded: bool):
        self.u = u
        self.records = records
        self.newton_log = newton_log
        self.comparison_holds = comparison_holds
        self.norms_bounded = norms_bounded

    @property
    def final_t(self) -> float:
        return self.records[-1].t

    @property
    def residual(self) -> float:
        return self.records[-1].residual

    @property
    def total_newton_iters(self) -> int:
        return sum(record.newton_iters for record in self.records)

    def max_error(self, exact) -> float:
        """Max nodal error against a field evaluated at the grid points."""
        reference = exact(self.u.box.coordinates().reshape(-1, self.u.box.n))
        return float(np.max(np.abs(self.u.flat - reference)))


def _norms_bounded(records: List[ContinuationRecord], factor: float) -> bool:
    table = np.array([record.norms for record in records])
    if not np.all(np.isfinite(table)):
        raise SolverError('Norm monitor saw a non-finite value along the continuation path.')
    final = table[-1]
    return bool(np.all(table <= factor * final + 1e-12))


def continuity_solve(spec: ProblemSpec, opts: Optional[SolverOptions] = None,
                     progress: bool = False) -> ContinuationResult:
    """Continuity method from the subsolution to the target problem.

    Stage :math:`t` solves :math:`G(U[u]) = (1 - t) G(\\underline{U}) + t\\alpha_{k-1}` by :func:`newton_solve`,
    warm-started from the previous stage. :math:`u = \\underline{u}` solves :math:`t = 0` exactly. A failed
    stage halves :math:`\\Delta t`; an accepted one grows it by :code:`dt_growth`, capped at :code:`dt`.

    Args:
        spec: Problem with a valid subsolution
        opts: Solver options
        progress: Show a progress bar over :math:`t`

    Returns:
        Solution at :math:`t = 1`, stage records (the first one at :math:`t = 0`), Newton log and monitor flags

    Raises:
        SpecError: the subsolution hypotheses fail on the grid
        ContinuationFailure: :math:`\\Delta t` fell below :code:`dt_min`

    """
    opts = SolverOptions() if opts is None else opts
    k = spec.params.k
    spec.validate()
    u = spec.subsolution
    start = evaluate_grid(u, spec, opts.tau, raise_inadmissible=True)
    base = start.batch.value
    alpha = spec.rhs_interior
    records = [ContinuationRecord.from_eval(0.0, 0, 0.0, start, k)]
    newton_log: List[NewtonIterate] = []
    t, dt = 0.0, opts.dt
    with tqdm(total=1.0, disable=not progress, desc=spec.name, unit='t',
              bar_format='{l_bar}{bar}| t = {n:.4f}') as pbar:
        while t < 1:
            t_next = min(1.0, t + dt)
            target = (1 - t_next) * base + t_next * alpha
            try:
                result = newton_solve(u, target, spec, opts, t=t_next)
                if not result.converged:
                    raise StepFailure(f'Newton did not reach {opts.tol_newton:.1e} in {opts.max_iters} iterations '
                                      f'(residual {result.residual:.3e}).')
            except (StepFailure, LinearSolveFailure) as e:
                dt /= 2
                logger.info('Stage t = %.6g rejected (%s); dt -> %.3g.', t_next, e, dt)
                if dt < opts.dt_min:
                    raise ContinuationFailure(f'Step size fell below dt_min = {opts.dt_min:.1e}', last_t=t) from e
                continue
            u = result.u
            newton_log.extend(result.log)
            records.append(ContinuationRecord.from_eval(t_next, result.steps, result.residual, result.grid_eval, k))
            logger.info('Accepted t = %.6g after %d Newton steps (residual %.3e).', t_next, result.steps,
                        result.residual)
            pbar.update(t_next - t)
            t = t_next
            dt = min(opts.dt, dt * opts.dt_growth)

    slack = opts.comparison_factor * opts.tol_newton
    comparison_holds = bool(np.all(u.values >= spec.subsolution.values - slack))
    if not comparison_holds:
        worst = float(np.min(u.values - spec.subsolution.values))
        level = logging.WARNING if spec.chi.monotone_z else logging.INFO
        logger.log(level, 'Discrete comparison u >= u_sub fails by %.3e.', -worst)
    norms_bounded = _norms_bounded(records, opts.norm_bound_factor)
    if not norms_bounded:
        logger.warning('Norms along the path exceed %g times their final values.', opts.norm_bound_factor)
    return ContinuationResult(u, records, newton_log, comparison_holds, norms_bounded)
