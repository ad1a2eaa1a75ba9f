import logging
import time
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..discretization.grid import GridFunction
from ..errors import LinearSolveFailure, StepFailure
from .linearize import GridEval, evaluate_grid, linearize
from .options import SolverOptions
from .problem import ProblemSpec

logger = logging.getLogger(__name__)


class NewtonIterate:
    def __init__(self, t: float, iteration: int, residual: float, step: float, min_sigma_margin: float,
                 wall_time: float):
        self.t = t
        self.iteration = iteration
        self.residual = residual
        self.step = step
        self.min_sigma_margin = min_sigma_margin
        self.wall_time = wall_time

    @property
    def dict(self) -> dict:
        return {'t': self.t, 'iter': self.iteration, 'residual': self.residual, 'step': self.step,
                'min_sigma_margin': self.min_sigma_margin, 'wall_time': self.wall_time}


class NewtonResult:
    def __init__(self, u: GridFunction, grid_eval: GridEval, log: List[NewtonIterate], converged: bool):
        self.u = u
        self.grid_eval = grid_eval
        self.log = log
        self.converged = converged

    @property
    def steps(self) -> int:
        """Accepted Newton steps; the log also holds the initial residual as iteration 0."""
        return len(self.log) - 1

    @property
    def iterations(self) -> int:
        return len(self.log)

    @property
    def residual(self) -> float:
        return self.log[-1].residual


def _jacobi_preconditioner(matrix: sp.csr_matrix) -> spla.LinearOperator:
    d = matrix.diagonal().copy()
    d[d == 0] = 1
    return spla.LinearOperator(matrix.shape, matvec=lambda v: v / d, dtype=float)


def solve_linear(matrix: sp.csr_matrix, rhs: np.ndarray, opts: SolverOptions) -> np.ndarray:
    """Solve :math:`A x = b` densely for small systems, else with restarted GMRES or BiCGStab and a diagonal
    preconditioner, or a sparse LU when :code:`opts.linear_solver == 'direct'`.

    Raises:
        LinearSolveFailure: the relative residual :math:`\\|Ax - b\\| / \\|b\\|` exceeds :code:`opts.stagnation_tol`
    """
    size = matrix.shape[0]
    norm_rhs = np.linalg.norm(rhs)
    if norm_rhs == 0:
        return np.zeros_like(rhs)
    try:
        if opts.linear_solver == 'direct':
            x = spla.spsolve(matrix.tocsc(), rhs)
        elif size < opts.dense_threshold:
            x = np.linalg.solve(matrix.toarray(), rhs)
        elif opts.linear_solver == 'gmres':
            x, info = spla.gmres(matrix, rhs, rtol=opts.krylov_rtol, restart=opts.krylov_restart,
                                 maxiter=opts.krylov_maxiter, M=_jacobi_preconditioner(matrix))
            logger.debug('gmres returned info = %d.', info)
        else:
            x, info = spla.bicgstab(matrix, rhs, rtol=opts.krylov_rtol, maxiter=opts.krylov_maxiter,
                                    M=_jacobi_preconditioner(matrix))
            logger.debug('bicgstab returned info = %d.', info)
    except (np.linalg.LinAlgError, RuntimeError) as e:
        raise LinearSolveFailure(f'Linear solve failed for {size} unknowns: {e}') from e
    relative = np.linalg.norm(matrix @ x - rhs) / norm_rhs
    if not np.isfinite(relative) or relative > opts.stagnation_tol:
        raise LinearSolveFailure(f'{opts.linear_solver} stagnated at relative residual {relative:.3e} '
                                 f'> {opts.stagnation_tol:.1e} for {size} unknowns.')
    return x


def newton_solve(u0: GridFunction, target: np.ndarray, spec: ProblemSpec, opts: Optional[SolverOptions] = None,
                 t: float = 1.0) -> NewtonResult:
    """Damped Newton for :math:`G(U[u]) = \\beta` at the interior nodes, keeping every iterate admissible.

    Each step solves :math:`\\mathcal{L}\\delta u = -r` and backtracks from :math:`s = 1`, halving until every
    node keeps :math:`\\sigma_i > \\tau(1 + \\|U\\|_F)` for :math:`i < k` and the max-norm residual drops by the
    factor :math:`1 - \\beta s`.

    Args:
        u0: Admissible initial iterate carrying the boundary values
        target: :math:`\\beta` per interior node
        spec: Problem
        opts: Solver options
        t: Continuation parameter, only recorded in the log

    Returns:
        Final iterate, its evaluation, per-iteration log and whether the tolerance was met

    Raises:
        AdmissibilityError: :code:`u0` is not admissible
        StepFailure: the line search exhausted :code:`opts.max_halvings`
        LinearSolveFailure: propagated from :func:`solve_linear`

    """
    opts = SolverOptions() if opts is None else opts
    k = spec.params.k
    start = time.perf_counter()
    u = u0
    current = evaluate_grid(u, spec, opts.tau, raise_inadmissible=True)
    norm = float(np.max(np.abs(current.residual(target))))
    log = [NewtonIterate(t, 0, norm, 0.0, current.min_sigma(k), time.perf_counter() - start)]
    logger.debug('t = %.6g, iter 0: residual %.3e', t, norm)
    for iteration in range(1, opts.max_iters + 1):
        if norm <= opts.tol_newton:
            break
        matrix, residual = linearize(u, spec, target, grid_eval=current)
        delta = solve_linear(matrix, -residual, opts)
        step = 1.0
        for _ in range(opts.max_halvings + 1):
            candidate = u.with_values(u.flat + step * delta)
            trial = evaluate_grid(candidate, spec, opts.tau)
            if trial.admissible:
                trial_norm = float(np.max(np.abs(trial.residual(target))))
                if trial_norm <= (1 - opts.armijo * step) * norm:
                    break
            step /= 2
        else:
            raise StepFailure(f'Line search at t = {t:.6g}, iteration {iteration} found no admissible decrease '
                              f'after {opts.max_halvings} halvings (residual {norm:.3e}).')
        u, current, norm = candidate, trial, trial_norm
        log.append(NewtonIterate(t, iteration, norm, step, current.min_sigma(k), time.perf_counter() - start))
        logger.debug('t = %.6g, iter %d: residual %.3e, step %.3g, min sigma_k-1 %.3e', t, iteration, norm, step,
                     log[-1].min_sigma_margin)
    converged = norm <= opts.tol_newton
    if not converged:
        logger.info('Newton stopped at residual %.3e after %d iterations (t = %.6g).', norm, opts.max_iters, t)
    return NewtonResult(u, current, log, converged)
