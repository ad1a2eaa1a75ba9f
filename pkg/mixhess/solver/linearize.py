import logging
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from ..discretization.grid import GridFunction, InteriorState, assemble_U_interior, boundary_mask
from ..errors import AdmissibilityError
from ..model.operator import BatchEval, evaluate_batch

if TYPE_CHECKING:
    from .problem import ProblemSpec

logger = logging.getLogger(__name__)


class GridEval:
    """Operator data at every interior node of one iterate."""

    def __init__(self, u: GridFunction, state: InteriorState, batch: BatchEval, margin: np.ndarray):
        self.u = u
        self.state = state
        self.batch = batch
        self.margin = margin

    @property
    def admissible(self) -> bool:
        return bool(np.all(self.batch.admissible))

    def residual(self, target: np.ndarray) -> np.ndarray:
        return self.batch.value - target

    def min_sigma(self, k: int) -> float:
        """Smallest :math:`\\sigma_{k-1}(\\lambda(U))` over interior nodes."""
        return float(np.min(self.batch.sigmas[:, k - 1]))

    @property
    def ellipticity(self) -> Tuple[float, float]:
        return float(np.min(self.batch.min_ellipticity)), float(np.max(self.batch.max_ellipticity))


def evaluate_grid(u: GridFunction, spec: 'ProblemSpec', tau: float = 0,
                  raise_inadmissible: bool = False) -> GridEval:
    """Assemble :math:`U` and evaluate :math:`G`, :math:`G^{ij}` at every interior node.

    Args:
        u: Iterate
        spec: Problem
        tau: Relative margin, node :math:`x` needs :math:`\\sigma_i > \\tau(1 + \\|U(x)\\|_F)` for :math:`i < k`
        raise_inadmissible: Raise instead of returning a mask

    Returns:
        The evaluation, with :code:`batch.admissible` marking nodes inside the margin

    """
    state = assemble_U_interior(u, spec.chi)
    margin = tau * (1 + np.linalg.norm(state.u, axis=(1, 2)))
    batch = evaluate_batch(state.u, spec.alpha_interior, spec.params.k, margin)
    grid_eval = GridEval(u, state, batch, margin)
    if raise_inadmissible and not grid_eval.admissible:
        bad = ~batch.admissible
        first = int(np.argmax(bad))
        raise AdmissibilityError(f'{int(np.sum(bad))} interior nodes leave Gamma_{spec.params.k - 1}',
                                 sigmas=batch.sigmas[first, 1:spec.params.k], nodes=spec.interior_nodes[bad])
    return grid_eval


def linearize(u: GridFunction, spec: 'ProblemSpec', target: Optional[np.ndarray] = None,
              grid_eval: Optional[GridEval] = None) -> Tuple[sp.csr_matrix, np.ndarray]:
    """Jacobian of the residual map :math:`u \\mapsto G(U[u]) - \\beta` and its value.

    Interior rows discretize :math:`G^{ij}D_{ij} + G^{ij}\\chi^{ij}_{p_s}D_s + G^{ij}\\chi^{ij}_z` with the
    same stencils as the residual, so the matrix is the exact Jacobian of the discrete map. Boundary rows
    are identity rows with zero residual.

    Args:
        u: Admissible iterate
        spec: Problem
        target: Right-hand side per interior node (defaults to :math:`\\alpha_{k-1}`)
        grid_eval: Evaluation of :code:`u` to reuse

    Returns:
        CSR matrix of shape :code:`(N, N)` and residual vector of length :code:`N`, :math:`N` the node count

    Raises:
        AdmissibilityError: some interior node is outside :math:`\\Gamma_{k-1}`

    """
    box = spec.box
    n = box.n
    target = spec.rhs_interior if target is None else target
    if grid_eval is None:
        grid_eval = evaluate_grid(u, spec, raise_inadmissible=True)
    elif not grid_eval.admissible:
        bad = ~grid_eval.batch.admissible
        raise AdmissibilityError('Cannot linearize at an inadmissible iterate', nodes=spec.interior_nodes[bad])
    state, batch = grid_eval.state, grid_eval.batch
    g = batch.gradient
    h = box.h
    nodes = spec.interior_nodes
    center = np.ravel_multi_index(nodes.T, box.shape)
    eye = np.eye(n, dtype=int)

    rows, cols, vals = [], [], []

    def add(offset: np.ndarray, coefficient: np.ndarray):
        rows.append(center)
        cols.append(np.ravel_multi_index((nodes + offset).T, box.shape))
        vals.append(coefficient)

    dp = np.asarray(spec.chi.dp(state.x, state.z, state.p), dtype=float)
    dz = np.asarray(spec.chi.dz(state.x, state.z, state.p), dtype=float)
    first_order = np.einsum('mij,msij->ms', g, dp)
    zeroth_order = np.einsum('mij,mij->m', g, dz)

    diagonal = zeroth_order.copy()
    for a in range(n):
        add(eye[a], g[:, a, a] / h[a] ** 2 + first_order[:, a] / (2 * h[a]))
        add(-eye[a], g[:, a, a] / h[a] ** 2 - first_order[:, a] / (2 * h[a]))
        diagonal -= 2 * g[:, a, a] / h[a] ** 2
        for b in range(a + 1, n):
            cross = 2 * g[:, a, b] / (4 * h[a] * h[b])
            add(eye[a] + eye[b], cross)
            add(-eye[a] - eye[b], cross)
            add(eye[a] - eye[b], -cross)
            add(eye[b] - eye[a], -cross)
    add(np.zeros(n, dtype=int), diagonal)

    boundary = np.flatnonzero(boundary_mask(box).ravel())
    rows.append(boundary)
    cols.append(boundary)
    vals.append(np.ones(boundary.size))

    matrix = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                           shape=(box.size, box.size)).tocsr()
    residual = np.zeros(box.size)
    residual[center] = grid_eval.residual(target)
    logger.debug('Assembled %d x %d Jacobian with %d nonzeros.', box.size, box.size, matrix.nnz)
    return matrix, residual
