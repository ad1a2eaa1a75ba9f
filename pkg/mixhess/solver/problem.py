import logging
from typing import Optional, Sequence, Union

import numpy as np

from ..discretization.fields import Field, as_field
from ..discretization.grid import Box, GridFunction, boundary_mask, from_field, interior_indices
from ..errors import AdmissibilityError, SpecError
from ..model.chi import ChiSpec, zero_chi
from ..model.operator import OperatorParams, evaluate_batch
from .linearize import evaluate_grid

logger = logging.getLogger(__name__)

SUBSOLUTION_TOL = 1e-12

FieldLike = Union[Field, str, float, int]


class ProblemSpec:
    def __init__(self, box: Box, params: OperatorParams, rhs: Union[FieldLike, GridFunction], phi: FieldLike,
                 subsolution: GridFunction, chi: Optional[ChiSpec] = None,
                 alpha_fields: Optional[Sequence[FieldLike]] = None, exact: Optional[Field] = None,
                 subsolution_tol: float = SUBSOLUTION_TOL, name: str = 'custom'):
        """Discrete Dirichlet problem :math:`G(\\nabla^2 u + \\chi) = \\alpha_{k-1}` in the box, :math:`u = \\varphi`
        on its boundary.

        Args:
            box: Grid
            params: Dimension, order and constant :math:`\\alpha_0..\\alpha_{k-2}`
            rhs: :math:`\\alpha_{k-1}` as a field, number, expression or grid function
            phi: Boundary data
            subsolution: Admissible :math:`\\underline{u}` with :math:`\\underline{u} = \\varphi` on the boundary
            chi: Perturbation tensor, zero if omitted
            alpha_fields: Position-dependent :math:`\\alpha_0..\\alpha_{k-2}` overriding :code:`params.alphas`
            exact: Known solution, for error reporting
            subsolution_tol: Slack allowed in :math:`G(\\underline{U}) \\geq \\alpha_{k-1}`
            name: Label used in reports
        """
        n = box.n
        if params.n != n:
            raise SpecError(f'Operator dimension {params.n} does not match box dimension {n}.')
        if subsolution.box != box:
            raise SpecError(f'Subsolution lives on {subsolution.box}, expected {box}.')
        self.box = box
        self.params = params
        self.rhs = rhs if isinstance(rhs, GridFunction) else as_field(rhs, n)
        self.phi = as_field(phi, n)
        self.subsolution = subsolution
        self.chi = zero_chi(n) if chi is None else chi
        if self.chi.n != n:
            raise SpecError(f'chi acts in dimension {self.chi.n}, expected {n}.')
        self.alpha_fields = None if alpha_fields is None else [as_field(a, n) for a in alpha_fields]
        if self.alpha_fields is not None and len(self.alpha_fields) != params.k - 1:
            raise SpecError(f'Expected {params.k - 1} coefficient fields but got {len(self.alpha_fields)}.')
        self.exact = exact
        self.subsolution_tol = subsolution_tol
        self.name = name
        interior = ~boundary_mask(box)
        self.interior_points = box.coordinates()[interior]
        self.interior_nodes = interior_indices(box)
        self.alpha_interior = self._alpha_interior()
        self.rhs_interior = self._rhs_interior(interior)

    def _alpha_interior(self) -> np.ndarray:
        m = len(self.interior_points)
        if self.alpha_fields is None:
            return np.repeat(self.params.alphas[:, np.newaxis], m, axis=1)
        alphas = np.stack([field(self.interior_points) for field in self.alpha_fields])
        if np.any(alphas < 0) or not np.all(np.isfinite(alphas)):
            raise SpecError('Coefficient fields alpha_l must be finite and nonnegative on the grid.')
        if self.params.strict_regime and np.any(alphas <= 0):
            raise SpecError('Strict regime needs alpha_l > 0 at every interior node.')
        return alphas

    def _rhs_interior(self, interior: np.ndarray) -> np.ndarray:
        if isinstance(self.rhs, GridFunction):
            if self.rhs.box != self.box:
                raise SpecError(f'Right-hand side lives on {self.rhs.box}, expected {self.box}.')
            values = self.rhs.values[interior]
        else:
            values = self.rhs(self.interior_points)
        if not np.all(np.isfinite(values)):
            raise SpecError('Right-hand side alpha_k-1 must be finite on the grid.')
        return values

    @property
    def rhs_vanishes(self) -> bool:
        return bool(np.all(self.rhs_interior == 0))

    def boundary_grid(self) -> GridFunction:
        return from_field(self.box, self.phi)

    def validate(self) -> float:
        """Check the subsolution hypotheses on the grid.

        Returns:
            The smallest slack :math:`G(\\underline{U}) - \\alpha_{k-1}` over interior nodes

        Raises:
            SpecError: boundary mismatch, inadmissible node or a node where the subsolution inequality fails

        """
        mask = boundary_mask(self.box)
        phi = self.boundary_grid()
        mismatch = np.argwhere(mask & (self.subsolution.values != phi.values))
        if len(mismatch):
            raise SpecError(f'Subsolution differs from phi at {len(mismatch)} boundary nodes, first at '
                            f'{tuple(mismatch[0])}.')
        try:
            grid_eval = evaluate_grid(self.subsolution, self, tau=0, raise_inadmissible=True)
        except AdmissibilityError as e:
            raise SpecError(f'Subsolution is not admissible: {e}') from e
        slack = grid_eval.batch.value - self.rhs_interior
        bad = slack < -self.subsolution_tol
        if np.any(bad):
            worst = int(np.argmin(slack))
            raise SpecError(f'G(U) >= alpha_k-1 fails at {int(np.sum(bad))} nodes; worst {slack[worst]:.3e} at node '
                            f'{tuple(self.interior_nodes[worst])}.')
        return float(np.min(slack))

    def __repr__(self):
        return f'ProblemSpec(name={self.name!r}, box={self.box!r}, params={self.params!r})'


def mms_problem(u_star: Field, chi: Optional[ChiSpec], params: OperatorParams, box: Box,
                subsolution: Optional[GridFunction] = None, name: str = 'mms') -> ProblemSpec:
    """Manufactured problem whose solution is :code:`u_star`.

    Sets :math:`\\alpha_{k-1}(x) = G(\\nabla^2 u_* + \\chi(x, u_*, \\nabla u_*))` using the field's own derivatives
    (exact for closed forms, fine central differences otherwise), :math:`\\varphi = u_*`, and by default
    :math:`\\underline{u} = u_*` on the grid. Central differences reproduce a quadratic :code:`u_star` exactly, so
    then the discrete solution is :code:`u_star` itself; otherwise the equality-case subsolution holds discretely
    only up to the truncation error, which is measured, logged and stored as :code:`subsolution_tol`.

    Raises:
        SpecError: :code:`u_star` is not admissible at some interior node
    """
    chi = zero_chi(box.n) if chi is None else chi

    def g_star(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, box.n)
        u = u_star.hessian(flat) + chi.value(flat, u_star(flat), u_star.gradient(flat))
        batch = evaluate_batch(u, params.alphas, params.k)
        if not np.all(batch.admissible):
            bad = flat[~batch.admissible]
            raise SpecError(f'Manufactured solution is not admissible at {len(bad)} points, first at x = '
                            f'{bad[0].tolist()}.')
        return batch.value.reshape(x.shape[:-1])

    rhs = Field(box.n, g_star, name=f'G[{u_star.name}]')
    sub = from_field(box, u_star) if subsolution is None else subsolution
    spec = ProblemSpec(box, params, rhs, u_star, sub, chi=chi, exact=u_star, name=name)
    if subsolution is None:
        try:
            grid_eval = evaluate_grid(sub, spec, tau=0, raise_inadmissible=True)
        except AdmissibilityError as e:
            raise SpecError(f'Manufactured solution is not discretely admissible: {e}') from e
        defect = float(np.max(spec.rhs_interior - grid_eval.batch.value, initial=0))
        if u_star.is_quadratic:
            # central differences are exact on quadratics, so the defect is rounding only
            spec.subsolution_tol = max(SUBSOLUTION_TOL, 1.01 * defect)
        elif defect > SUBSOLUTION_TOL:
            logger.warning('Equality-case subsolution of %s holds only up to truncation error %.3e.', name, defect)
            spec.subsolution_tol = 1.01 * defect
    return spec
