from dataclasses import asdict, replace
from typing import Literal

from pydantic import ConfigDict, NonNegativeFloat, NonNegativeInt, PositiveFloat, PositiveInt, confloat
from pydantic.dataclasses import dataclass


@dataclass(config=ConfigDict(extra='forbid'))
class SolverOptions:
    """Tolerances and step controls of the Newton continuation.

    Attributes:
        tol_newton: Stop Newton once the max-norm residual is at most this
        max_iters: Newton steps allowed per continuation stage
        max_halvings: Step halvings allowed in one line search
        armijo: Sufficient decrease constant :math:`\\beta`, accept when the residual drops by :math:`(1 - \\beta s)`
        tau: Relative admissibility margin, every node needs :math:`\\sigma_i > \\tau (1 + \\|U\\|_F)`, :math:`i < k`
        dt: Initial (and maximal) continuation step
        dt_min: Abort once a halved step falls below this
        dt_growth: Step growth factor after an accepted stage
        linear_solver: Krylov method for large systems, or :code:`direct` for a sparse LU
        krylov_rtol: Relative tolerance handed to the Krylov method
        krylov_restart: GMRES restart length
        krylov_maxiter: Krylov iteration cap (restart cycles for GMRES)
        stagnation_tol: Relative linear residual above which the solve is a failure
        dense_threshold: Below this many unknowns solve densely
        comparison_factor: Slack multiple of :code:`tol_newton` in the check :math:`u \\geq \\underline{u}`
        norm_bound_factor: Allowed ratio of stage norms to final norms
    """
    tol_newton: PositiveFloat = 1e-10
    max_iters: PositiveInt = 50
    max_halvings: PositiveInt = 30
    armijo: confloat(gt=0, lt=1) = 1e-4
    tau: NonNegativeFloat = 1e-10
    dt: confloat(gt=0, le=1) = 0.1
    dt_min: PositiveFloat = 1e-4
    dt_growth: confloat(ge=1) = 2.0
    linear_solver: Literal['gmres', 'bicgstab', 'direct'] = 'gmres'
    krylov_rtol: PositiveFloat = 1e-10
    krylov_restart: PositiveInt = 60
    krylov_maxiter: PositiveInt = 400
    stagnation_tol: PositiveFloat = 1e-8
    dense_threshold: NonNegativeInt = 4000
    comparison_factor: PositiveFloat = 10.0
    norm_bound_factor: PositiveFloat = 10.0

    def __post_init__(self):
        if self.dt_min > self.dt:
            raise ValueError(f'Require dt_min <= dt but got dt_min = {self.dt_min}, dt = {self.dt}.')

    def replace(self, **changes) -> 'SolverOptions':
        return replace(self, **changes)

    @property
    def dict(self) -> dict:
        return asdict(self)
