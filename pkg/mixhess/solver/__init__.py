from .options import SolverOptions
from .problem import ProblemSpec, mms_problem
from .linearize import linearize
from .newton import newton_solve
from .continuation import ContinuationRecord, ContinuationResult, continuity_solve
