from .grid import Box, GridFunction, gradient_at, hessian_at, assemble_U, norms, from_field
from .fields import Field, ExpressionField, QuadraticField
