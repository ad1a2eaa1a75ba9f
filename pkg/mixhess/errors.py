from typing import Dict, Optional, Sequence, Tuple


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a pure numerical function."""


class AdmissibilityError(DomainError):
    def __init__(self, message: str, sigmas: Optional[Sequence[float]] = None,
                 nodes: Optional[Sequence[Tuple[int, ...]]] = None):
        """Eigenvalues of :math:`U` left the cone :math:`\\Gamma_{k-1}` (or came within the margin of its boundary).

        Args:
            message: Human readable description
            sigmas: Values :math:`\\sigma_1, \\ldots, \\sigma_{k-1}` at the (first) violating point
            nodes: Grid multi-indices of the violating nodes, if raised on a grid
        """
        self.sigmas = None if sigmas is None else tuple(float(s) for s in sigmas)
        self.nodes = [] if nodes is None else [tuple(int(i) for i in node) for node in nodes]
        if self.sigmas is not None:
            message = f'{message} (sigma_1..sigma_k-1 = {self.sigmas})'
        if self.nodes:
            shown = ', '.join(str(node) for node in self.nodes[:8])
            more = f' and {len(self.nodes) - 8} more' if len(self.nodes) > 8 else ''
            message = f'{message} at nodes {shown}{more}'
        super().__init__(message)


class ChiEvaluationError(RuntimeError):
    def __init__(self, message: str, sample: Dict[str, object]):
        self.sample = sample
        super().__init__(f'{message} at sample {sample}')


class SpecError(ValueError):
    """The Dirichlet problem is ill-posed for the solver (subsolution or manufactured solution invalid)."""


class ConfigError(ValueError):
    """The run configuration could not be parsed or violates a rule."""


class SolverError(RuntimeError):
    pass


class StepFailure(SolverError):
    pass


class LinearSolveFailure(SolverError):
    pass


class ContinuationFailure(SolverError):
    def __init__(self, message: str, last_t: float):
        self.last_t = last_t
        super().__init__(f'{message} (last accepted t = {last_t:.6g})')
