import logging
from typing import Sequence, Union

import numpy as np

from ..errors import AdmissibilityError, DomainError
from ..typing import Arraylike
from .spectral import SymTensor, eigen_batch
from .symmetric import EigenvalueVector, sigma_all, sigma_restricted_all

logger = logging.getLogger(__name__)


class OperatorParams:
    def __init__(self, n: int, k: int, alphas: Arraylike, strict_regime: bool = False):
        """Pointwise parameters of :math:`G(U) = \\sigma_k/\\sigma_{k-1} - \\sum_{l=0}^{k-2}\\alpha_l\\sigma_l/\\sigma_{k-1}`.

        Args:
            n: Dimension
            k: Order, :math:`2 \\leq k \\leq n`
            alphas: :math:`\\alpha_0, \\ldots, \\alpha_{k-2}`, nonnegative
            strict_regime: Demand :math:`3 \\leq k` and strictly positive :math:`\\alpha_l`
        """
        self.n = int(n)
        self.k = int(k)
        self.alphas = np.asarray(alphas, dtype=float).ravel()
        self.strict_regime = strict_regime
        if not 2 <= self.k <= self.n:
            raise DomainError(f'Operator order needs 2 <= k <= n, got n = {self.n}, k = {self.k}.')
        if self.alphas.size != self.k - 1:
            raise DomainError(f'Expected k - 1 = {self.k - 1} coefficients alpha_0..alpha_k-2, got {self.alphas.size}.')
        if not np.all(np.isfinite(self.alphas)) or np.any(self.alphas < 0):
            raise DomainError(f'Coefficients alpha_l must be finite and nonnegative, got {self.alphas}.')
        if strict_regime and (self.k < 3 or np.any(self.alphas <= 0)):
            raise DomainError(f'Strict regime needs k >= 3 and alpha_l > 0, got k = {self.k}, alphas = {self.alphas}.')

    @property
    def in_strict_regime(self) -> bool:
        return self.k >= 3 and bool(np.all(self.alphas > 0))

    def __repr__(self):
        return f'OperatorParams(n={self.n}, k={self.k}, alphas={self.alphas.tolist()})'


class BatchEval:
    """Operator data at a stack of points, with an :code:`admissible` mask in place of raising."""

    def __init__(self, value: np.ndarray, gradient: np.ndarray, derivative: np.ndarray, eigenvalues: np.ndarray,
                 sigmas: np.ndarray, quotients: np.ndarray, admissible: np.ndarray):
        self.value = value
        self.gradient = gradient
        self.derivative = derivative
        self.eigenvalues = eigenvalues
        self.sigmas = sigmas
        self.quotients = quotients
        self.admissible = admissible

    @property
    def min_ellipticity(self) -> np.ndarray:
        return np.min(self.derivative, axis=-1)

    @property
    def max_ellipticity(self) -> np.ndarray:
        return np.max(self.derivative, axis=-1)

    @property
    def trace(self) -> np.ndarray:
        return np.sum(self.derivative, axis=-1)


class OperatorEval:
    def __init__(self, value: float, gradient: SymTensor, quotients: np.ndarray, min_ellipticity: float,
                 trace: float, eigenvalues: EigenvalueVector):
        self.value = value
        self.gradient = gradient
        self.quotients = quotients
        self.min_ellipticity = min_ellipticity
        self.trace = trace
        self.eigenvalues = eigenvalues

    def __repr__(self):
        return f'OperatorEval(value={self.value}, min_ellipticity={self.min_ellipticity}, trace={self.trace})'


def evaluate_eigenvalues(lam: np.ndarray, alphas: np.ndarray, k: int, tau: Union[float, np.ndarray] = 0):
    """Operator value and its eigenvalue derivatives :math:`f_m = \\partial G / \\partial \\lambda_m`.

    Uses :math:`\\partial(\\sigma_j/\\sigma_{k-1})/\\partial\\lambda_m =
    [\\sigma_{j-1}(\\lambda|m)\\sigma_{k-1} - \\sigma_j\\sigma_{k-2}(\\lambda|m)]/\\sigma_{k-1}^2`.

    Args:
        lam: Eigenvalues, shape :code:`(N, n)`
        alphas: :math:`\\alpha_0..\\alpha_{k-2}`, shape :code:`(k - 1,)` or :code:`(k - 1, N)`
        k: Order
        tau: Admissibility margin, scalar or shape :code:`(N,)`

    Returns:
        Tuple of value :code:`(N,)`, derivative :code:`(N, n)`, sigmas :code:`(N, n + 1)`,
        quotients :code:`(N, k + 1)` and the admissible mask :code:`(N,)`

    """
    lam = np.asarray(lam, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim == 1:
        alphas = alphas[:, np.newaxis]
    e = sigma_all(lam)
    r = sigma_restricted_all(lam)
    admissible = np.all(e[:, 1:k] > np.asarray(tau)[..., np.newaxis], axis=1)
    s = e[:, k - 1]
    r_km2 = r[:, :, k - 2]
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        quotients = e[:, :k + 1] / s[:, np.newaxis]

        def dquotient(j: int) -> np.ndarray:
            lower = r[:, :, j - 1] if j >= 1 else 0
            return (lower * s[:, np.newaxis] - e[:, j, np.newaxis] * r_km2) / (s ** 2)[:, np.newaxis]

        value = quotients[:, k] - np.sum(alphas * quotients[:, :k - 1].T, axis=0)
        derivative = dquotient(k)
        for l in range(k - 1):
            derivative = derivative - alphas[l][:, np.newaxis] * dquotient(l)
    return value, derivative, e, quotients, admissible


def evaluate_batch(u: np.ndarray, alphas: np.ndarray, k: int, tau: Union[float, np.ndarray] = 0) -> BatchEval:
    """Evaluate :math:`G`, :math:`G^{ij}` on a stack of tensors :code:`(N, n, n)`.

    :math:`G^{ij} = \\sum_m f_m v_m v_m^T` is assembled in the eigenbasis, which is valid for repeated
    eigenvalues since first derivatives of symmetric functions of eigenvalues do not depend on the basis.
    """
    lam, v = eigen_batch(u)
    value, derivative, e, quotients, admissible = evaluate_eigenvalues(lam, alphas, k, tau)
    gradient = np.einsum('nim,nm,njm->nij', v, derivative, v)
    return BatchEval(value, gradient, derivative, lam, e, quotients, admissible)


def eval_G(u: SymTensor, params: OperatorParams, tau: float = 0) -> OperatorEval:
    """Evaluate :math:`G(U)` and :math:`G^{ij} = \\partial G / \\partial U_{ij}` at one admissible tensor.

    Args:
        u: Symmetric tensor :math:`U` with :math:`\\lambda(U) \\in \\Gamma_{k-1}`
        params: Operator parameters
        tau: Demand :math:`\\sigma_i(\\lambda) > \\tau` for :math:`i \\leq k - 1`

    Returns:
        Value, gradient tensor and diagnostics

    """
    entries = np.asarray(u, dtype=float)
    if entries.shape != (params.n, params.n):
        raise DomainError(f'Expected a {params.n}x{params.n} tensor, got shape {entries.shape}.')
    batch = evaluate_batch(entries[np.newaxis], params.alphas, params.k, tau)
    if not batch.admissible[0]:
        raise AdmissibilityError(f'lambda(U) = {batch.eigenvalues[0]} is not in Gamma_{params.k - 1}',
                                 sigmas=batch.sigmas[0, 1:params.k])
    return OperatorEval(value=float(batch.value[0]),
                        gradient=SymTensor(batch.gradient[0]),
                        quotients=batch.quotients[0],
                        min_ellipticity=float(batch.min_ellipticity[0]),
                        trace=float(batch.trace[0]),
                        eigenvalues=EigenvalueVector(batch.eigenvalues[0]))


def trace_lower_bound(params: OperatorParams) -> float:
    """Lower bound :math:`(n - k + 1)/k` for :math:`\\sum_i G^{ii}` on :math:`\\Gamma_{k-1}`."""
    return (params.n - params.k + 1) / params.k


def refined_trace_lower_bound(lam, params: OperatorParams) -> float:
    """Sharper trace bound keeping the lower-order terms,
    :math:`(n-k+1)/k + \\sum_l \\frac{(n-k+2)(k-l-1)}{k-1}\\alpha_l \\frac{\\sigma_l\\sigma_{k-2}}{\\sigma_{k-1}^2}`.
    """
    values = lam.values if isinstance(lam, EigenvalueVector) else EigenvalueVector(lam).values
    n, k = params.n, params.k
    e = sigma_all(values)
    if not np.all(e[1:k] > 0):
        raise AdmissibilityError(f'lambda = {values} is not in Gamma_{k - 1}', sigmas=e[1:k])
    bound = trace_lower_bound(params)
    for l, alpha in enumerate(params.alphas):
        bound += (n - k + 2) * (k - l - 1) / (k - 1) * alpha * e[l] * e[k - 2] / e[k - 1] ** 2
    return float(bound)


def concavity_gap(u1: SymTensor, u2: SymTensor, t: float, params: OperatorParams) -> float:
    """:math:`G(tU_1 + (1-t)U_2) - [tG(U_1) + (1-t)G(U_2)]`, nonnegative by concavity."""
    if not 0 <= t <= 1:
        raise DomainError(f'Interpolation parameter must lie in [0, 1], got {t}.')
    a1, a2 = np.asarray(u1, dtype=float), np.asarray(u2, dtype=float)
    g1 = eval_G(u1, params).value
    g2 = eval_G(u2, params).value
    mid = eval_G(SymTensor(t * a1 + (1 - t) * a2), params).value
    return mid - (t * g1 + (1 - t) * g2)


def degeneracy_probe(lambda_path: Sequence, params: OperatorParams) -> np.ndarray:
    """Values of :math:`G` along a path of eigenvalues, typically one approaching :math:`\\partial\\Gamma_{k-1}`.

    With every :math:`\\alpha_l > 0` the values fall without bound near the boundary; with :math:`\\alpha = 0`
    the quotient :math:`\\sigma_k/\\sigma_{k-1}` has a limit :math:`\\leq 0`.

    Args:
        lambda_path: Sequence of eigenvalue vectors, all inside :math:`\\Gamma_{k-1}`
        params: Operator parameters

    Returns:
        Array of :math:`G` values, one per path point

    """
    path = np.asarray([p.values if isinstance(p, EigenvalueVector) else p for p in lambda_path], dtype=float)
    if path.ndim != 2 or path.shape[1] != params.n:
        raise DomainError(f'Path points must be length-{params.n} vectors, got array of shape {path.shape}.')
    value, _, e, _, admissible = evaluate_eigenvalues(path, params.alphas, params.k)
    if not np.all(admissible):
        first = int(np.argmin(admissible))
        raise DomainError(f'Path leaves Gamma_{params.k - 1} at point {first}: lambda = {path[first]}, '
                          f'sigmas = {e[first, 1:params.k]}.')
    if len(path) > 1 and e[-1, params.k - 1] >= 1e-6 * e[0, params.k - 1]:
        logger.debug('Probe path ends at sigma_k-1 = %g, not close to the cone boundary.', e[-1, params.k - 1])
    return value


def classify(params: OperatorParams, rhs_vanishes: bool = True) -> str:
    """Name the classical equation the parameters reduce to."""
    nonzero = [l for l, alpha in enumerate(params.alphas) if alpha != 0]
    if not rhs_vanishes:
        return f'hessian-quotient({params.k},{params.k - 1})' if not nonzero else 'mixed'
    if not nonzero:
        return f'hessian-quotient({params.k},{params.k - 1})'
    if nonzero == [0]:
        return 'monge-ampere' if params.k == params.n else 'k-hessian'
    if len(nonzero) == 1:
        return f'hessian-quotient({params.k},{nonzero[0]})'
    return 'mixed'

