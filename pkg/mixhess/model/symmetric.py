import numpy as np
from scipy.special import comb

from ..errors import DomainError
from ..typing import Arraylike
from ..utils import as_float_array


class EigenvalueVector:
    def __init__(self, values: Arraylike):
        """Ordered real eigenvalues :math:`\\lambda = (\\lambda_1, \\ldots, \\lambda_n)`.

        Args:
            values: Sequence of :math:`n \\geq 2` finite reals
        """
        self.values = as_float_array(values, 'eigenvalues').ravel()
        if self.values.size < 2:
            raise DomainError(f'Eigenvalue vectors need length n >= 2, got {self.values.size}.')

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __repr__(self):
        return f'EigenvalueVector({self.values.tolist()})'

    def sigma(self, k: int) -> float:
        return sigma(k, self)

    def in_cone(self, m: int) -> bool:
        return in_cone(m, self)


def _values(lam) -> np.ndarray:
    if isinstance(lam, EigenvalueVector):
        return lam.values
    return EigenvalueVector(lam).values


def sigma_all(lam: np.ndarray) -> np.ndarray:
    """All elementary symmetric polynomials :math:`\\sigma_0, \\ldots, \\sigma_n` by the prefix recurrence

    :math:`\\sigma_j^{(m)} = \\sigma_j^{(m-1)} + \\lambda_m \\sigma_{j-1}^{(m-1)}`, applied over the last axis.

    Args:
        lam: Array of shape :code:`(..., n)`

    Returns:
        Array of shape :code:`(..., n + 1)` whose last-axis entry :code:`j` is :math:`\\sigma_j`

    """
    lam = np.asarray(lam, dtype=float)
    e = np.zeros(lam.shape[:-1] + (lam.shape[-1] + 1,))
    e[..., 0] = 1
    for m in range(lam.shape[-1]):
        e[..., 1:] = e[..., 1:] + lam[..., m, np.newaxis] * e[..., :-1]
    return e


def sigma_restricted_all(lam: np.ndarray) -> np.ndarray:
    """Table of :math:`\\sigma_j(\\lambda | m)` for every removed index :math:`m`.

    Args:
        lam: Array of shape :code:`(..., n)`

    Returns:
        Array of shape :code:`(..., n, n)` with entry :code:`[..., m, j]` equal to :math:`\\sigma_j(\\lambda|m)`,
        :math:`j = 0, \\ldots, n - 1`

    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    keep = ~np.eye(n, dtype=bool)
    removed = np.stack([lam[..., keep[m]] for m in range(n)], axis=-2)
    return sigma_all(removed)


def sigma(k: int, lam) -> float:
    """The :math:`k`-th elementary symmetric polynomial, with :math:`\\sigma_0 = 1`.

    Args:
        k: Order, :math:`0 \\leq k \\leq n`
        lam: Eigenvalues

    Returns:
        :math:`\\sigma_k(\\lambda)`

    """
    values = _values(lam)
    if not 0 <= k <= values.size:
        raise DomainError(f'sigma_k needs 0 <= k <= n = {values.size}, got k = {k}.')
    return float(sigma_all(values)[k])


def sigma_restricted(k: int, lam, i: int) -> float:
    """:math:`\\sigma_k(\\lambda | i)`, i.e. :math:`\\sigma_k` with :math:`\\lambda_i` removed (0-based :code:`i`)."""
    values = _values(lam)
    n = values.size
    if not 0 <= k <= n - 1:
        raise DomainError(f'sigma_k(lambda|i) needs 0 <= k <= n - 1 = {n - 1}, got k = {k}.')
    if not 0 <= i < n:
        raise DomainError(f'Index i must satisfy 0 <= i < {n}, got {i}.')
    return float(sigma_all(np.delete(values, i))[k])


def sigma_gradient(k: int, lam) -> np.ndarray:
    """Gradient :math:`\\partial \\sigma_k / \\partial \\lambda_i = \\sigma_{k-1}(\\lambda|i)`.

    Args:
        k: Order, :math:`1 \\leq k \\leq n`
        lam: Eigenvalues

    Returns:
        Length-:math:`n` gradient

    """
    values = _values(lam)
    if not 1 <= k <= values.size:
        raise DomainError(f'sigma_gradient needs 1 <= k <= n = {values.size}, got k = {k}.')
    return sigma_restricted_all(values)[:, k - 1]


def in_cone(m: int, lam) -> bool:
    """Membership in the open Garding cone :math:`\\Gamma_m = \\{\\sigma_i > 0, 1 \\leq i \\leq m\\}`."""
    values = _values(lam)
    if not 1 <= m <= values.size:
        raise DomainError(f'Cone index must satisfy 1 <= m <= n = {values.size}, got {m}.')
    return bool(np.all(sigma_all(values)[1:m + 1] > 0))


def newton_maclaurin_gap(m: int, l: int, r: int, s: int, lam) -> float:
    """Slack in the generalized Newton-MacLaurin inequality on :math:`\\Gamma_m`.

    With :math:`S_j = \\sigma_j / \\binom{n}{j}`, returns
    :math:`(S_r / S_s)^{1/(r-s)} - (S_m / S_l)^{1/(m-l)}`, which is nonnegative up to round-off.

    Args:
        m: Cone index and numerator order of the left side
        l: Denominator order of the left side, :math:`0 \\leq l < m`
        r: Numerator order of the right side, :math:`s < r \\leq m`
        s: Denominator order of the right side, :math:`0 \\leq s \\leq l`
        lam: Eigenvalues in :math:`\\Gamma_m`

    Returns:
        Right side minus left side

    """
    values = _values(lam)
    n = values.size
    if not (m > l >= 0 and r > s >= 0 and m >= r and l >= s and m <= n):
        raise DomainError(f'Invalid indices (m, l, r, s) = {(m, l, r, s)} for n = {n}.')
    if not in_cone(m, values):
        raise DomainError(f'lambda = {values} is not in Gamma_{m}.')
    e = sigma_all(values)
    normalized = e / comb(n, np.arange(n + 1))
    left = (normalized[m] / normalized[l]) ** (1 / (m - l))
    right = (normalized[r] / normalized[s]) ** (1 / (r - s))
    return float(right - left)


def newton_inequality_ratio(k: int, lam) -> float:
    """:math:`\\sigma_k \\sigma_{k-2} / (c(n, k) \\sigma_{k-1}^2)` with
    :math:`c(n,k) = \\binom{n}{k}\\binom{n}{k-2}/\\binom{n}{k-1}^2`; at most 1 on :math:`\\Gamma_{k-1}`.
    """
    values = _values(lam)
    n = values.size
    if not 2 <= k <= n:
        raise DomainError(f'Newton inequality needs 2 <= k <= n = {n}, got {k}.')
    if not in_cone(k - 1, values):
        raise DomainError(f'lambda = {values} is not in Gamma_{k - 1}.')
    e = sigma_all(values)
    c = comb(n, k) * comb(n, k - 2) / comb(n, k - 1) ** 2
    return float(e[k] * e[k - 2] / (c * e[k - 1] ** 2))
