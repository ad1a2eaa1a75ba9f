import logging
from typing import Tuple

import numpy as np

from ..errors import DomainError
from ..typing import Arraylike
from ..utils import as_float_array
from .symmetric import EigenvalueVector

logger = logging.getLogger(__name__)

JACOBI_TOL = 1e-14
MAX_SWEEPS = 60
METRIC_PD_TOL = 1e-12


class SymTensor:
    def __init__(self, entries: Arraylike):
        """Dense symmetric :math:`n \\times n` tensor at a point. The upper triangle is authoritative.

        Args:
            entries: Square array; the lower triangle is overwritten by the transpose of the upper one
        """
        a = as_float_array(entries, 'tensor entries')
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f'Symmetric tensors must be square, got shape {a.shape}.')
        upper = np.triu(a)
        self.entries = upper + np.triu(a, 1).T

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int, scale: float = 1) -> 'SymTensor':
        return cls(scale * np.eye(n))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __add__(self, other: 'SymTensor') -> 'SymTensor':
        return SymTensor(self.entries + np.asarray(other))

    def __mul__(self, scalar: float) -> 'SymTensor':
        return SymTensor(scalar * self.entries)

    __rmul__ = __mul__

    def __repr__(self):
        return f'SymTensor({self.entries.tolist()})'


class SpectralDecomposition:
    def __init__(self, eigenvalues: EigenvalueVector, eigenvectors: np.ndarray):
        """Eigenvalues (ascending) and orthonormal eigenvector columns with :math:`W = V \\mathrm{diag}(\\lambda) V^T`."""
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return v @ np.diag(self.eigenvalues.values) @ v.T

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors


def eigen_batch(w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigen-decomposition of a stack of symmetric matrices.

    Every sweep visits each pair :math:`(p, q)`, :math:`p < q`, and annihilates the :math:`(p, q)` entry of all
    matrices at once with the rotation of Golub and Van Loan's :code:`sym.schur2`. Sweeps stop once the
    off-diagonal Frobenius norm of every matrix is below :code:`JACOBI_TOL` times its Frobenius norm.

    Args:
        w: Array of shape :code:`(..., n, n)`, symmetric in the last two axes

    Returns:
        Eigenvalues :code:`(..., n)` sorted ascending and eigenvectors :code:`(..., n, n)` (columns),
        permuted consistently with a stable sort

    """
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)):
        raise DomainError('Eigen-decomposition needs finite entries.')
    n = w.shape[-1]
    batch_shape = w.shape[:-2]
    a = w.reshape((-1, n, n)).copy()
    v = np.broadcast_to(np.eye(n), a.shape).copy()
    scale = np.linalg.norm(a, axis=(1, 2))
    off_diagonal = ~np.eye(n, dtype=bool)
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]

    for sweep in range(MAX_SWEEPS):
        off = np.sqrt(np.sum(a[:, off_diagonal] ** 2, axis=1))
        active = off > JACOBI_TOL * scale
        if not np.any(active):
            logger.debug('Jacobi converged after %d sweeps for %d matrices.', sweep, a.shape[0])
            break
        for p, q in pairs:
            apq = a[:, p, q]
            nonzero = active & (apq != 0)
            if not np.any(nonzero):
                continue
            tau = np.where(nonzero, (a[:, q, q] - a[:, p, p]) / (2 * np.where(nonzero, apq, 1)), 0)
            # smaller root of t**2 + 2 tau t - 1 = 0, sign(0) = 1
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1, tau))
            t = np.where(nonzero, t, 0)
            c = 1 / np.hypot(1, t)
            s = t * c
            cc, ss = c[:, np.newaxis], s[:, np.newaxis]
            ap, aq = a[:, :, p].copy(), a[:, :, q].copy()
            a[:, :, p], a[:, :, q] = cc * ap - ss * aq, ss * ap + cc * aq
            ap, aq = a[:, p, :].copy(), a[:, q, :].copy()
            a[:, p, :], a[:, q, :] = cc * ap - ss * aq, ss * ap + cc * aq
            a[nonzero, p, q] = 0
            a[nonzero, q, p] = 0
            vp, vq = v[:, :, p].copy(), v[:, :, q].copy()
            v[:, :, p], v[:, :, q] = cc * vp - ss * vq, ss * vp + cc * vq
    else:
        logger.warning('Jacobi iteration hit %d sweeps without reaching tolerance.', MAX_SWEEPS)

    lam = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(lam, axis=1, kind='stable')
    lam = np.take_along_axis(lam, order, axis=1)
    v = np.take_along_axis(v, order[:, np.newaxis, :], axis=2)
    return lam.reshape(batch_shape + (n,)), v.reshape(batch_shape + (n, n))


def eigen(w: SymTensor) -> SpectralDecomposition:
    """Eigenvalues :math:`\\lambda(W)` of a symmetric tensor with respect to the flat metric.

    Args:
        w: Symmetric tensor

    Returns:
        Spectral decomposition with eigenvalues sorted ascending

    """
    entries = np.asarray(w, dtype=float)
    lam, v = eigen_batch(entries[np.newaxis])
    return SpectralDecomposition(EigenvalueVector(lam[0]), v[0])


def metric_sqrt_inverse(g: SymTensor) -> SymTensor:
    """The symmetric square root :math:`\\gamma` of :math:`g^{-1}`, i.e. :math:`\\gamma^{ik}\\gamma^{kj} = g^{ij}`.

    Args:
        g: Symmetric positive definite metric

    Returns:
        :math:`\\gamma = V \\mathrm{diag}(\\lambda^{-1/2}) V^T`

    """
    lam, v = eigen(g)
    lam = lam.values
    if lam[0] <= METRIC_PD_TOL * max(lam[-1], 0):
        raise DomainError(f'Metric must be positive definite, got eigenvalues {lam}.')
    return SymTensor(v @ np.diag(lam ** -0.5) @ v.T)


def eigen_wrt_metric(w: SymTensor, g: SymTensor) -> SpectralDecomposition:
    """Eigenvalues of :math:`W` with respect to :math:`g`, computed as those of :math:`\\gamma W \\gamma`."""
    g_entries = np.asarray(g, dtype=float)
    if np.array_equal(g_entries, np.eye(g_entries.shape[0])):
        return eigen(w)
    gamma = np.asarray(metric_sqrt_inverse(g))
    return eigen(SymTensor(gamma @ np.asarray(w) @ gamma))
