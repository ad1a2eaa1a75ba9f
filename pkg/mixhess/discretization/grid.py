import json
import logging
from typing import Callable, Optional, Tuple

import numpy as np

from ..errors import DomainError
from ..model.spectral import SymTensor, eigen_batch
from ..typing import Arraylike, MultiIndex
from ..utils import as_float_array

logger = logging.getLogger(__name__)

MIN_COUNT = 5
DIMENSIONS = (2, 3, 4)


class Box:
    def __init__(self, lower: Arraylike, upper: Arraylike, counts: Arraylike):
        """Axis-aligned box :math:`\\prod_a [\\ell_a, u_a]` sampled by a uniform tensor-product grid.

        Args:
            lower: Lower corner
            upper: Upper corner, componentwise larger than :code:`lower`
            counts: Nodes per axis (boundary included), at least 5 each
        """
        self.lower = as_float_array(lower, 'box lower corner').ravel()
        self.upper = as_float_array(upper, 'box upper corner').ravel()
        counts = np.asarray(counts).ravel()
        if self.lower.size not in DIMENSIONS:
            raise DomainError(f'Require dimension n in {DIMENSIONS} but got {self.lower.size}.')
        if self.upper.size != self.lower.size or counts.size != self.lower.size:
            raise DomainError(f'Require lower, upper and counts of equal length but got '
                              f'{self.lower.size}, {self.upper.size}, {counts.size}.')
        if not np.all(self.upper > self.lower):
            raise DomainError(f'Require upper > lower componentwise but got {self.lower} and {self.upper}.')
        if not np.all(counts == np.round(counts)) or np.any(counts < MIN_COUNT):
            raise DomainError(f'Require integer counts >= {MIN_COUNT} per axis but got {counts}.')
        self.counts: Tuple[int, ...] = tuple(int(c) for c in counts)

    @classmethod
    def cube(cls, n: int, lower: float = -1, upper: float = 1, count: int = 17) -> 'Box':
        return cls([lower] * n, [upper] * n, [count] * n)

    @property
    def n(self) -> int:
        return self.lower.size

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def h(self) -> np.ndarray:
        return (self.upper - self.lower) / (np.asarray(self.counts) - 1)

    @property
    def axes(self):
        return [np.linspace(lo, hi, c) for lo, hi, c in zip(self.lower, self.upper, self.counts)]

    @property
    def interior_shape(self) -> Tuple[int, ...]:
        return tuple(c - 2 for c in self.counts)

    def coordinates(self) -> np.ndarray:
        """All node coordinates, shape :code:`counts + (n,)`."""
        return np.stack(np.meshgrid(*self.axes, indexing='ij'), axis=-1)

    def point(self, idx: MultiIndex) -> np.ndarray:
        return self.lower + np.asarray(idx) * self.h

    def __eq__(self, other):
        return isinstance(other, Box) and self.counts == other.counts and \
            np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __repr__(self):
        return f'Box(lower={self.lower.tolist()}, upper={self.upper.tolist()}, counts={list(self.counts)})'


def boundary_mask(box: Box) -> np.ndarray:
    mask = np.zeros(box.shape, dtype=bool)
    for axis in range(box.n):
        index = [slice(None)] * box.n
        index[axis] = [0, -1]
        mask[tuple(index)] = True
    return mask


def interior_indices(box: Box) -> np.ndarray:
    """Interior multi-indices in row-major order, shape :code:`(M, n)`."""
    return np.argwhere(~boundary_mask(box))


def is_interior(box: Box, idx: MultiIndex) -> bool:
    idx = np.asarray(idx)
    return idx.shape == (box.n,) and bool(np.all(idx >= 1) and np.all(idx <= np.asarray(box.counts) - 2))


class GridFunction:
    def __init__(self, box: Box, values: Arraylike):
        """Nodal values on a box grid, stored row-major (last axis fastest) and read-only.

        Args:
            box: The grid
            values: :code:`box.size` finite values, flat or shaped :code:`box.shape`
        """
        values = as_float_array(values, 'grid values')
        if values.size != box.size:
            raise DomainError(f'Require {box.size} values for counts {box.counts} but got {values.size}.')
        self.box = box
        self.values = values.reshape(box.shape).copy()
        self.values.setflags(write=False)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def __getitem__(self, idx: MultiIndex) -> float:
        return float(self.values[tuple(idx)])

    def with_values(self, values: Arraylike) -> 'GridFunction':
        return GridFunction(self.box, values)

    def __repr__(self):
        return f'GridFunction({self.box!r})'


def from_field(box: Box, field: Callable[[np.ndarray], np.ndarray]) -> GridFunction:
    """Sample a field :code:`(..., n) -> (...)` at every node."""
    values = np.asarray(field(box.coordinates().reshape(-1, box.n)), dtype=float)
    return GridFunction(box, np.broadcast_to(values, (box.size,)))


def _shifted(values: np.ndarray, offsets) -> np.ndarray:
    return values[tuple(slice(1 + o, size - 1 + o) for o, size in zip(offsets, values.shape))]


def _gradient_stencil(values: np.ndarray, h: np.ndarray) -> np.ndarray:
    n = values.ndim
    grad = []
    for a in range(n):
        e = np.eye(n, dtype=int)[a]
        grad.append((_shifted(values, e) - _shifted(values, -e)) / (2 * h[a]))
    return np.stack(grad, axis=-1)


def _hessian_stencil(values: np.ndarray, h: np.ndarray) -> np.ndarray:
    n = values.ndim
    eye = np.eye(n, dtype=int)
    center = _shifted(values, np.zeros(n, dtype=int))
    hess = np.zeros(center.shape + (n, n))
    for a in range(n):
        hess[..., a, a] = (_shifted(values, eye[a]) - 2 * center + _shifted(values, -eye[a])) / h[a] ** 2
        for b in range(a + 1, n):
            cross = (_shifted(values, eye[a] + eye[b]) + _shifted(values, -eye[a] - eye[b])
                     - _shifted(values, eye[a] - eye[b]) - _shifted(values, eye[b] - eye[a])) / (4 * h[a] * h[b])
            hess[..., a, b] = hess[..., b, a] = cross
    return hess


def gradient(f: GridFunction) -> np.ndarray:
    """Central-difference gradient at every interior node, shape :code:`interior_shape + (n,)`."""
    return _gradient_stencil(f.values, f.box.h)


def hessian(f: GridFunction) -> np.ndarray:
    """Second differences at every interior node, shape :code:`interior_shape + (n, n)`.

    Diagonal entries use the 3-point stencil and off-diagonal entries the 4-point cross stencil
    :math:`(f_{++} + f_{--} - f_{+-} - f_{-+})/(4h_ih_j)`; both are exact on quadratics.
    """
    return _hessian_stencil(f.values, f.box.h)


def _patch(f: GridFunction, idx: MultiIndex) -> np.ndarray:
    if not is_interior(f.box, idx):
        raise DomainError(f'Stencils need an interior index but got {tuple(idx)} for counts {f.box.counts}.')
    return f.values[tuple(slice(i - 1, i + 2) for i in idx)]


def gradient_at(f: GridFunction, idx: MultiIndex) -> np.ndarray:
    return _gradient_stencil(_patch(f, idx), f.box.h).reshape(f.box.n)


def hessian_at(f: GridFunction, idx: MultiIndex) -> SymTensor:
    return SymTensor(_hessian_stencil(_patch(f, idx), f.box.h).reshape(f.box.n, f.box.n))


def assemble_U(u: GridFunction, chi, idx: MultiIndex) -> SymTensor:
    """:math:`U = \\nabla^2_h u + \\chi(x, u, \\nabla_h u)` at one interior node."""
    x = u.box.point(idx)
    p = gradient_at(u, idx)
    hess = np.asarray(hessian_at(u, idx))
    return SymTensor(hess + np.asarray(chi.value(x, np.asarray(u[idx]), p), dtype=float))


class InteriorState:
    """Flattened interior data :math:`(x, z, p, U)` used for grid-wide operator evaluation."""

    def __init__(self, x: np.ndarray, z: np.ndarray, p: np.ndarray, u: np.ndarray):
        self.x = x
        self.z = z
        self.p = p
        self.u = u


def assemble_U_interior(u: GridFunction, chi=None) -> InteriorState:
    """Vectorized :func:`assemble_U` over all interior nodes in row-major order."""
    box = u.box
    interior = ~boundary_mask(box)
    n = box.n
    x = box.coordinates()[interior]
    z = u.values[interior]
    p = gradient(u).reshape(-1, n)
    hess = hessian(u).reshape(-1, n, n)
    total = hess if chi is None else hess + np.asarray(chi.value(x, z, p), dtype=float)
    return InteriorState(x, z, p, total)


def norms(u: GridFunction) -> Tuple[float, float, float]:
    """Discrete :math:`C^0`, :math:`C^1`, :math:`C^2` sizes: max :math:`|u|` over all nodes, and over interior
    nodes the max gradient length and max spectral radius of the difference Hessian."""
    c0 = float(np.max(np.abs(u.values)))
    c1 = float(np.max(np.linalg.norm(gradient(u), axis=-1)))
    lam, _ = eigen_batch(hessian(u).reshape(-1, u.box.n, u.box.n))
    c2 = float(np.max(np.abs(lam)))
    return c0, c1, c2


def dump_text(f: GridFunction, k: int = 0) -> str:
    """Header :code:`n k counts lower upper` on one line, then one value per line in row-major order."""
    box = f.box
    header = [str(box.n), str(k)] + [str(c) for c in box.counts] + \
             [repr(float(v)) for v in box.lower] + [repr(float(v)) for v in box.upper]
    return '\n'.join([' '.join(header)] + [repr(float(v)) for v in f.flat]) + '\n'


def load_text(text: str) -> Tuple[GridFunction, int]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise DomainError('Empty grid dump.')
    header = lines[0].split()
    try:
        n, k = int(header[0]), int(header[1])
        if len(header) != 2 + 3 * n:
            raise ValueError(f'expected {2 + 3 * n} header fields, got {len(header)}')
        counts = [int(c) for c in header[2:2 + n]]
        lower = [float(v) for v in header[2 + n:2 + 2 * n]]
        upper = [float(v) for v in header[2 + 2 * n:]]
        values = np.array([float(line) for line in lines[1:]])
    except (ValueError, IndexError) as e:
        raise DomainError(f'Malformed grid dump: {e}') from e
    return GridFunction(Box(lower, upper, counts), values), k


def dump_json(f: GridFunction, k: int = 0, indent: Optional[int] = None) -> str:
    box = f.box
    return json.dumps({'n': box.n, 'k': k, 'counts': list(box.counts), 'lower': box.lower.tolist(),
                       'upper': box.upper.tolist(), 'values': f.flat.tolist()}, indent=indent)


def load_json(text: str) -> Tuple[GridFunction, int]:
    try:
        data = json.loads(text)
        box = Box(data['lower'], data['upper'], data['counts'])
        if data['n'] != box.n:
            raise ValueError(f"n = {data['n']} does not match the corners")
        return GridFunction(box, data['values']), int(data['k'])
    except (ValueError, KeyError, TypeError) as e:
        if isinstance(e, DomainError):
            raise
        raise DomainError(f'Malformed grid dump: {e!r}') from e
