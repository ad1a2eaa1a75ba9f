import json
from typing import Optional

import numpy as np
from scipy.special import comb
from scipy.stats import ortho_group

from .typing import Arraylike


def random_symmetric(n: int, rng: np.random.Generator, scale: float = 1) -> np.ndarray:
    """Random symmetric matrix with standard normal entries (GOE-like)

    Args:
        n: Dimension
        rng: Random generator
        scale: Multiplies every entry

    Returns:
        An :code:`(n, n)` symmetric array

    """
    a = rng.standard_normal((n, n)) * scale
    return (a + a.T) / 2


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random orthogonal matrix

    Args:
        n: Dimension
        rng: Random generator

    Returns:
        An :code:`(n, n)` orthogonal array

    """
    return ortho_group.rvs(n, random_state=rng)


def random_unit_vectors(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1)[:, np.newaxis]


def random_cone_vector(n: int, m: int, rng: np.random.Generator, center: float = 1, spread: float = 2,
                       min_sigma: float = 0, max_tries: int = 10000) -> np.ndarray:
    """Rejection-sample a vector from the open Garding cone :math:`\\Gamma_m`.

    Candidates are :math:`c \\mathbf{1} + \\delta` with :math:`\\delta` uniform in :code:`[-spread, spread]^n`,
    redrawn until every :math:`\\sigma_i`, :math:`i \\leq m`, is positive.

    Args:
        n: Length of the vector
        m: Cone index
        rng: Random generator
        center: Offset :math:`c` along the diagonal direction
        spread: Half-width of the perturbation box
        min_sigma: Also demand :math:`\\sigma_i / \\binom{n}{i} > ` :code:`min_sigma` to stay away from the boundary
        max_tries: Give up after this many rejections

    Returns:
        A vector in :math:`\\Gamma_m`

    """
    from .model.symmetric import in_cone, sigma_all
    for _ in range(max_tries):
        lam = center + rng.uniform(-spread, spread, size=n)
        if in_cone(m, lam) and np.all(sigma_all(lam)[1:m + 1] / comb(n, np.arange(1, m + 1)) > min_sigma):
            return lam
    raise RuntimeError(f'Could not sample Gamma_{m} in dimension {n} after {max_tries} tries.')


def random_admissible_tensor(n: int, m: int, rng: np.random.Generator, spread: float = 2,
                             min_sigma: float = 0) -> np.ndarray:
    """Random symmetric matrix whose eigenvalues lie in :math:`\\Gamma_m`."""
    q = random_orthogonal(n, rng)
    lam = random_cone_vector(n, m, rng, spread=spread, min_sigma=min_sigma)
    return q @ np.diag(lam) @ q.T


def as_float_array(values: Arraylike, name: str = 'values') -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        from .errors import DomainError
        raise DomainError(f'All entries of {name} must be finite, got {arr}.')
    return arr


def to_jsonable(obj):
    """Convert numpy scalars and arrays (possibly nested in dicts, lists) to plain python for :code:`json`."""
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj, indent: Optional[int] = 2) -> str:
    return json.dumps(to_jsonable(obj), indent=indent, allow_nan=True)
