from itertools import combinations

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def subset_sigma(k: int, lam) -> float:
    """Brute-force :math:`\\sigma_k` over all :math:`k`-subsets."""
    lam = np.asarray(lam, dtype=float)
    return float(sum(np.prod(lam[list(subset)]) for subset in combinations(range(lam.size), k)))


@pytest.fixture
def oracle():
    return subset_sigma
