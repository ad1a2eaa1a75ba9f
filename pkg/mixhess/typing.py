from typing import Callable, List, Tuple, Union

import numpy as np

Arraylike = Union[np.ndarray, List, Tuple]
Point = Union[np.ndarray, Tuple[float, ...]]
MultiIndex = Tuple[int, ...]
ScalarField = Callable[[np.ndarray], np.ndarray]
