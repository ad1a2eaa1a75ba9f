import re
from typing import Optional, Union

import numpy as np
import sympy
from sympy.parsing.sympy_parser import parse_expr

from ..errors import DomainError
from ..typing import Arraylike, ScalarField

FD_STEP = 1e-4

FUNCTIONS = {'sin': sympy.sin, 'cos': sympy.cos, 'exp': sympy.exp, 'abs': sympy.Abs, 'sqrt': sympy.sqrt}
CONSTANTS = {'pi': sympy.pi}
TOKEN = re.compile(r'\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|'
                   r'(?P<op>\*\*|[-+*/(),]))')


class Field:
    """Scalar field on :math:`\\mathbb{R}^n` evaluated on arrays of points :code:`(..., n)`.

    Derivatives default to central differences with step :code:`FD_STEP`; subclasses with closed forms override them.
    """

    def __init__(self, n: int, value: ScalarField, name: str = 'field', step: float = FD_STEP):
        self.n = n
        self._value = value
        self.name = name
        self.step = step

    def __call__(self, x: Arraylike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self._value(x), dtype=float), x.shape[:-1]).copy()

    @property
    def is_quadratic(self) -> bool:
        return False

    def gradient(self, x: Arraylike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        eye = self.step * np.eye(self.n)
        return np.stack([(self(x + eye[s]) - self(x - eye[s])) / (2 * self.step) for s in range(self.n)], axis=-1)

    def hessian(self, x: Arraylike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h = self.step
        eye = h * np.eye(self.n)
        center = self(x)
        out = np.zeros(x.shape[:-1] + (self.n, self.n))
        for a in range(self.n):
            out[..., a, a] = (self(x + eye[a]) - 2 * center + self(x - eye[a])) / h ** 2
            for b in range(a + 1, self.n):
                out[..., a, b] = out[..., b, a] = (self(x + eye[a] + eye[b]) + self(x - eye[a] - eye[b])
                                                   - self(x + eye[a] - eye[b]) - self(x - eye[a] + eye[b])) / (4 * h ** 2)
        return out

    def __repr__(self):
        return f'{type(self).__name__}({self.name!r}, n={self.n})'


def _symbols(n: int):
    return sympy.symbols(' '.join(f'x{i}' for i in range(1, n + 1)), real=True, seq=True)


def parse_expression(text: str, n: int) -> sympy.Expr:
    """Parse the closed-form field language over :code:`x1..xn`: numbers, :code:`+ - * / **`, parentheses,
    :code:`sin cos exp abs sqrt` and :code:`pi`. Any other name is rejected before sympy sees the text."""
    symbols = _symbols(n)
    local = {str(s): s for s in symbols}
    local.update(FUNCTIONS)
    local.update(CONSTANTS)
    pos, text = 0, text.strip()
    if not text:
        raise DomainError('Empty expression.')
    while pos < len(text):
        match = TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            raise DomainError(f'Unexpected character {text[pos]!r} at column {pos + 1} of {text!r}.')
        name = match.group('name')
        if name is not None and name not in local:
            raise DomainError(f'Unknown name {name!r} in {text!r}; allowed: {sorted(local)}.')
        pos = match.end()
    try:
        expr = parse_expr(text, local_dict=local, global_dict={'Integer': sympy.Integer, 'Float': sympy.Float,
                                                                'Rational': sympy.Rational, 'Symbol': sympy.Symbol,
                                                                '__builtins__': {}})
    except Exception as e:
        raise DomainError(f'Could not parse {text!r}: {e}') from e
    if not isinstance(expr, sympy.Expr) or not expr.free_symbols <= set(symbols):
        raise DomainError(f'{text!r} is not a scalar expression in x1..x{n}.')
    return expr


def _lambdify(exprs, symbols):
    functions = [sympy.lambdify(symbols, expr, modules='numpy') for expr in exprs]

    def evaluate(x: np.ndarray) -> np.ndarray:
        columns = [x[..., i] for i in range(x.shape[-1])]
        return np.stack([np.broadcast_to(np.asarray(f(*columns), dtype=float), x.shape[:-1]) for f in functions],
                        axis=-1)

    return evaluate


class ExpressionField(Field):
    def __init__(self, expr: Union[str, sympy.Expr, float], n: int):
        """Closed-form field with exact sympy derivatives.

        Args:
            expr: Expression text, sympy expression or number
            n: Dimension (names :code:`x1..xn`)
        """
        if isinstance(expr, str):
            parsed = parse_expression(expr, n)
        else:
            parsed = sympy.sympify(expr)
        super(ExpressionField, self).__init__(n, self._evaluate, name=str(expr) if isinstance(expr, str)
                                              else sympy.sstr(parsed))
        self.expr = parsed
        self.symbols = _symbols(n)
        self._f = _lambdify([parsed], self.symbols)
        self._grad = _lambdify([sympy.diff(parsed, s) for s in self.symbols], self.symbols)
        self._hess = _lambdify([sympy.diff(parsed, a, b) for a in self.symbols for b in self.symbols], self.symbols)

    def _evaluate(self, x: np.ndarray) -> np.ndarray:
        return self._f(x)[..., 0]

    @property
    def is_quadratic(self) -> bool:
        try:
            return sympy.Poly(self.expr, *self.symbols).total_degree() <= 2
        except sympy.PolynomialError:
            return False

    def gradient(self, x: Arraylike) -> np.ndarray:
        return self._grad(np.asarray(x, dtype=float))

    def hessian(self, x: Arraylike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._hess(x).reshape(x.shape[:-1] + (self.n, self.n))


class QuadraticField(Field):
    def __init__(self, a: Arraylike, b: Optional[Arraylike] = None, c: float = 0):
        """:math:`x^T A x / 2 + b \\cdot x + c` with symmetric :math:`A`."""
        self.a = np.asarray(a, dtype=float)
        n = self.a.shape[0]
        if self.a.shape != (n, n) or not np.allclose(self.a, self.a.T):
            raise DomainError(f'Require a symmetric square matrix but got {self.a.tolist()}.')
        self.b = np.zeros(n) if b is None else np.asarray(b, dtype=float)
        self.c = float(c)
        super(QuadraticField, self).__init__(n, self._evaluate, name='quadratic')

    def _evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.einsum('...i,ij,...j->...', x, self.a, x) / 2 + x @ self.b + self.c

    @property
    def is_quadratic(self) -> bool:
        return True

    def gradient(self, x: Arraylike) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.a + self.b

    def hessian(self, x: Arraylike) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.a, x.shape[:-1] + (self.n, self.n)).copy()


def as_field(value: Union[Field, str, float, int], n: int) -> Field:
    """Coerce a number or expression text to a field; fields pass through."""
    if isinstance(value, Field):
        if value.n != n:
            raise DomainError(f'Require a field on R^{n} but got one on R^{value.n}.')
        return value
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise DomainError(f'Require a number or expression string but got {value!r}.')
    if isinstance(value, str):
        return ExpressionField(value, n)
    number = float(value)
    return ExpressionField(sympy.Integer(int(number)) if number.is_integer() else sympy.Float(number), n)
