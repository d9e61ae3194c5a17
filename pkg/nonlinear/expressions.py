"""
Arithmetic expressions in x and y for problem data.

Grammar: numbers, x, y, + - * / ^ (or **), parentheses, exp(.), sqrt(.).
Expressions are parsed with sympy, checked against the grammar, and turned
into vectorized numpy callables with exact symbolic derivatives.
"""
import itertools
from functools import cached_property
from tokenize import TokenError

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

X, Y = sympy.symbols('x y', real=True)
VARIABLES = (X, Y)

_LOCALS = {'x': X, 'y': Y, 'exp': sympy.exp, 'sqrt': sympy.sqrt}
_TRANSFORMATIONS = standard_transformations + (convert_xor,)
_ALLOWED_NODES = (sympy.Symbol, sympy.Number, sympy.NumberSymbol, sympy.Add, sympy.Mul, sympy.Pow, sympy.exp)


def parse_expression(text: str) -> sympy.Expr:
    """Parse ``text``; raises ValueError naming the construct outside the grammar."""
    if not isinstance(text, str) or not text.strip():
        raise ValueError("empty expression")
    try:
        expr = parse_expr(text, local_dict=dict(_LOCALS), transformations=_TRANSFORMATIONS)
    except (SyntaxError, TypeError, sympy.SympifyError, TokenError) as exc:
        raise ValueError(f"cannot parse {text!r}: {exc}") from exc
    expr = sympy.sympify(expr)
    unknown = expr.free_symbols - set(VARIABLES)
    if unknown:
        raise ValueError(f"unknown names in {text!r}: {', '.join(sorted(map(str, unknown)))}")
    for node in sympy.preorder_traversal(expr):
        if not isinstance(node, _ALLOWED_NODES):
            raise ValueError(f"{type(node).__name__} is not allowed in {text!r}")
    return expr


class AnalyticFunction:
    """A symbolic function of (x, y) with numpy evaluation of itself and its derivatives."""

    def __init__(self, expr, text: str | None = None):
        self.expr = sympy.sympify(expr)
        self.text = text if text is not None else str(self.expr)

    @classmethod
    def parse(cls, text: str) -> 'AnalyticFunction':
        return cls(parse_expression(text), text.strip())

    def __repr__(self):
        return f"AnalyticFunction({self.text!r})"

    @staticmethod
    def _lambdify(expr):
        fn = sympy.lambdify(VARIABLES, expr, modules='numpy')

        def evaluate(x, y):
            x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
            return np.broadcast_to(np.asarray(fn(x, y), dtype=float), np.broadcast(x, y).shape).copy()
        return evaluate

    @cached_property
    def _value(self):
        return self._lambdify(self.expr)

    def __call__(self, x, y):
        return self._value(x, y)

    def derivative(self, order: int) -> list:
        """Symbolic derivative tensor flattened over axis tuples in lexicographic order."""
        return [sympy.diff(self.expr, *(VARIABLES[a] for a in axes))
                for axes in itertools.product((0, 1), repeat=order)]

    def derivative_tensor(self, order: int):
        """Callable (x, y) -> array of shape x.shape + (2,) * order."""
        parts = [self._lambdify(d) for d in self.derivative(order)]

        def evaluate(x, y):
            values = np.stack([p(x, y) for p in parts], axis=-1)
            return values.reshape(values.shape[:-1] + (2,) * order)
        return evaluate

    @cached_property
    def gradient(self):
        return self.derivative_tensor(1)

    @cached_property
    def hessian(self):
        return self.derivative_tensor(2)

    @cached_property
    def hessian_expr(self) -> sympy.Matrix:
        return sympy.hessian(self.expr, VARIABLES)

    def hessian_matrix_function(self):
        """(x, y) -> [[h11, h12], [h21, h22]] for matrix interpolation."""
        entries = [[self._lambdify(self.hessian_expr[i, j]) for j in range(2)] for i in range(2)]
        return lambda x, y: [[entries[i][j](x, y) for j in range(2)] for i in range(2)]

    def scaled(self, alpha: float) -> 'AnalyticFunction':
        return AnalyticFunction(sympy.nsimplify(alpha) * self.expr, f"({alpha!r})*({self.text})")

    def monge_ampere(self) -> 'AnalyticFunction':
        """det D^2 of this function, simplified symbolically."""
        det = sympy.simplify(self.hessian_expr.det())
        return AnalyticFunction(det)
