"""
Fields - Expressions Module
Gramática de expresiones analíticas de la configuración

Gramática:
- identificadores: x, y, z
- operadores: + - * / ^ (también **) y paréntesis
- funciones: sin, cos, exp
- constante: pi
- literales numéricos, con exponente opcional (1e-3)

Se valida por tokens antes de entregar el texto a sympy; el gradiente se
obtiene simbólicamente y se evalúa con numpy.
"""

import re
from typing import Callable, List, Sequence

import numpy as np
import sympy as sym
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from utils.errors import ExpressionError

X, Y, Z = sym.symbols("x y z", real=True)
COORDINATES = (X, Y, Z)
FUNCTIONS = {"sin": sym.sin, "cos": sym.cos, "exp": sym.exp}
CONSTANTS = {"pi": sym.pi}

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)
_LOCALS = {"x": X, "y": Y, "z": Z, **FUNCTIONS, **CONSTANTS}
_GLOBALS = {
    "Integer": sym.Integer,
    "Float": sym.Float,
    "Rational": sym.Rational,
    "Symbol": sym.Symbol,
}


def tokenize(text: str) -> List[str]:
    """Divide el texto en tokens de la gramática o lanza ExpressionError."""
    tokens, pos = [], 0
    stripped = text.rstrip()
    while pos < len(stripped):
        match = _TOKEN.match(stripped, pos)
        if match is None or match.end() == pos:
            raise ExpressionError(f"unexpected character {stripped[pos:].lstrip()[:1]!r} in {text!r}")
        name = match.group("name")
        if name is not None and name not in _LOCALS:
            raise ExpressionError(f"unknown identifier {name!r} in {text!r}")
        tokens.append(match.group(match.lastgroup))
        pos = match.end()
    if not tokens:
        raise ExpressionError("empty expression")
    return tokens


def parse_expression(text: str) -> sym.Expr:
    """Convierte el texto en una expresión sympy restringida a la gramática."""
    tokenize(text)
    try:
        expr = parse_expr(
            text,
            local_dict=dict(_LOCALS),
            global_dict=dict(_GLOBALS),
            transformations=standard_transformations + (convert_xor,),
        )
    except Exception as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc}") from None
    if not isinstance(expr, sym.Expr):
        raise ExpressionError(f"{text!r} is not a scalar expression")
    if not expr.free_symbols <= set(COORDINATES):
        raise ExpressionError(f"{text!r} uses symbols outside x, y, z")
    allowed = tuple(FUNCTIONS.values())
    for call in expr.atoms(sym.Function):
        if not isinstance(call, allowed):
            raise ExpressionError(f"{text!r} uses unsupported function {call.func}")
    return expr


class ScalarExpression:
    """
    Función escalar q(x, y, z) compilada a numpy, con gradiente simbólico
    """

    def __init__(self, text: str):
        self.text = text
        self.expr = parse_expression(text)
        self._value = sym.lambdify(COORDINATES, self.expr, modules="numpy")
        self.gradient_exprs = [sym.diff(self.expr, s) for s in COORDINATES]
        self._gradient = [sym.lambdify(COORDINATES, g, modules="numpy") for g in self.gradient_exprs]

    @staticmethod
    def _columns(points: np.ndarray):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cols = [pts[:, a] for a in range(pts.shape[1])]
        while len(cols) < 3:
            cols.append(np.zeros(pts.shape[0]))
        return pts.shape[0], cols

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Valores (n,) en puntos (n, d), d en {2, 3}."""
        n, cols = self._columns(points)
        with np.errstate(all="ignore"):
            out = np.asarray(self._value(*cols), dtype=float)
        return np.broadcast_to(out, (n,)).copy()

    def gradient(self, points: np.ndarray) -> np.ndarray:
        """Gradiente ambiente (n, d) en puntos (n, d)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n, cols = self._columns(pts)
        grads = []
        for a in range(pts.shape[1]):
            with np.errstate(all="ignore"):
                g = np.asarray(self._gradient[a](*cols), dtype=float)
            grads.append(np.broadcast_to(g, (n,)))
        return np.column_stack(grads)

    @property
    def is_constant(self) -> bool:
        return not self.expr.free_symbols

    def __repr__(self) -> str:
        return f"ScalarExpression({self.text!r})"


class VectorExpression:
    """Campo vectorial por componentes, p. ej. la distorsión inicial."""

    def __init__(self, texts: Sequence[str]):
        if not 2 <= len(texts) <= 3:
            raise ExpressionError("vector expressions need 2 or 3 components")
        self.components = [ScalarExpression(t) for t in texts]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != len(self.components):
            raise ExpressionError(
                f"vector expression has {len(self.components)} components, points are {pts.shape[1]}-dimensional")
        return np.column_stack([c.evaluate(pts) for c in self.components])

    def as_callable(self) -> Callable[[np.ndarray], np.ndarray]:
        return self.__call__
