"""Named analytic test fields and a small arithmetic-expression parser."""

from __future__ import annotations

import ast

import numpy as np

from .errors import InvalidParameter
from .montecarlo import AnalyticField

_ALLOWED_CALLS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_ALLOWED_NAMES = {"x", "y", "pi", "e"}
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Call,
    ast.Load, ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


def _validate(node: ast.AST) -> None:
    for sub in ast.walk(node):
        if not isinstance(sub, _ALLOWED_NODES):
            raise InvalidParameter(
                f"unsupported syntax in field expression: {type(sub).__name__}")
        if isinstance(sub, ast.Name) and sub.id not in _ALLOWED_NAMES | set(_ALLOWED_CALLS):
            raise InvalidParameter(f"unknown name {sub.id!r} in field expression")
        if isinstance(sub, ast.Call):
            if not isinstance(sub.func, ast.Name) or sub.func.id not in _ALLOWED_CALLS:
                raise InvalidParameter("only sin, cos, exp calls are allowed")
        if isinstance(sub, ast.Constant) and not isinstance(sub.value, (int, float)):
            raise InvalidParameter("only numeric constants are allowed")


def parse_field(expr: str) -> AnalyticField:
    """Compile an arithmetic expression in x and y into a vectorized field.

    Supported: + - * / ** with unary minus, sin/cos/exp, numeric constants,
    pi and e. Example: ``sin(x)*cos(y) + 2``.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise InvalidParameter(f"invalid field expression {expr!r}: {exc}") from exc
    _validate(tree)
    code = compile(tree, "<field>", "eval")
    env = dict(_ALLOWED_CALLS, pi=np.pi, e=np.e)

    def fn(x, y):
        out = eval(code, {"__builtins__": {}}, dict(env, x=x, y=y))
        return np.broadcast_to(np.asarray(out, dtype=np.float64), np.shape(x)).copy() \
            if np.ndim(out) == 0 else out
    return AnalyticField(fn, name=expr)


#: the two test fields used throughout the experiment harnesses
NAMED_FIELDS = {
    "linear": "x + y",
    "smooth": "sin(x)*cos(y) + 2",
}


def get_field(name_or_expr: str) -> AnalyticField:
    """Named field (``linear``, ``smooth``) or a custom expression."""
    expr = NAMED_FIELDS.get(name_or_expr, name_or_expr)
    f = parse_field(expr)
    f.name = name_or_expr
    return f
