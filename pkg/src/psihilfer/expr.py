"""Tiny, total expression language for right-hand sides, histories and weights.

Right-hand sides use the variables t, y, yd with +, -, *, numeric constants
and the functions sin, cos, tanh. No division and no exp, so every
expression is globally Lipschitz on bounded t-ranges. Expressions of t alone
(history, phi) may additionally use /, ** with a constant exponent, exp,
log and sqrt.
"""

from __future__ import annotations

import ast
from typing import Callable

import numpy as np

RHS_VARS = ("t", "y", "yd")
RHS_FUNCS = {"sin": np.sin, "cos": np.cos, "tanh": np.tanh}
T_FUNCS = {**RHS_FUNCS, "exp": np.exp, "log": np.log, "sqrt": np.sqrt}


class ExpressionError(ValueError):
    pass


def _compile(text: str, variables, funcs, extended: bool) -> Callable:
    try:
        tree = ast.parse(str(text).strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def build(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            value = float(node.value)
            return lambda env: value
        if isinstance(node, ast.Name):
            if node.id not in variables:
                raise ExpressionError(f"unknown variable {node.id!r} in {text!r}")
            name = node.id
            return lambda env: env[name]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda env: -inner(env)
            return inner
        if isinstance(node, ast.BinOp):
            left, right = build(node.left), build(node.right)
            op = node.op
            if isinstance(op, ast.Add):
                return lambda env: left(env) + right(env)
            if isinstance(op, ast.Sub):
                return lambda env: left(env) - right(env)
            if isinstance(op, ast.Mult):
                return lambda env: left(env) * right(env)
            if extended and isinstance(op, ast.Div):
                return lambda env: left(env) / right(env)
            if extended and isinstance(op, ast.Pow):
                if not isinstance(node.right, (ast.Constant, ast.UnaryOp)):
                    raise ExpressionError(f"exponent must be a constant in {text!r}")
                return lambda env: np.power(left(env), right(env))
            raise ExpressionError(f"operator {type(op).__name__} not allowed in {text!r}")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            fn = funcs.get(node.func.id)
            if fn is None:
                raise ExpressionError(f"function {node.func.id!r} not allowed in {text!r}")
            if len(node.args) != 1:
                raise ExpressionError(f"{node.func.id} takes one argument in {text!r}")
            arg = build(node.args[0])
            return lambda env: fn(arg(env))
        raise ExpressionError(f"unsupported syntax in {text!r}")

    return build(tree.body)


def compile_rhs(text: str) -> Callable:
    """F(t, y, yd) over numpy arrays."""
    body = _compile(text, RHS_VARS, RHS_FUNCS, extended=False)

    def rhs(t, y, yd):
        t = np.asarray(t, dtype=float)
        out = body({"t": t, "y": np.asarray(y, dtype=float), "yd": np.asarray(yd, dtype=float)})
        return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast_shapes(t.shape, np.shape(y), np.shape(yd)))

    rhs.source = text
    return rhs


def compile_t(text: str) -> Callable:
    """g(t) over numpy arrays."""
    body = _compile(text, ("t",), T_FUNCS, extended=True)

    def g(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            return np.broadcast_to(np.asarray(body({"t": t}), dtype=float), t.shape)

    g.source = text
    return g
