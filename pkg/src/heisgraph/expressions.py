"""Smooth functions of (x, z) on the plane y = 0, with their partial derivatives.

Text expressions use a small fixed grammar: numbers, the variables x and z,
the constant pi, + - * / and ** (or pow(a, b)), parentheses, and the
functions sin, cos and exp.  Anything else is rejected.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Protocol

import numpy as np
import sympy as sp

_X, _Z = sp.symbols("x z", real=True)
_FUNCS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp}
_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
           ast.Mult: lambda a, b: a * b, ast.Div: lambda a, b: a / b,
           ast.Pow: lambda a, b: a ** b}


class PlaneFunction(Protocol):
    def __call__(self, x, z) -> np.ndarray: ...
    def dx(self, x, z) -> np.ndarray: ...
    def dz(self, x, z) -> np.ndarray: ...


def _to_sympy(node: ast.AST) -> sp.Expr:
    if isinstance(node, ast.Expression):
        return _to_sympy(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return sp.nsimplify(node.value) if isinstance(node.value, int) else sp.Float(node.value)
    if isinstance(node, ast.Name):
        if node.id == "x":
            return _X
        if node.id == "z":
            return _Z
        if node.id == "pi":
            return sp.pi
        raise ValueError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_to_sympy(node.left), _to_sympy(node.right))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _to_sympy(node.operand)
        return -inner if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = node.func.id
        args = [_to_sympy(a) for a in node.args]
        if name == "pow" and len(args) == 2:
            return args[0] ** args[1]
        if name in _FUNCS and len(args) == 1:
            return _FUNCS[name](args[0])
        raise ValueError(f"unsupported call {name!r}")
    raise ValueError(f"unsupported syntax: {ast.dump(node)[:60]}")


def parse_expression(text: str) -> sp.Expr:
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {text!r}") from exc
    return _to_sympy(tree)


def _vectorize(expr):
    fn = sp.lambdify((_X, _Z), expr, "numpy")

    def call(x, z):
        x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
        return np.broadcast_to(np.asarray(fn(x, z), dtype=float), x.shape).copy()
    return call


class ExprFunction:
    """A plane function given by text, differentiated symbolically."""

    def __init__(self, text: str):
        self.text = text
        self.expr = parse_expression(text)
        self._f = _vectorize(self.expr)
        self._fx = _vectorize(sp.diff(self.expr, _X))
        self._fz = _vectorize(sp.diff(self.expr, _Z))

    def __call__(self, x, z):
        return self._f(x, z)

    def dx(self, x, z):
        return self._fx(x, z)

    def dz(self, x, z):
        return self._fz(x, z)

    def __repr__(self):
        return f"ExprFunction({self.text!r})"


@dataclass(frozen=True)
class Bump:
    """amplitude * exp(1 - 1/(1 - r^2)) inside the ellipse r < 1, zero outside.

    r^2 = ((x - cx)/rx)^2 + ((z - cz)/rz)^2.  Smooth with compact support and
    value ``amplitude`` at the centre.
    """

    cx: float
    cz: float
    rx: float
    rz: float
    amplitude: float = 1.0

    def _parts(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        u = (x - self.cx) / self.rx
        v = (z - self.cz) / self.rz
        r2 = u * u + v * v
        inside = r2 < 1.0
        q = np.where(inside, 1.0 - r2, 1.0)
        val = np.where(inside, self.amplitude * np.exp(1.0 - 1.0 / q), 0.0)
        # d/dr2 of exp(1 - 1/(1 - r2)) is -exp(...)/(1 - r2)^2
        dr2 = np.where(inside, -val / (q * q), 0.0)
        return u, v, val, dr2

    def __call__(self, x, z):
        return self._parts(x, z)[2]

    def dx(self, x, z):
        u, _, _, dr2 = self._parts(x, z)
        return dr2 * 2 * u / self.rx

    def dz(self, x, z):
        _, v, _, dr2 = self._parts(x, z)
        return dr2 * 2 * v / self.rz

    @property
    def support(self) -> tuple[float, float, float, float]:
        return (self.cx - self.rx, self.cx + self.rx, self.cz - self.rz, self.cz + self.rz)


@dataclass(frozen=True)
class Zero:
    def __call__(self, x, z):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(z)).shape)

    dx = __call__
    dz = __call__


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, x, z):
        return np.full(np.broadcast(np.asarray(x), np.asarray(z)).shape, float(self.value))

    def dx(self, x, z):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(z)).shape)

    dz = dx


@dataclass(frozen=True)
class Sum:
    terms: tuple

    def __call__(self, x, z):
        return sum(t(x, z) for t in self.terms)

    def dx(self, x, z):
        return sum(t.dx(x, z) for t in self.terms)

    def dz(self, x, z):
        return sum(t.dz(x, z) for t in self.terms)
