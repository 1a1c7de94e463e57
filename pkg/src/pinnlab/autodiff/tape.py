"""Scalar reverse-mode tape with second-order input jets.

Every node stores its value, an op tag, up to two parent indices and the
local partial derivatives evaluated at record time. A single reverse sweep
over the tape then gives gradients of any node with respect to the leaves.

Jets carry ``u``, ``du/dx_i`` and ``d2u/dx_i dx_j`` as tape nodes, so a loss
built from input derivatives stays differentiable w.r.t. parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pinnlab.errors import DimensionOutOfRange, DivisionByZero, ShapeMismatch

UNARY_OPS = ("neg", "tanh", "sin", "cos", "exp", "square")
BINARY_OPS = ("add", "sub", "mul", "div")


class Tape:
    """Append-only record of a scalar computation."""

    __slots__ = ("values", "ops", "parents", "partials", "bindings")

    def __init__(self):
        self.values: list[float] = []
        self.ops: list[str] = []
        self.parents: list[tuple[int, ...]] = []
        self.partials: list[tuple[float, ...]] = []
        self.bindings: dict = {}

    def __len__(self):
        return len(self.values)

    def push(self, value, op, parents=(), partials=()) -> NodeRef:
        self.values.append(float(value))
        self.ops.append(op)
        self.parents.append(tuple(parents))
        self.partials.append(tuple(float(p) for p in partials))
        return NodeRef(self, len(self.values) - 1)

    def var(self, value) -> NodeRef:
        """Leaf variable (something we differentiate with respect to)."""
        return self.push(value, "var")

    def const(self, value) -> NodeRef:
        return self.push(value, "const")

    def lift(self, a) -> NodeRef:
        if isinstance(a, NodeRef):
            if a.tape is not self:
                raise ValueError("node belongs to a different tape")
            return a
        return self.const(a)


@dataclass(frozen=True, eq=False)
class NodeRef:
    """Handle to a node on a :class:`Tape`."""

    tape: Tape
    index: int

    @property
    def value(self) -> float:
        return self.tape.values[self.index]

    def __add__(self, other):
        return node_binary(self.tape, "add", self, self.tape.lift(other))

    def __radd__(self, other):
        return node_binary(self.tape, "add", self.tape.lift(other), self)

    def __sub__(self, other):
        return node_binary(self.tape, "sub", self, self.tape.lift(other))

    def __rsub__(self, other):
        return node_binary(self.tape, "sub", self.tape.lift(other), self)

    def __mul__(self, other):
        return node_binary(self.tape, "mul", self, self.tape.lift(other))

    def __rmul__(self, other):
        return node_binary(self.tape, "mul", self.tape.lift(other), self)

    def __truediv__(self, other):
        return node_binary(self.tape, "div", self, self.tape.lift(other))

    def __rtruediv__(self, other):
        return node_binary(self.tape, "div", self.tape.lift(other), self)

    def __neg__(self):
        return node_unary(self.tape, "neg", self)

    def square(self):
        return node_unary(self.tape, "square", self)

    def __repr__(self):
        return f"NodeRef({self.index}, value={self.value!r})"


def node_unary(tape: Tape, op: str, a: NodeRef) -> NodeRef:
    x = tape.values[a.index]
    if op == "neg":
        val, d = -x, -1.0
    elif op == "tanh":
        val = math.tanh(x)
        d = 1.0 - val * val
    elif op == "sin":
        val, d = math.sin(x), math.cos(x)
    elif op == "cos":
        val, d = math.cos(x), -math.sin(x)
    elif op == "exp":
        val = math.exp(x)
        d = val
    elif op == "square":
        val, d = x * x, 2.0 * x
    else:
        raise ValueError(f"unknown unary op {op!r}")
    return tape.push(val, op, (a.index,), (d,))


def node_binary(tape: Tape, op: str, a: NodeRef, b: NodeRef) -> NodeRef:
    x, y = tape.values[a.index], tape.values[b.index]
    if op == "add":
        val, da, db = x + y, 1.0, 1.0
    elif op == "sub":
        val, da, db = x - y, 1.0, -1.0
    elif op == "mul":
        val, da, db = x * y, y, x
    elif op == "div":
        if abs(y) < 1e-300:
            raise DivisionByZero(f"division by {y!r}")
        val = x / y
        da, db = 1.0 / y, -x / (y * y)
    else:
        raise ValueError(f"unknown binary op {op!r}")
    return tape.push(val, op, (a.index, b.index), (da, db))


def backward(tape: Tape, loss: NodeRef, wrt: Sequence[NodeRef]) -> np.ndarray:
    """Gradient of ``loss`` w.r.t. each node in ``wrt`` (one reverse sweep)."""
    adj = [0.0] * (loss.index + 1)
    adj[loss.index] = 1.0
    parents, partials = tape.parents, tape.partials
    for i in range(loss.index, -1, -1):
        a = adj[i]
        if a == 0.0:
            continue
        for p, d in zip(parents[i], partials[i]):
            adj[p] += a * d
    return np.array([adj[w.index] if w.index <= loss.index else 0.0 for w in wrt])


@dataclass(frozen=True, eq=False)
class Jet2:
    """Value, input gradient and input Hessian as tape nodes."""

    val: NodeRef
    grad: tuple[NodeRef, ...]
    hess: tuple[tuple[NodeRef, ...], ...]

    @property
    def d(self) -> int:
        return len(self.grad)

    def laplacian(self) -> NodeRef:
        out = self.hess[0][0]
        for i in range(1, self.d):
            out = out + self.hess[i][i]
        return out


def _symmetric(d, entry):
    rows = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(i, d):
            rows[i][j] = rows[j][i] = entry(i, j)
    return tuple(tuple(r) for r in rows)


def jet_seed(tape: Tape, x: Sequence[float], d: int) -> list[Jet2]:
    """Coordinate jets: ``x_i`` with gradient ``e_i`` and zero Hessian."""
    if d not in (1, 2, 3):
        raise DimensionOutOfRange(f"input dimension must be 1, 2 or 3, got {d}")
    if len(x) != d:
        raise ShapeMismatch(f"expected {d} coordinates, got {len(x)}")
    jets = []
    for i in range(d):
        grad = tuple(tape.const(1.0 if j == i else 0.0) for j in range(d))
        hess = _symmetric(d, lambda a, b: tape.const(0.0))
        jets.append(Jet2(tape.const(x[i]), grad, hess))
    return jets


def _dot(terms):
    acc = terms[0][0] * terms[0][1]
    for w, v in terms[1:]:
        acc = acc + w * v
    return acc


def jet_affine(tape: Tape, jets: Sequence[Jet2], weights, bias) -> list[Jet2]:
    """Apply ``out_k = sum_j W[k][j] in_j + b_k`` componentwise to jets."""
    cols = len(jets)
    if len(weights) != len(bias) or any(len(row) != cols for row in weights):
        raise ShapeMismatch(
            f"weights {len(weights)}x{len(weights[0]) if weights else 0} "
            f"vs {cols} inputs and {len(bias)} biases"
        )
    d = jets[0].d
    out = []
    for row, b in zip(weights, bias):
        val = _dot([(w, jet.val) for w, jet in zip(row, jets)]) + b
        grad = tuple(_dot([(w, jet.grad[i]) for w, jet in zip(row, jets)]) for i in range(d))
        hess = _symmetric(d, lambda i, j: _dot([(w, jet.hess[i][j]) for w, jet in zip(row, jets)]))
        out.append(Jet2(val, grad, hess))
    return out


def _activation_derivs(tape, v, act):
    if act == "tanh":
        y = node_unary(tape, "tanh", v)
        d1 = 1.0 - y.square()
        d2 = -2.0 * y * d1
    elif act == "sin":
        y = node_unary(tape, "sin", v)
        d1 = node_unary(tape, "cos", v)
        d2 = -y
    elif act == "linear":
        return v, tape.const(1.0), tape.const(0.0)
    else:
        raise ValueError(f"unknown activation {act!r}")
    return y, d1, d2


def jet_activation(tape: Tape, jet: Jet2, act: str) -> Jet2:
    """Chain rule through a scalar activation, up to second order."""
    y, d1, d2 = _activation_derivs(tape, jet.val, act)
    grad = tuple(d1 * g for g in jet.grad)
    hess = _symmetric(
        jet.d, lambda i, j: d2 * jet.grad[i] * jet.grad[j] + d1 * jet.hess[i][j]
    )
    return Jet2(y, grad, hess)
