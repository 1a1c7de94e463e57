"""Array-valued reverse-mode tape used by the training loop.

Same idea as :mod:`pinnlab.autodiff.tape` but every node holds a numpy array
covering a whole batch of sample points, and network layers are recorded as
single fused ops with hand-written vector-Jacobian products. A pure-Python
scalar tape is far too slow for thousands of points and thousands of steps;
the scalar tape is kept as the reference these ops are tested against.

Batched jets are stored stacked along a leading "slot" axis of size K:
slot 0 is the value, slots ``1..d`` the input gradient, and the remaining
slots tracked second-derivative combinations (see :class:`JetLayout`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pinnlab.autodiff import _kernels
from pinnlab.errors import DimensionOutOfRange, ShapeMismatch


class ArrayTape:
    __slots__ = ("values", "parents", "vjps", "bindings")

    def __init__(self):
        self.values: list[np.ndarray] = []
        self.parents: list[tuple[int, ...]] = []
        self.vjps: list = []
        self.bindings: dict = {}

    def __len__(self):
        return len(self.values)

    def clear(self) -> None:
        """Drop every recorded array.

        Backward closures hold nodes that point back at the tape, so a
        finished tape is only reclaimed by the cycle collector; clearing it
        frees the arrays immediately.
        """
        self.values.clear()
        self.parents.clear()
        self.vjps.clear()
        self.bindings.clear()

    def record(self, value, parents=(), vjp=None) -> ArrayNode:
        self.values.append(value)
        self.parents.append(tuple(p.index for p in parents))
        self.vjps.append(vjp)
        return ArrayNode(self, len(self.values) - 1)

    def leaf(self, value) -> ArrayNode:
        return self.record(np.asarray(value, dtype=np.float64))

    def backward(self, loss: ArrayNode, wrt: Sequence[ArrayNode]) -> list[np.ndarray]:
        adj: list = [None] * (loss.index + 1)
        adj[loss.index] = np.ones_like(self.values[loss.index])
        for i in range(loss.index, -1, -1):
            g = adj[i]
            if g is None or not self.parents[i]:
                continue
            for p, gp in zip(self.parents[i], self.vjps[i](g)):
                if gp is None:
                    continue
                adj[p] = gp if adj[p] is None else adj[p] + gp
        out = []
        for w in wrt:
            g = adj[w.index] if w.index <= loss.index else None
            out.append(np.zeros_like(self.values[w.index]) if g is None else g)
        return out


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


@dataclass(frozen=True, eq=False)
class ArrayNode:
    tape: ArrayTape
    index: int

    @property
    def value(self) -> np.ndarray:
        return self.tape.values[self.index]

    @property
    def shape(self):
        return self.value.shape

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, -other)

    def __rsub__(self, other):
        return add(-self, other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ArrayNode):
            raise TypeError("division by a node is not supported on the array tape")
        return mul(self, 1.0 / np.asarray(other, dtype=np.float64))

    def __neg__(self):
        return mul(self, -1.0)

    def square(self):
        return square(self)

    def mean(self):
        return mean(self)

    def __repr__(self):
        return f"ArrayNode({self.index}, shape={self.shape})"


def add(a, b):
    if not isinstance(a, ArrayNode):
        a, b = b, a
    tape = a.tape
    if isinstance(b, ArrayNode):
        sa, sb = a.shape, b.shape
        return tape.record(
            a.value + b.value, (a, b),
            lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
        )
    sa = a.shape
    return tape.record(a.value + b, (a,), lambda g: (_unbroadcast(g, sa),))


def mul(a, b):
    if not isinstance(a, ArrayNode):
        a, b = b, a
    tape = a.tape
    if isinstance(b, ArrayNode):
        av, bv = a.value, b.value
        return tape.record(
            av * bv, (a, b),
            lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
        )
    c = np.asarray(b, dtype=np.float64)
    sa = a.shape
    return tape.record(a.value * c, (a,), lambda g: (_unbroadcast(g * c, sa),))


def square(a):
    x = a.value
    return a.tape.record(x * x, (a,), lambda g: (2.0 * x * g,))


def tanh(a):
    y = np.tanh(a.value)
    return a.tape.record(y, (a,), lambda g: (g * (1.0 - y * y),))


def sin(a):
    x = a.value
    return a.tape.record(np.sin(x), (a,), lambda g: (g * np.cos(x),))


def cos(a):
    x = a.value
    return a.tape.record(np.cos(x), (a,), lambda g: (-g * np.sin(x),))


def exp(a):
    y = np.exp(a.value)
    return a.tape.record(y, (a,), lambda g: (g * y,))


def mean(a):
    x = a.value
    n = x.size
    return a.tape.record(np.asarray(x.mean()), (a,), lambda g: (np.full(x.shape, g / n),))


def total(a):
    x = a.value
    return a.tape.record(np.asarray(x.sum()), (a,), lambda g: (np.full(x.shape, g),))


def take(stack, slot):
    """Scalar-output component ``stack[slot, :, 0]`` of a stacked jet."""
    shape = stack.shape
    if shape[-1] != 1:
        raise ShapeMismatch(f"take expects a single output column, got {shape}")

    def vjp(g):
        out = np.zeros(shape)
        out[slot, :, 0] = g
        return (out,)

    return stack.tape.record(stack.value[slot, :, 0], (stack,), vjp)


@dataclass(frozen=True)
class JetLayout:
    """Which derivative slots a stacked batch jet carries.

    ``order=0`` carries the value only, ``order=1`` adds the gradient and
    ``order=2`` adds one slot per entry of ``second``. Each entry is a fixed
    combination ``sum c * d2/dx_i dx_j`` given as ``((i, j, c), ...)`` with
    ``i <= j``; a single pair is ``((i, j, 1.0),)`` and the Laplacian in 2-D
    is ``((0, 0, 1.0), (1, 1, 1.0))``.
    """

    d: int
    second: tuple = ()
    order: int = 2

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise DimensionOutOfRange(f"input dimension must be 1, 2 or 3, got {self.d}")
        norm = []
        for terms in self.second:
            norm.append(tuple((int(i), int(j), float(c)) for i, j, c in terms))
            for i, j, _ in norm[-1]:
                if not (0 <= i <= j < self.d):
                    raise ValueError(f"bad derivative pair {(i, j)} for d={self.d}")
        object.__setattr__(self, "second", tuple(norm))

    @classmethod
    def full(cls, d):
        return cls.pairs(d, [(i, j) for i in range(d) for j in range(i, d)])

    @classmethod
    def pairs(cls, d, pairs):
        return cls(d, tuple(((i, j, 1.0),) for i, j in pairs))

    @classmethod
    def laplacian(cls, d):
        return cls(d, (tuple((i, i, 1.0) for i in range(d)),))

    @classmethod
    def value_only(cls, d):
        return cls(d, (), order=0)

    @property
    def n_grad(self):
        return self.d if self.order >= 1 else 0

    @property
    def n_second(self):
        return len(self.second) if self.order >= 2 else 0

    @property
    def size(self):
        return 1 + self.n_grad + self.n_second

    def slot(self, i, j=None):
        """Slot of ``du/dx_i``, or of the single pair ``d2u/dx_i dx_j``."""
        if j is None:
            return 1 + i
        key = ((min(i, j), max(i, j), 1.0),)
        return 1 + self.n_grad + self.second[: self.n_second].index(key)

    def pair_slots(self):
        out = {}
        for s, terms in enumerate(self.second[: self.n_second]):
            if len(terms) == 1 and terms[0][2] == 1.0:
                out[terms[0][:2]] = 1 + self.n_grad + s
        return out

    def laplacian_slot(self):
        key = tuple((i, i, 1.0) for i in range(self.d))
        if key in self.second[: self.n_second]:
            return 1 + self.n_grad + self.second.index(key)
        return None


def jet_seed(x, layout: JetLayout) -> np.ndarray:
    """Constant stacked jet for coordinates ``x`` of shape ``(N, d)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != layout.d:
        raise ShapeMismatch(f"expected points of shape (N, {layout.d}), got {x.shape}")
    s = np.zeros((layout.size,) + x.shape)
    s[0] = x
    for i in range(layout.n_grad):
        s[1 + i, :, i] = 1.0
    return s


def jet_affine(stack, weight: ArrayNode, bias: ArrayNode):
    """``W @ slot + b`` on the value slot, ``W @ slot`` on derivative slots."""
    tape = weight.tape
    is_node = isinstance(stack, ArrayNode)
    s = stack.value if is_node else stack
    w, b = weight.value, bias.value
    k, n, cols = s.shape
    if w.shape[1] != cols or b.shape != (w.shape[0],):
        raise ShapeMismatch(f"weight {w.shape}, bias {b.shape} vs input width {cols}")
    rows = w.shape[0]
    flat = s.reshape(-1, cols)
    out = (flat @ w.T).reshape(k, n, rows)
    out[0] += b

    def vjp(g):
        g2 = g.reshape(-1, rows)
        gw = g2.T @ flat
        gb = g[0].sum(axis=0)
        if is_node:
            return ((g2 @ w).reshape(k, n, cols), gw, gb)
        return (gw, gb)

    parents = (stack, weight, bias) if is_node else (weight, bias)
    return tape.record(out, parents, vjp)


def activate(v, act):
    """Plain elementwise activation (no derivatives)."""
    if act == "tanh":
        return np.tanh(v)
    if act == "sin":
        return np.sin(v)
    if act == "linear":
        return v
    raise ValueError(f"unknown activation {act!r}")


def jet_activation(stack: ArrayNode, act: str, layout: JetLayout):
    """Elementwise activation applied to a stacked jet, to second order.

    With ``z`` the pre-activation: ``phi(z)``, ``phi'(z) dz`` and, per second
    order slot, ``phi''(z) Q(dz) + phi'(z) h`` where ``Q`` is the slot's
    quadratic form in the gradient.
    """
    s = stack.value
    if s.shape[0] != layout.size:
        raise ShapeMismatch(f"stack has {s.shape[0]} slots, layout expects {layout.size}")
    code = _kernels.ACT_CODES.get(act)
    if code is None:
        raise ValueError(f"unknown activation {act!r}")
    d, ns = layout.n_grad, layout.n_second
    terms = [(m, i, j, c) for m, combo in enumerate(layout.second[:ns]) for i, j, c in combo]
    t_slot = np.array([t[0] for t in terms], dtype=np.int64)
    t_i = np.array([t[1] for t in terms], dtype=np.int64)
    t_j = np.array([t[2] for t in terms], dtype=np.int64)
    t_c = np.array([t[3] for t in terms], dtype=np.float64)
    args = (d, ns, t_slot, t_i, t_j, t_c, code)
    k = s.shape[0]
    flat = s.reshape(k, -1)
    y, cz = _kernels.transcendentals(flat[0], code)
    out = _kernels.activation_forward(flat, y, cz, *args).reshape(s.shape)

    def vjp(a):
        a = np.ascontiguousarray(a).reshape(k, -1)
        return (_kernels.activation_vjp(flat, y, cz, a, *args).reshape(s.shape),)

    return stack.tape.record(out, (stack,), vjp)


@dataclass(frozen=True, eq=False)
class BatchJet:
    """Per-component view of a network output jet over N points.

    ``hess[i][j]`` is ``None`` for pairs the layout did not track.
    """

    val: ArrayNode
    grad: tuple
    hess: tuple
    layout: JetLayout
    lap: ArrayNode | None = None

    @property
    def d(self):
        return self.layout.d

    @classmethod
    def from_stack(cls, stack: ArrayNode, layout: JetLayout) -> BatchJet:
        val = take(stack, 0)
        grad = tuple(take(stack, layout.slot(i)) for i in range(layout.n_grad))
        rows = [[None] * layout.d for _ in range(layout.d)]
        for (i, j), slot in layout.pair_slots().items():
            rows[i][j] = rows[j][i] = take(stack, slot)
        lap = layout.laplacian_slot()
        lap = take(stack, lap) if lap is not None else None
        return cls(val, grad, tuple(tuple(r) for r in rows), layout, lap)

    def laplacian(self):
        if self.lap is not None:
            return self.lap
        diag = [self.hess[i][i] for i in range(self.d)]
        if any(h is None for h in diag):
            raise ValueError("layout tracks neither the Laplacian nor every diagonal pair")
        out = diag[0]
        for h in diag[1:]:
            out = out + h
        return out
