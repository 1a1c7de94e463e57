"""Fully connected networks stored as one flat parameter vector."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from pinnlab import rng
from pinnlab.autodiff import arrays
from pinnlab.autodiff.arrays import ArrayTape, BatchJet, JetLayout
from pinnlab.autodiff.tape import Tape, backward, jet_activation, jet_affine, jet_seed, node_unary
from pinnlab.errors import ShapeMismatch

ACTIVATIONS = ("tanh", "sin", "linear")


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden_widths: tuple[int, ...] = (32, 32, 32)
    output_dim: int = 1
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1 or self.output_dim < 1 or any(w < 1 for w in self.hidden_widths):
            raise ValueError(f"all layer widths must be >= 1: {self}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_widths, self.output_dim)


@dataclass(frozen=True)
class LayerLayout:
    rows: int
    cols: int
    w_off: int
    b_off: int


def make_layout(config: MlpConfig) -> tuple[LayerLayout, ...]:
    layout, off = [], 0
    sizes = config.sizes
    for cols, rows in zip(sizes[:-1], sizes[1:]):
        layout.append(LayerLayout(rows, cols, off, off + rows * cols))
        off += rows * cols + rows
    return tuple(layout)


@dataclass(frozen=True, eq=False)
class MlpParams:
    flat: np.ndarray
    layout: tuple[LayerLayout, ...]

    def __post_init__(self):
        expected = sum(l.rows * l.cols + l.rows for l in self.layout)
        if self.flat.shape != (expected,):
            raise ShapeMismatch(f"flat vector has shape {self.flat.shape}, layout needs {expected}")

    @property
    def size(self) -> int:
        return self.flat.size

    def weight(self, layer: int) -> np.ndarray:
        l = self.layout[layer]
        return self.flat[l.w_off:l.b_off].reshape(l.rows, l.cols)

    def bias(self, layer: int) -> np.ndarray:
        l = self.layout[layer]
        return self.flat[l.b_off:l.b_off + l.rows]

    def replace(self, flat) -> MlpParams:
        return MlpParams(np.asarray(flat, dtype=np.float64), self.layout)


def init_glorot_normal(config: MlpConfig, seed: int) -> MlpParams:
    """Weights ~ N(0, 2/(fan_in+fan_out)), biases zero."""
    layout = make_layout(config)
    flat = np.zeros(sum(l.rows * l.cols + l.rows for l in layout))
    gen = rng.generator(seed, rng.INIT)
    for l in layout:
        std = np.sqrt(2.0 / (l.rows + l.cols))
        flat[l.w_off:l.b_off] = gen.normal(0.0, std, size=l.rows * l.cols)
    return MlpParams(flat, layout)


def _bind(params: MlpParams, tape):
    """Register ``params`` as leaves of ``tape`` (once per tape)."""
    entry = tape.bindings.get(id(params))
    if entry is None or entry[0] is not params:
        if isinstance(tape, Tape):
            leaves = [tape.var(v) for v in params.flat]
        else:
            leaves = [(tape.leaf(params.weight(i)), tape.leaf(params.bias(i)))
                      for i in range(len(params.layout))]
        entry = (params, leaves)
        tape.bindings[id(params)] = entry
    return entry[1]


def _scalar_layer(params, leaves, i):
    l = params.layout[i]
    w = [[leaves[l.w_off + r * l.cols + c] for c in range(l.cols)] for r in range(l.rows)]
    b = leaves[l.b_off:l.b_off + l.rows]
    return w, b


def _check_x(config, x, batched):
    x = np.asarray(x, dtype=np.float64)
    if batched:
        if x.ndim != 2 or x.shape[1] != config.input_dim:
            raise ShapeMismatch(f"expected points of shape (N, {config.input_dim}), got {x.shape}")
    elif x.shape != (config.input_dim,):
        raise ShapeMismatch(f"expected {config.input_dim} coordinates, got shape {x.shape}")
    return x


def forward(params: MlpParams, config: MlpConfig, tape, x):
    """Network output as a tape node.

    On a scalar :class:`Tape`, ``x`` is one point and a :class:`NodeRef` is
    returned. On an :class:`ArrayTape`, ``x`` has shape ``(N, d)`` and the
    result is an ``(N,)`` node.
    """
    if isinstance(tape, Tape):
        x = _check_x(config, x, batched=False)
        leaves = _bind(params, tape)
        h = [tape.const(v) for v in x]
        last = len(params.layout) - 1
        for i in range(len(params.layout)):
            w, b = _scalar_layer(params, leaves, i)
            h = [_affine_row(row, h) + bk for row, bk in zip(w, b)]
            if i < last:
                h = [_scalar_act(tape, v, config.activation) for v in h]
        return h[0]
    x = _check_x(config, x, batched=True)
    stack = _array_forward(params, config, tape, x, JetLayout.value_only(config.input_dim))
    return arrays.take(stack, 0)


def _affine_row(row, h):
    acc = row[0] * h[0]
    for w, v in zip(row[1:], h[1:]):
        acc = acc + w * v
    return acc


def _scalar_act(tape, v, act):
    if act == "linear":
        return v
    return node_unary(tape, act, v)


def _array_forward(params, config, tape, x, layout):
    leaves = _bind(params, tape)
    stack = arrays.jet_seed(x, layout)
    last = len(params.layout) - 1
    for i, (w, b) in enumerate(leaves):
        stack = arrays.jet_affine(stack, w, b)
        if i < last:
            stack = arrays.jet_activation(stack, config.activation, layout)
    return stack


def jet_forward(params: MlpParams, config: MlpConfig, tape, x, layout: JetLayout | None = None):
    """Output with its input gradient and Hessian, all parameter-differentiable.

    Returns a :class:`Jet2` for a scalar tape and a :class:`BatchJet` for an
    array tape. ``layout`` restricts which second derivatives are carried on
    the array tape (default: all of them).
    """
    if isinstance(tape, Tape):
        x = _check_x(config, x, batched=False)
        leaves = _bind(params, tape)
        jets = jet_seed(tape, list(x), config.input_dim)
        last = len(params.layout) - 1
        for i in range(len(params.layout)):
            w, b = _scalar_layer(params, leaves, i)
            jets = jet_affine(tape, jets, w, b)
            if i < last:
                jets = [jet_activation(tape, j, config.activation) for j in jets]
        return jets[0]
    x = _check_x(config, x, batched=True)
    layout = layout or JetLayout.full(config.input_dim)
    stack = _array_forward(params, config, tape, x, layout)
    return BatchJet.from_stack(stack, layout)


def param_gradient(params: MlpParams, tape, loss) -> np.ndarray:
    """Flat gradient of ``loss`` with respect to every network parameter."""
    leaves = _bind(params, tape)
    if isinstance(tape, Tape):
        return backward(tape, loss, leaves)
    flat = np.zeros(params.size)
    nodes = [n for pair in leaves for n in pair]
    grads = tape.backward(loss, nodes)
    for l, gw, gb in zip(params.layout, grads[0::2], grads[1::2]):
        flat[l.w_off:l.b_off] = gw.ravel()
        flat[l.b_off:l.b_off + l.rows] = gb
    return flat


def predict(params: MlpParams, config: MlpConfig, x, chunk: int = 8192) -> np.ndarray:
    """Plain numpy evaluation, no tape."""
    x = _check_x(config, x, batched=True)
    out = np.empty(len(x))
    last = len(params.layout) - 1
    for start in range(0, len(x), chunk):
        h = x[start:start + chunk]
        for i in range(len(params.layout)):
            h = h @ params.weight(i).T + params.bias(i)
            if i < last:
                h = arrays.activate(h, config.activation)
        out[start:start + chunk] = h[:, 0]
    return out


def save_checkpoint(path, params: MlpParams, config: MlpConfig) -> None:
    """Write ``<path>.bin`` (little-endian float64) and ``<path>.json``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.with_suffix(".bin").write_bytes(params.flat.astype("<f8").tobytes())
    meta = {"config": asdict(config), "layout": [asdict(l) for l in params.layout]}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2))


def load_checkpoint(path) -> tuple[MlpParams, MlpConfig]:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    config = MlpConfig(**meta["config"])
    layout = tuple(LayerLayout(**l) for l in meta["layout"])
    if layout != make_layout(config):
        raise ShapeMismatch("checkpoint layout does not match its config")
    flat = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8").astype(np.float64)
    return MlpParams(flat, layout), config
