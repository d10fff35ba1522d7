"""Explicit ReLU multilayer perceptrons.

A :class:`ReluNet` is an ordered tuple of affine layers.  ReLU is applied
after every layer except the last, which is affine.  Nets are immutable;
the arrays they hold are read-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError, ParseError

NET_FORMAT = "kuhnnet-net/1"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        b = _frozen(self.bias)
        if w.ndim != 2:
            raise InputError(f"weights must be a matrix, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise InputError(f"bias length {b.shape} does not match {w.shape[0]} rows")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise InputError("layer entries must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class ReluNet:
    layers: tuple[Layer, ...]
    input_dim: int

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise InputError("a net needs at least one layer")
        cols = self.input_dim
        for i, layer in enumerate(layers):
            if layer.cols != cols:
                raise InputError(f"layer {i} has {layer.cols} columns, expected {cols}")
            cols = layer.rows
        object.__setattr__(self, "layers", layers)

    @property
    def output_dim(self) -> int:
        return self.layers[-1].rows

    def __call__(self, x):
        return evaluate(self, x)

    def __eq__(self, other):
        if not isinstance(other, ReluNet) or self.input_dim != other.input_dim:
            return False
        if len(self.layers) != len(other.layers):
            return False
        return all(
            np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers)
        )

    __hash__ = None


def make_net(layers: Sequence[tuple], input_dim: int | None = None) -> ReluNet:
    """Build a net from ``(weights, bias)`` pairs."""
    built = tuple(l if isinstance(l, Layer) else Layer(*l) for l in layers)
    if input_dim is None:
        input_dim = built[0].cols
    return ReluNet(built, input_dim)


def evaluate(net: ReluNet, x) -> np.ndarray:
    """Forward pass.

    ``x`` is a vector of length ``input_dim`` or a batch of shape
    ``(m, input_dim)``; the result has matching leading shape.
    """
    h = np.asarray(x, dtype=np.float64)
    single = h.ndim == 1
    if single:
        h = h[None, :]
    if h.ndim != 2 or h.shape[1] != net.input_dim:
        raise InputError(f"expected input of dimension {net.input_dim}, got shape {np.shape(x)}")
    last = len(net.layers) - 1
    for i, layer in enumerate(net.layers):
        h = h @ layer.weights.T + layer.bias
        if i < last:
            np.maximum(h, 0.0, out=h)
    return h[0] if single else h


def eval_scalar(net: ReluNet, x) -> np.ndarray:
    """Evaluate a single-output net and drop the output axis."""
    return evaluate(net, x)[..., 0]


def widthvec(net: ReluNet) -> list[int]:
    return [layer.rows for layer in net.layers[:-1]]


def width(net: ReluNet) -> int:
    return max(widthvec(net), default=0)


def depth(net: ReluNet) -> int:
    return len(net.layers) - 1


def count_nonzero_params(net: ReluNet, tolerance: float = 0.0) -> int:
    if not np.isfinite(tolerance) or tolerance < 0:
        raise InputError("tolerance must be finite and non-negative")
    return int(sum(
        np.count_nonzero(np.abs(l.weights) > tolerance) + np.count_nonzero(np.abs(l.bias) > tolerance)
        for l in net.layers
    ))


def param_max_norm(net: ReluNet) -> float:
    m = 0.0
    for l in net.layers:
        if l.weights.size:
            m = max(m, float(np.abs(l.weights).max()))
        if l.bias.size:
            m = max(m, float(np.abs(l.bias).max()))
    return m


def zero_net(input_dim: int, output_dim: int = 1) -> ReluNet:
    return make_net([(np.zeros((output_dim, input_dim)), np.zeros(output_dim))], input_dim)


# composition helpers

def compose(outer: ReluNet, inner: ReluNet) -> ReluNet:
    """``outer ∘ inner``; the affine output of ``inner`` merges into ``outer``'s first layer."""
    if inner.output_dim != outer.input_dim:
        raise InputError("dimension mismatch in composition")
    a, b = inner.layers[-1], outer.layers[0]
    merged = Layer(b.weights @ a.weights, b.weights @ a.bias + b.bias)
    return ReluNet(inner.layers[:-1] + (merged,) + outer.layers[1:], inner.input_dim)


def parallel(nets: Sequence[ReluNet]) -> ReluNet:
    """Nets of equal depth on a shared input, outputs concatenated."""
    nets = list(nets)
    if len({len(n.layers) for n in nets}) != 1 or len({n.input_dim for n in nets}) != 1:
        raise InputError("parallel nets need equal depth and input dimension")
    layers = []
    for i in range(len(nets[0].layers)):
        ws = [n.layers[i].weights for n in nets]
        if i == 0:
            w = np.vstack(ws)
        else:
            w = np.zeros((sum(x.shape[0] for x in ws), sum(x.shape[1] for x in ws)))
            r = c = 0
            for x in ws:
                w[r:r + x.shape[0], c:c + x.shape[1]] = x
                r += x.shape[0]
                c += x.shape[1]
        layers.append(Layer(w, np.concatenate([n.layers[i].bias for n in nets])))
    return ReluNet(tuple(layers), nets[0].input_dim)


# serialization

def to_dict(net: ReluNet) -> dict:
    return {
        "format": NET_FORMAT,
        "input_dim": net.input_dim,
        "layers": [{"weights": l.weights.tolist(), "bias": l.bias.tolist()} for l in net.layers],
    }


def serialize(net: ReluNet) -> bytes:
    # json writes floats with repr, the shortest string that round-trips
    return (json.dumps(to_dict(net), allow_nan=False, separators=(",", ":")) + "\n").encode()


def _reject_constant(name):
    raise ParseError(f"non-finite number {name!r} is not allowed")


def loads_json(data) -> object:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        return json.loads(data, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None


def _real_vector(v, where) -> list[float]:
    if not isinstance(v, list):
        raise ParseError(f"{where}: expected a list")
    for j, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ParseError(f"{where}[{j}]: expected a number")
    return [float(x) for x in v]


def from_dict(doc) -> ReluNet:
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object")
    if doc.get("format") != NET_FORMAT:
        raise ParseError(f"format: expected {NET_FORMAT!r}, got {doc.get('format')!r}")
    dim = doc.get("input_dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ParseError("input_dim: expected a positive integer")
    raw = doc.get("layers")
    if not isinstance(raw, list) or not raw:
        raise ParseError("layers: expected a non-empty list")
    layers = []
    cols = dim
    for i, entry in enumerate(raw):
        where = f"layers[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{where}: expected an object")
        w = entry.get("weights")
        if not isinstance(w, list):
            raise ParseError(f"{where}.weights: expected a list of rows")
        rows = [_real_vector(r, f"{where}.weights[{j}]") for j, r in enumerate(w)]
        for j, r in enumerate(rows):
            if len(r) != cols:
                raise ParseError(f"{where}.weights[{j}]: expected {cols} columns, got {len(r)}")
        b = _real_vector(entry.get("bias"), f"{where}.bias")
        if len(b) != len(rows):
            raise ParseError(f"{where}.bias: expected length {len(rows)}, got {len(b)}")
        layers.append(Layer(np.array(rows, dtype=np.float64).reshape(len(rows), cols), b))
        cols = len(rows)
    return ReluNet(tuple(layers), dim)


def deserialize(data) -> ReluNet:
    return from_dict(loads_json(data))


def save_net(net: ReluNet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(net))


def load_net(path) -> ReluNet:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
