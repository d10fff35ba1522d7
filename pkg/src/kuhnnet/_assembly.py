"""Layer-by-layer network assembly.

Constructions describe each neuron as an affine form over the neurons of
the layer below.  ``Builder.relu`` queues a neuron for the next layer and
returns the form of its output over that layer; ``Builder.commit`` turns
the queue into a dense layer.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .net import Layer, ReluNet


class Affine:
    """``sum(coef * neuron) + const`` over the neurons of one layer."""

    __slots__ = ("terms", "const", "level")

    def __init__(self, terms=None, const=0.0, level=0):
        self.terms = dict(terms or {})
        self.const = float(const)
        self.level = level

    def _check(self, other):
        if self.terms and other.terms and self.level != other.level:
            raise ValueError("affine forms live on different layers")
        return other.level if other.terms else self.level

    def __add__(self, other):
        if not isinstance(other, Affine):
            return Affine(self.terms, self.const + float(other), self.level)
        level = self._check(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return Affine(terms, self.const + other.const, level)

    __radd__ = __add__

    def __neg__(self):
        return Affine({k: -v for k, v in self.terms.items()}, -self.const, self.level)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        c = float(c)
        return Affine({k: c * v for k, v in self.terms.items()}, c * self.const, self.level)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))


def const(c: float) -> Affine:
    return Affine({}, c, -1)


def total(forms: Iterable[Affine]) -> Affine:
    out = const(0.0)
    for f in forms:
        out = out + f
    return out


class Builder:
    def __init__(self, input_dim: int):
        self.input_dim = input_dim
        self.layers: list[Layer] = []
        self._size = input_dim
        self._pending: list[Affine] = []
        self._keys: dict = {}

    @property
    def level(self) -> int:
        return len(self.layers)

    def inputs(self) -> list[Affine]:
        return [Affine({i: 1.0}, 0.0, 0) for i in range(self.input_dim)]

    def relu(self, form: Affine, key=None) -> Affine:
        """Queue ``σ(form)`` for the next layer; equal keys share one neuron."""
        if form.terms and form.level != self.level:
            raise ValueError("form does not refer to the current layer")
        if key is not None and key in self._keys:
            idx = self._keys[key]
        else:
            idx = len(self._pending)
            self._pending.append(form)
            if key is not None:
                self._keys[key] = idx
        return Affine({idx: 1.0}, 0.0, self.level + 1)

    def pass_nonneg(self, form: Affine) -> Affine:
        return self.relu(form)

    def pass_signed(self, form: Affine) -> Affine:
        return self.relu(form) - self.relu(-form)

    def commit(self) -> None:
        rows = len(self._pending)
        w = np.zeros((rows, self._size))
        b = np.zeros(rows)
        for r, form in enumerate(self._pending):
            for c, v in form.terms.items():
                w[r, c] += v
            b[r] = form.const
        self.layers.append(Layer(w, b))
        self._size = rows
        self._pending = []
        self._keys = {}

    def affine_layer(self, outputs: list[Affine]) -> Layer:
        w = np.zeros((len(outputs), self._size))
        b = np.zeros(len(outputs))
        for r, form in enumerate(outputs):
            if form.terms and form.level != self.level:
                raise ValueError("output form does not refer to the last layer")
            for c, v in form.terms.items():
                w[r, c] += v
            b[r] = form.const
        return Layer(w, b)

    def peek(self, outputs: list[Affine]) -> ReluNet:
        """The net built so far with the given affine outputs, builder untouched."""
        return ReluNet(tuple(self.layers) + (self.affine_layer(outputs),), self.input_dim)

    def finish(self, outputs: list[Affine]) -> ReluNet:
        if self._pending:
            raise ValueError("uncommitted neurons")
        return self.peek(outputs)
