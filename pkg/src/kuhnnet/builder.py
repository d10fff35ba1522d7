"""Kuhn-triangulation approximators: one hat network per lattice point.

The hat at ``y`` is ``σ(1 - max_{even} |z_i - y_i| - max_{odd} |z_i - y_i|)``
in lattice units ``z = n x``, where *even* and *odd* split the axes by the
parity of ``y_i``.  All hats share a first layer of scaled ramps
``σ(±(n x_i - j))``; the two maxima are pairwise trees of ``σ(½(·))``
neurons, so every interior weight is ``0`` or ``±½`` and every interior
bias is zero.  The grid values enter only the output layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._assembly import Affine, Builder, const, total
from .errors import InputError
from .kuhn import SampleGrid, check_lattice, lattice_points
from .net import ReluNet, count_nonzero_params, depth, width
from .report import Check, VerificationReport, flag


def log2_ceil(d: int) -> int:
    return (d - 1).bit_length()


@dataclass(frozen=True, eq=False)
class BuildReport:
    net: ReluNet
    width: int
    depth: int
    nonzero_params: int
    bound_width: int
    bound_depth: int
    bound_params: int
    kind: str = "flat"
    d: int = 0
    n: int = 0
    structure_ok: dict = field(default_factory=dict)
    support: tuple[float, float] | None = None

    def within_bounds(self) -> bool:
        return (self.width <= self.bound_width and self.depth <= self.bound_depth
                and self.nonzero_params <= self.bound_params)

    def checks(self) -> VerificationReport:
        rep = VerificationReport()
        rep.add(Check("width", self.width, self.bound_width))
        rep.add(Check("depth", self.depth, self.bound_depth))
        rep.add(Check("nonzero_params", self.nonzero_params, self.bound_params))
        for clause, ok in self.structure_ok.items():
            rep.add(flag(f"structure_{clause}", ok))
        return rep

    def to_dict(self) -> dict:
        doc = self.checks().to_dict()
        doc["build"] = {"kind": self.kind, "d": self.d, "n": self.n,
                        "support": list(self.support) if self.support else None}
        return doc


def _report(net, kind, d, n, bw, bd, bp, support=None, structure=None) -> BuildReport:
    rep = BuildReport(net, width(net), depth(net), count_nonzero_params(net), bw, bd, bp,
                      kind, d, n, structure or {}, support)
    if not rep.within_bounds():
        raise AssertionError(
            f"{kind} build exceeds its size budget: width {rep.width}/{bw}, "
            f"depth {rep.depth}/{bd}, params {rep.nonzero_params}/{bp}")
    return rep


def encode(f, d: int, n: int, vectorized: bool = False) -> SampleGrid:
    """Sample ``f`` at the lattice ``{0, 1/n, ..., 1}^d``.

    ``f`` is a callable taking one point (or, with ``vectorized``, an
    ``(m, d)`` batch) or an explicit sequence of values in lexicographic
    order.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InputError("n must be a positive integer")
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 1:
        raise InputError("d must be a positive integer")
    check_lattice(d, n)
    if callable(f):
        pts = lattice_points(d, n) / n
        if vectorized:
            vals = np.asarray(f(pts), dtype=np.float64).reshape(-1)
        else:
            vals = np.array([float(f(p)) for p in pts])
    else:
        vals = np.asarray(f, dtype=np.float64).reshape(-1)
    if not np.isfinite(vals).all():
        raise InputError("target produced non-finite samples")
    return SampleGrid(d, n, vals)


# hat blocks

def _ramps(b: Builder, z: list[Affine], needed) -> dict:
    """``|z_i - j|`` as two neurons per needed ``(i, j)``."""
    return {(i, j): b.relu(z[i] - j, key=("p", i, j)) + b.relu(j - z[i], key=("m", i, j))
            for i, j in sorted(needed)}


def _groups(y):
    even = tuple(i for i in range(len(y)) if y[i] % 2 == 0)
    odd = tuple(i for i in range(len(y)) if y[i] % 2 == 1)
    return [[((i, int(y[i])),) for i in even], [((i, int(y[i])),) for i in odd]]


def _tree_level(b: Builder, groups, forms: dict, lone_copies: int) -> tuple[list, dict]:
    """One level of pairwise maxima of non-negative forms, shared across hats by key."""
    new_forms: dict = {}
    new_groups = []
    for hat in groups:
        hat_groups = []
        for g in hat:
            nxt = []
            for p in range(0, len(g) - 1, 2):
                ka, kb = g[p], g[p + 1]
                key = ka + kb
                if key not in new_forms:
                    a, c = forms[ka], forms[kb]
                    new_forms[key] = (b.relu(0.5 * (a + c), key=(key, 0))
                                      + b.relu(0.5 * (a - c), key=(key, 1))
                                      + b.relu(0.5 * (c - a), key=(key, 2)))
                nxt.append(key)
            if len(g) % 2:
                key = g[-1]
                if key not in new_forms:
                    a = forms[key]
                    if lone_copies == 2:
                        new_forms[key] = b.relu(0.5 * a, key=(key, "l0")) + b.relu(0.5 * a, key=(key, "l1"))
                    else:
                        new_forms[key] = b.relu(a, key=(key, "l"))
                nxt.append(key)
            hat_groups.append(nxt)
        new_groups.append(hat_groups)
    return new_groups, new_forms


def _hat_block(b: Builder, z: list[Affine], ys, structured: bool, carry=()):
    """Queue the hat networks for lattice points ``ys`` over lattice coordinates ``z``.

    Returns the hat output forms and the carried forms, both over the last
    layer.  ``carry`` lists ``(form, signed, key)`` triples to pass alongside;
    a key lets a carried value share a neuron with an identical ramp.
    With ``structured`` the block uses only ``0, ±½`` interior weights.
    """
    d = len(z)
    levels = log2_ceil(d)
    needed = {(i, int(y[i])) for y in ys for i in range(d)}
    forms = {(k,): v for k, v in _ramps(b, z, needed).items()}
    consts = [b.relu(const(1.0), key="c0"), b.relu(const(1.0), key="c1")] if structured else []
    carried = _pass(b, carry)
    groups = [_groups(y) for y in ys]
    b.commit()
    for _ in range(levels):
        groups, forms = _tree_level(b, groups, forms, 2 if structured else 1)
        if structured:
            consts = [b.relu(0.5 * (consts[0] + consts[1]), key="c0"),
                      b.relu(0.5 * (consts[0] + consts[1]), key="c1")]
        carried = _pass(b, [(c, s, k) for c, (_, s, k) in zip(carried, carry)])
        b.commit()
    hats = []
    for hat in groups:
        m = [forms[g[0]] if g else const(0.0) for g in hat]
        if structured:
            half = 0.5 * consts[0] - 0.5 * m[0] - 0.5 * m[1]
            hats.append(b.relu(half) + b.relu(half))
        else:
            hats.append(b.relu(1.0 - m[0] - m[1]))
    carried = _pass(b, [(c, s, k) for c, (_, s, k) in zip(carried, carry)])
    b.commit()
    return hats, carried


def _pass(b: Builder, carry):
    return [b.pass_signed(f) if signed else b.relu(f, key=key) for f, signed, key in carry]


def build_hat_net(y, d: int, n: int) -> ReluNet:
    """Hat function at lattice point ``y``, as a net on lattice coordinates."""
    y = tuple(int(v) for v in y)
    if len(y) != d or any(v < 0 or v > n for v in y):
        raise InputError(f"y must be a point of {{0..{n}}}^{d}")
    b = Builder(d)
    hats, _ = _hat_block(b, b.inputs(), [y], structured=True)
    return b.finish(hats)


def _flat(grid: SampleGrid, clamp: bool) -> ReluNet:
    d, n = grid.d, grid.n
    b = Builder(d)
    x = b.inputs()
    if clamp:
        lo = [b.relu(xi, key=("lo", i)) for i, xi in enumerate(x)]
        hi = [b.relu(xi - 1.0, key=("hi", i)) for i, xi in enumerate(x)]
        b.commit()
        x = [a - c for a, c in zip(lo, hi)]
    ys = [tuple(int(v) for v in y) for y in lattice_points(d, n)]
    hats, _ = _hat_block(b, [n * xi for xi in x], ys, structured=True)
    return b.finish([total(float(v) * h for v, h in zip(grid.values, hats))])


def build_approximator(grid: SampleGrid) -> BuildReport:
    """Network realising the Kuhn interpolant of ``grid`` on the unit cube.

    Width at most ``8d(n+1)^d``, depth at most ``ceil(log2 d) + 4`` and at
    most ``16d(n+1)^d`` nonzero parameters; the output vanishes outside
    ``[-1/n, 1 + 1/n]^d``.
    """
    d, n = grid.d, grid.n
    size = check_lattice(d, n)
    net = _flat(grid, clamp=False)
    rep = _report(net, "flat", d, n, 8 * d * size, log2_ceil(d) + 4, 16 * d * size,
                  support=(-1.0 / n, 1.0 + 1.0 / n))
    clauses = structure_flags(net, grid)
    object.__setattr__(rep, "structure_ok", clauses)
    return rep


def build_global(grid: SampleGrid) -> BuildReport:
    """The approximator composed with the clamp ``σ(x) - σ(x - 1)``, so it is
    constant along outward normals of the cube and keeps its modulus on all of R^d."""
    d, n = grid.d, grid.n
    size = check_lattice(d, n)
    net = _flat(grid, clamp=True)
    return _report(net, "global", d, n, 8 * d * size, log2_ceil(d) + 5, 18 * d * size)


def build_approximator_shaped(grid: SampleGrid, m) -> BuildReport:
    """The same interpolant with the hats computed in ``L = len(m)`` consecutive stages.

    Stage ``t`` evaluates ``m[t]`` hats on the lattice coordinates carried
    from the previous stage and adds them into a running sum, carried as a
    single neuron after shifting it by ``Σ|f|`` so it stays non-negative.  Agrees with :func:`build_approximator` on the cube.
    """
    d, n = grid.d, grid.n
    size = check_lattice(d, n)
    m = [int(v) for v in m]
    if not m or any(v < 1 for v in m):
        raise InputError("batch sizes must be positive integers")
    if sum(m) != size:
        raise InputError(f"batch sizes sum to {sum(m)}, expected (n+1)^d = {size}")
    ys = [tuple(int(v) for v in y) for y in lattice_points(d, n)]
    vals = grid.values
    # hats lie in [0, 1], so S + offset stays non-negative and one neuron carries it
    offset = float(np.abs(vals).sum())
    b = Builder(d)
    z = [n * xi for xi in b.inputs()]
    running: Affine | None = None
    start = 0
    for t, count in enumerate(m):
        batch = ys[start:start + count]
        carry = []
        if t + 1 < len(m):
            carry += [(zi, False, ("p", i, 0)) for i, zi in enumerate(z)]
        if running is not None:
            carry.append((running, False, None))
        hats, carried = _hat_block(b, z, batch, structured=False, carry=carry)
        part = total(float(v) * h for v, h in zip(vals[start:start + count], hats))
        if t + 1 < len(m):
            z = carried[:d]
            running = part + (carried[d] if len(carried) > d else offset)
        else:
            running = part + (carried[0] if carried else offset) - offset
        start += count
    net = b.finish([running])
    levels = log2_ceil(d)
    L = len(m)
    return _report(net, "shaped", d, n, 8 * d * max(m) + d + 2, L * (levels + 4),
                   16 * d * size + L * (d + 2))


# structure of the flat build

def _interior(net: ReluNet):
    return net.layers[1:-1]


def structure_flags(net: ReluNet, grid: SampleGrid, rebuilt: ReluNet | None = None) -> dict:
    """Weight-structure clauses of a flat build.

    ``i``: only the output layer changes when one grid value changes;
    ``ii``: interior biases vanish; ``iii``: interior weights lie in
    ``{0, ±½}``; ``iv``: first-layer weights and biases are at most ``n`` in
    magnitude and output weights at most ``max |f|``.
    """
    n = grid.n
    if rebuilt is None:
        rebuilt = _flat(grid.with_value((0,) * grid.d, grid.values[0] + 1.0), clamp=False)
    same_shape = len(net.layers) == len(rebuilt.layers) and all(
        a.weights.shape == c.weights.shape for a, c in zip(net.layers, rebuilt.layers))
    only_last = same_shape and all(
        np.array_equal(a.weights, c.weights) and np.array_equal(a.bias, c.bias)
        for a, c in zip(net.layers[:-1], rebuilt.layers[:-1]))
    inner = _interior(net)
    biases_zero = all(not np.any(layer.bias) for layer in inner)
    halves = all(np.all(np.isin(np.abs(layer.weights), (0.0, 0.5))) for layer in inner)
    first, last = net.layers[0], net.layers[-1]
    fmax = float(np.abs(grid.values).max(initial=0.0))
    small = (float(np.abs(first.weights).max(initial=0.0)) <= n
             and float(np.abs(first.bias).max(initial=0.0)) <= n
             and float(np.abs(last.weights).max(initial=0.0)) <= fmax)
    return {"i": bool(only_last), "ii": bool(biases_zero), "iii": bool(halves), "iv": bool(small)}


def check_structure(report: BuildReport | ReluNet, grid: SampleGrid) -> VerificationReport:
    """Re-check the weight-structure clauses of a (possibly edited) flat build."""
    net = report.net if isinstance(report, BuildReport) else report
    flags = structure_flags(net, grid)
    out = VerificationReport()
    names = {"i": "only the output layer depends on the grid values",
             "ii": "interior biases are zero",
             "iii": "interior weights lie in {0, +-1/2}",
             "iv": "first-layer entries at most n, output weights at most max|f|"}
    for clause, ok in flags.items():
        out.add(flag(f"structure_{clause}", ok, names[clause]))
    return out
