"""Exact piece decomposition of ReLU nets with a scalar input.

Such a net is continuous and piecewise linear.  Propagating affine pieces
layer by layer and splitting wherever a pre-activation changes sign gives
every breakpoint, hence exact slopes and Lipschitz constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .net import ReluNet


@dataclass(frozen=True)
class Pieces:
    breaks: np.ndarray      # sorted, length S-1
    slopes: np.ndarray      # (S, output_dim)
    intercepts: np.ndarray  # (S, output_dim)

    def lipschitz(self) -> float:
        return float(np.abs(self.slopes).max(initial=0.0))


def _probe(lo, hi):
    if np.isfinite(lo) and np.isfinite(hi):
        return 0.5 * (lo + hi)
    if np.isfinite(lo):
        return lo + 1.0
    if np.isfinite(hi):
        return hi - 1.0
    return 0.0


def pieces(net: ReluNet, merge_tol: float = 1e-12) -> Pieces:
    if net.input_dim != 1:
        raise InputError("piece decomposition needs a scalar-input net")
    bounds = np.array([])
    slope = np.ones((1, 1))
    inter = np.zeros((1, 1))
    for layer in net.layers[:-1]:
        pa = slope @ layer.weights.T
        pc = inter @ layer.weights.T + layer.bias
        edges = np.concatenate([[-np.inf], bounds, [np.inf]])
        with np.errstate(divide="ignore", invalid="ignore"):
            roots = -pc / pa
        lo, hi = edges[:-1, None], edges[1:, None]
        ok = (pa != 0) & (roots > lo) & (roots < hi)
        found = np.unique(roots[ok])
        merged = _merge(np.concatenate([bounds, found]), merge_tol)
        new_edges = np.concatenate([[-np.inf], merged, [np.inf]])
        probes = np.array([_probe(a, b) for a, b in zip(new_edges[:-1], new_edges[1:])])
        parent = np.searchsorted(bounds, probes)
        a = pa[parent]
        c = pc[parent]
        active = a * probes[:, None] + c > 0
        slope = np.where(active, a, 0.0)
        inter = np.where(active, c, 0.0)
        bounds = merged
    last = net.layers[-1]
    return Pieces(bounds, slope @ last.weights.T, inter @ last.weights.T + last.bias)


def _merge(points: np.ndarray, tol: float) -> np.ndarray:
    pts = np.sort(points)
    if pts.size == 0:
        return pts
    keep = [pts[0]]
    for p in pts[1:]:
        if p - keep[-1] > tol * max(1.0, abs(p)):
            keep.append(p)
    return np.array(keep)


def exact_lipschitz_1d(net: ReluNet) -> float:
    return pieces(net).lipschitz()
