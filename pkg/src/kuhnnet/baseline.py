"""A step-function baseline with optimal error rate and large slopes.

For each band family ``k = 1..2d+1`` the cube minus a union of thin
coordinate bands (the trifling region ``Ω_k``) splits into ``(n+1)^d``
cuboids.  A ramp network ``π_k`` maps each cuboid to its index, a 1-D
memorizer ``φ_k`` maps the index to the target at the cuboid centre, and
the median of the ``2d+1`` channels is returned.  Every point lies outside
at least ``d+1`` of the trifling regions, so the median is close to the
target everywhere, while the ramps inside the bands are very steep.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._assembly import Builder, total
from .builder import BuildReport, _report
from .errors import InputError
from .gadgets import Samples1D, median_layers, sqrt_shape, two_layer_plan
from .kuhn import check_lattice
from .net import ReluNet


@dataclass(frozen=True)
class TriflingSpec:
    d: int
    n: int
    k: int

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise InputError("d and n must be positive integers")
        if not 1 <= self.k <= 2 * self.d + 1:
            raise InputError(f"k must lie in 1..{2 * self.d + 1}")

    @property
    def channels(self) -> int:
        return 2 * self.d + 1


def bands(fam: TriflingSpec) -> list[tuple[float, float]]:
    """Open intervals ``(a_j, b_j)``, ``j = 0..n-1``, of the band family ``k``."""
    c, n, k = fam.channels, fam.n, fam.k
    return [(((k - 1) / c + j) / n, (k / c + j) / n) for j in range(n)]


def in_trifling(fam: TriflingSpec, x) -> bool:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != fam.d:
        raise InputError(f"expected a point of dimension {fam.d}")
    return any(a < xi < b for xi in x for a, b in bands(fam))


def plateaus(fam: TriflingSpec) -> list[tuple[float, float]]:
    """Closed intervals between the bands; ``p_k`` equals ``i`` on the ``i``-th."""
    bs = bands(fam)
    edges = [0.0] + [v for ab in bs for v in ab] + [1.0]
    return [(edges[2 * i], edges[2 * i + 1]) for i in range(fam.n + 1)]


def cuboid_centers(fam: TriflingSpec) -> np.ndarray:
    """Centres of the cuboids in index order (axis 1 varies fastest)."""
    mids = [0.5 * (a + b) for a, b in plateaus(fam)]
    rows = itertools.product(range(fam.n + 1), repeat=fam.d)
    return np.array([[mids[i] for i in reversed(r)] for r in rows])


def _ramp_forms(b: Builder, xi, fam: TriflingSpec):
    slope = fam.n * fam.channels
    return total(slope * (b.relu(xi - a) - b.relu(xi - c)) for a, c in bands(fam))


def build_projection_pk(fam: TriflingSpec) -> ReluNet:
    """Scalar staircase: ``i`` on the ``i``-th plateau, linear on the bands."""
    b = Builder(1)
    p = _ramp_forms(b, b.inputs()[0], fam)
    b.commit()
    return b.finish([p])


def build_pi_k(fam: TriflingSpec) -> ReluNet:
    """``Σ_i (n+1)^(i-1) p_k(x_i)``: the index of the cuboid containing ``x``."""
    b = Builder(fam.d)
    pi = total((fam.n + 1) ** i * _ramp_forms(b, xi, fam) for i, xi in enumerate(b.inputs()))
    b.commit()
    return b.finish([pi])


def sota_bounds(d: int, n: int) -> tuple[int, int]:
    c = sqrt_shape((n + 1) ** d)[0] // 2
    return max((2 * n + 3) * d, 6 * d + 3, 2 * c + 2 * d), 23 * d + 9


def error_bound(nu: float, alpha: float, d: int, n: int) -> float:
    return nu * (d * d / (n * (2 * d + 1))) ** alpha


def lipschitz_bound(nu: float, alpha: float, d: int, n: int) -> float:
    return nu * (n + 1) ** d * (2 * d + 1) * d ** alpha


def build_sota(f, nu: float, alpha: float, d: int, n: int, vectorized: bool = False) -> BuildReport:
    """Median of the ``2d+1`` channels ``φ_k ∘ π_k``.

    ``f`` is a callable (one point at a time, or ``(m, d)`` batches with
    ``vectorized``) or an array of shape ``(2d+1, (n+1)^d)`` holding the
    target at each family's cuboid centres.  The samples are shifted to be
    non-negative and the shift is added back at the output.  ``nu`` and
    ``alpha`` only describe the target; they enter the reported bounds.
    """
    if not (0 < alpha <= 1) or not (nu >= 0):
        raise InputError("need nu >= 0 and alpha in (0, 1]")
    size = check_lattice(d, n)
    specs = [TriflingSpec(d, n, k) for k in range(1, 2 * d + 2)]
    if callable(f):
        table = []
        for s in specs:
            pts = cuboid_centers(s)
            table.append(np.asarray(f(pts), dtype=np.float64).reshape(-1) if vectorized
                         else np.array([float(f(p)) for p in pts]))
        table = np.array(table)
    else:
        table = np.asarray(f, dtype=np.float64)
    if table.shape != (len(specs), size):
        raise InputError(f"expected samples of shape {(len(specs), size)}")
    if not np.isfinite(table).all():
        raise InputError("samples must be finite")
    shift = float(table.min())
    table = table - shift

    b = Builder(d)
    x = b.inputs()
    pis = []
    for idx, s in enumerate(specs):
        last = idx == len(specs) - 1
        pi = total((n + 1) ** i * _ramp_forms(b, xi, s) for i, xi in enumerate(x))
        if not last:
            x = [b.relu(xi) for xi in x]
        pis = [b.relu(p) for p in pis]
        b.commit()
        pis.append(pi)

    idx_axis = np.arange(size, dtype=np.float64)
    M, N = sqrt_shape(size)
    phis = []
    for k, s in enumerate(specs):
        plan = two_layer_plan(Samples1D(idx_axis, table[k]), M, N)
        first = [b.relu(pis[k] - kn) for kn in plan.knots]
        pis = [b.relu(p) if j > k else p for j, p in enumerate(pis)]
        phis = [b.relu(p) for p in phis]
        b.commit()
        second = [b.relu(plan.init[r] + total(plan.jumps[r, i] * first[i] for i in range(len(first))))
                  for r in range(len(plan.init))]
        pis = [b.relu(p) if j > k else p for j, p in enumerate(pis)]
        phis = [b.relu(p) for p in phis]
        b.commit()
        phis.append(total(plan.out[r] * second[r] for r in range(len(second))))

    med = median_layers(b, phis)
    net = b.finish([med + shift])
    bw, bd = sota_bounds(d, n)
    dense = sum(layer.weights.size + layer.bias.size for layer in net.layers)
    return _report(net, "sota", d, n, bw, bd, dense)

