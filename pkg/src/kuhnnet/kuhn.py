"""Reflected Kuhn triangulation of ``[0, n]^d`` and its piecewise-linear interpolant.

Coordinates called *lattice units* live in ``[0, n]^d``; cube coordinates
live in ``[0, 1]^d`` and are multiplied by ``n`` first.  Cells with an odd
coordinate along an axis are mirrored along that axis, so that the
simplices of neighbouring cells match across the shared face.
"""

from __future__ import annotations

import csv
import io
import itertools
from fractions import Fraction
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError, ParseError, ResourceError
from .net import loads_json

GRID_FORMAT = "kuhnnet-grid/1"
DEFAULT_MAX_LATTICE = 10 ** 6


def max_lattice() -> int:
    raw = os.environ.get("KUHNNET_MAX_LATTICE")
    if raw is None:
        return DEFAULT_MAX_LATTICE
    try:
        cap = int(raw)
    except ValueError:
        raise InputError(f"KUHNNET_MAX_LATTICE must be an integer, got {raw!r}") from None
    if cap < 1:
        raise InputError("KUHNNET_MAX_LATTICE must be positive")
    return cap


def check_lattice(d: int, n: int) -> int:
    if d < 1 or n < 1:
        raise InputError("d and n must be positive integers")
    size = (n + 1) ** d
    cap = max_lattice()
    if size > cap:
        raise ResourceError(f"(n+1)^d = {size} lattice points exceeds the cap of {cap}")
    return size


@dataclass(frozen=True, eq=False)
class SampleGrid:
    """Values at the lattice points ``j/n``, flat in lexicographic order."""

    d: int
    n: int
    values: np.ndarray

    def __post_init__(self):
        size = check_lattice(self.d, self.n)
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.size != size:
            raise InputError(f"expected {size} values for d={self.d}, n={self.n}, got {v.size}")
        if not np.isfinite(v).all():
            raise InputError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n + 1,) * self.d

    def tensor(self) -> np.ndarray:
        return self.values.reshape(self.shape)

    def indices(self) -> np.ndarray:
        """Lattice multi-indices, one row per value."""
        return lattice_points(self.d, self.n)

    def points(self) -> np.ndarray:
        return self.indices() / self.n

    def __getitem__(self, index) -> float:
        return float(self.tensor()[tuple(index)])

    def with_value(self, index, value) -> "SampleGrid":
        t = self.tensor().copy()
        t[tuple(index)] = value
        return SampleGrid(self.d, self.n, t.reshape(-1))


def lattice_points(d: int, n: int) -> np.ndarray:
    return np.array(list(itertools.product(range(n + 1), repeat=d)), dtype=np.int64).reshape(-1, d)


@dataclass(frozen=True)
class KuhnSimplexRef:
    """One simplex: a unit cell, its per-axis mirroring, and an axis order (0-based)."""

    cell: tuple[int, ...]
    perm: tuple[int, ...]

    @property
    def reflection(self) -> tuple[int, ...]:
        return tuple(c % 2 for c in self.cell)


def hat_value(y, x) -> np.ndarray:
    """Hat function centred at lattice point ``y``, at ``x`` in lattice units.

    ``x`` may be a single point or a batch of shape ``(m, d)``.
    """
    y = np.asarray(y)
    x = np.asarray(x, dtype=np.float64)
    gaps = np.abs(x - y)
    even = (y % 2) == 0
    me = gaps[..., even].max(axis=-1, initial=0.0)
    mo = gaps[..., ~even].max(axis=-1, initial=0.0)
    return np.maximum(1.0 - me - mo, 0.0)


def _cells_and_local(z: np.ndarray, n: int):
    cell = np.clip(np.floor(z), 0, n - 1).astype(np.int64)
    odd = (cell % 2) == 1
    u = np.where(odd, cell + 1 - z, z - cell)
    return cell, odd, u


def _check_lattice_domain(z, n):
    if not np.isfinite(z).all() or np.any(z < 0) or np.any(z > n):
        raise DomainError(f"point outside [0, {n}]^d")


def locate_simplex(x, n: int) -> KuhnSimplexRef:
    """A simplex containing ``x`` (lattice units); ties favour the smaller axis."""
    z = np.asarray(x, dtype=np.float64).reshape(-1)
    _check_lattice_domain(z, n)
    cell, _, u = _cells_and_local(z, n)
    perm = np.argsort(-u, kind="stable")
    return KuhnSimplexRef(tuple(int(c) for c in cell), tuple(int(p) for p in perm))


def simplex_vertices(ref: KuhnSimplexRef) -> list[tuple[int, ...]]:
    cell = np.array(ref.cell)
    odd = (cell % 2) == 1
    local = np.zeros(len(cell), dtype=np.int64)
    out = []
    for k in range(len(cell) + 1):
        if k:
            local[ref.perm[k - 1]] = 1
        out.append(tuple(int(v) for v in np.where(odd, cell + 1 - local, cell + local)))
    return out


def _as_batch(x, d):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = x.reshape(-1, d) if not single else x[None, :]
    if x.shape[1] != d:
        raise InputError(f"expected points of dimension {d}")
    return x, single


def cpwl_eval(grid: SampleGrid, x, method: str = "barycentric"):
    """Interpolant of ``grid`` at cube points ``x`` (single point or batch).

    ``method`` is ``"barycentric"`` (locate the simplex, combine its vertex
    values) or ``"hat"`` (sum of values times hat functions).
    """
    pts, single = _as_batch(x, grid.d)
    if not np.isfinite(pts).all() or np.any(pts < 0) or np.any(pts > 1):
        raise DomainError("cpwl_eval is defined on the unit cube")
    z = pts * grid.n
    if method == "barycentric":
        out = _barycentric(grid, z)
    elif method == "hat":
        out = _hat_sum(grid, z)
    else:
        raise InputError(f"unknown method {method!r}")
    return float(out[0]) if single else out


def _barycentric(grid: SampleGrid, z: np.ndarray) -> np.ndarray:
    n, d = grid.n, grid.d
    table = grid.tensor()
    cell, odd, u = _cells_and_local(z, n)
    perm = np.argsort(-u, axis=1, kind="stable")
    us = np.take_along_axis(u, perm, axis=1)
    rows = np.arange(len(z))
    local = np.zeros_like(cell)
    origin = np.where(odd, cell + 1, cell)
    out = (1.0 - us[:, 0]) * table[tuple(origin.T)]
    for k in range(d):
        local[rows, perm[:, k]] = 1
        vertex = np.where(odd, cell + 1 - local, cell + local)
        lam = us[:, k] - (us[:, k + 1] if k + 1 < d else 0.0)
        out = out + lam * table[tuple(vertex.T)]
    return out


def _hat_sum(grid: SampleGrid, z: np.ndarray) -> np.ndarray:
    out = np.zeros(len(z))
    for y, v in zip(grid.indices(), grid.values):
        if v != 0.0:
            out += v * hat_value(y, z)
    return out


def exact_lipschitz_l1(grid: SampleGrid) -> float:
    """Lipschitz constant of the interpolant with respect to the l1 norm.

    On each simplex the gradient's entries are differences along chain
    edges, all of which are axis-parallel lattice edges, and every such
    edge lies on some chain.  The result is the correctly rounded value of
    ``n * max |difference|`` over the stored floats: near-maximal edges are
    re-evaluated in rational arithmetic.
    """
    t = grid.tensor()
    diffs = [np.abs(np.diff(t, axis=axis)).reshape(-1) for axis in range(grid.d) if t.shape[axis] > 1]
    if not diffs:
        return 0.0
    best = max(float(dd.max()) for dd in diffs)
    if best == 0.0:
        return 0.0
    exact = Fraction(0)
    for axis in range(grid.d):
        lo = np.take(t, range(grid.n), axis=axis).reshape(-1)
        hi = np.take(t, range(1, grid.n + 1), axis=axis).reshape(-1)
        near = np.flatnonzero(np.abs(hi - lo) >= best * (1 - 1e-9))
        for i in near:
            exact = max(exact, abs(Fraction(float(hi[i])) - Fraction(float(lo[i]))))
    return float(grid.n * exact)


# input and output

def grid_to_dict(grid: SampleGrid) -> dict:
    return {"format": GRID_FORMAT, "d": grid.d, "n": grid.n, "values": grid.values.tolist()}


def dumps_grid(grid: SampleGrid) -> str:
    return json.dumps(grid_to_dict(grid), allow_nan=False) + "\n"


def grid_from_dict(doc) -> SampleGrid:
    if not isinstance(doc, dict) or doc.get("format") != GRID_FORMAT:
        raise ParseError(f"format: expected {GRID_FORMAT!r}")
    d, n, values = doc.get("d"), doc.get("n"), doc.get("values")
    for name, v in (("d", d), ("n", n)):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ParseError(f"{name}: expected a positive integer")
    if not isinstance(values, list) or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in values):
        raise ParseError("values: expected a list of numbers")
    if len(values) != (n + 1) ** d:
        raise ParseError(f"values: expected {(n + 1) ** d} entries, got {len(values)}")
    return SampleGrid(d, n, values)


def loads_grid(data) -> SampleGrid:
    return grid_from_dict(loads_json(data))


def dumps_grid_csv(grid: SampleGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"i{k + 1}" for k in range(grid.d)] + ["value"])
    for idx, v in zip(grid.indices(), grid.values):
        w.writerow([int(i) for i in idx] + [repr(float(v))])
    return buf.getvalue()


def loads_grid_csv(text: str) -> SampleGrid:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    if not rows:
        raise ParseError("grid CSV has no data rows")
    d = len(rows[0]) - 1
    if d < 1:
        raise ParseError("grid CSV rows need index columns and a value")
    entries = {}
    for line, r in enumerate(rows, 1):
        if len(r) != d + 1:
            raise ParseError(f"row {line}: expected {d + 1} columns")
        try:
            idx = tuple(int(c) for c in r[:d])
            val = float(r[d])
        except ValueError:
            raise ParseError(f"row {line}: malformed entry") from None
        if not np.isfinite(val):
            raise ParseError(f"row {line}: non-finite value")
        entries[idx] = val
    n = max(max(i) for i in entries)
    if n < 1 or len(entries) != (n + 1) ** d or min(min(i) for i in entries) < 0:
        raise ParseError("grid CSV must list every lattice point of {0..n}^d exactly once")
    values = [entries[tuple(int(i) for i in idx)] for idx in lattice_points(d, n)]
    return SampleGrid(d, n, values)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def load_grid(path) -> SampleGrid:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if str(path).lower().endswith(".csv"):
        return loads_grid_csv(text)
    return loads_grid(text)
